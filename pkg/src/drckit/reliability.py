"""Markov reliability models: MTTDL of flat vs. hierarchical placement.

Chains are hard-wired to the nine-node, six-data-block configuration:
states count available nodes (9 healthy .. 5 = data loss, absorbing).
Independent failures move state i to i-1 at rate i*lambda1.  Correlated
(power-outage) failures act only from the all-healthy state: both
placements add 9*lambda2 to the 9->8 transition; hierarchical placement,
with three co-located blocks per rack, additionally jumps 9->7 at
9*lambda2^2 and 9->6 at 3*lambda2^3.

Repair of a single failed node runs at the cross-rack bandwidth divided
by the traffic needed per unit of repaired data: 8/3 units for flat
placement (minimum-bandwidth helper transfer) and 2 units for
hierarchical placement (layered repair).  With several nodes down,
repair falls back to plain k-block reconstruction (6 units).

Unit convention, chosen to reproduce the reference MTTDL tables: rates
are per year with a 365.25-day year, and bandwidth converts to TiB/year
with 1 TiB = 2^40 bytes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DrckitError, ParameterError

FLAT = "flat"
HIERARCHICAL = "hierarchical"

N_NODES = 9
K_BLOCKS = 6

SECONDS_PER_YEAR = 365.25 * 86400.0
TIB = float(1 << 40)

REPAIR_UNITS_FLAT = 8.0 / 3.0    # (n-1)/(n-k) for (9,6)
REPAIR_UNITS_HIER = 2.0          # (r-1)/(r - floor(kr/n)) for (9,6,3)
REPAIR_UNITS_MULTI = float(K_BLOCKS)


def gamma_tib_per_year(gamma_gbps: float) -> float:
    """Cross-rack bandwidth in TiB/year from a nominal rate in Gb/s."""
    return gamma_gbps * 1e9 / 8.0 * SECONDS_PER_YEAR / TIB


@dataclass(frozen=True)
class ReliabilityScenario:
    placement: str
    correlated: bool
    mttf_years: float                 # 1 / lambda1
    lambda2_per_year: float = 0.005
    gamma_gbps: float = 1.0
    node_capacity_tib: float = 1.0

    def __post_init__(self):
        if self.placement not in (FLAT, HIERARCHICAL):
            raise ParameterError(f"unknown placement {self.placement!r}")
        if self.mttf_years <= 0 or self.gamma_gbps <= 0 or self.node_capacity_tib <= 0:
            raise ParameterError("mttf, gamma, and capacity must be positive")
        if self.lambda2_per_year < 0:
            raise ParameterError("lambda2 must be nonnegative")


@dataclass
class MarkovModel:
    states: list[int]          # [9, 8, 7, 6, 5]; the last is absorbing
    rate: np.ndarray           # generator matrix, transitions per year
    lambda1: float
    lambda2: float
    repair_single: float       # mu_f or mu_h
    repair_multi: float        # mu'

    def rate_between(self, i: int, j: int) -> float:
        return float(self.rate[self.states.index(i), self.states.index(j)])


def build_chain(scenario: ReliabilityScenario) -> MarkovModel:
    lam1 = 1.0 / scenario.mttf_years
    lam2 = scenario.lambda2_per_year if scenario.correlated else 0.0
    gamma = gamma_tib_per_year(scenario.gamma_gbps)
    cap = scenario.node_capacity_tib
    units = REPAIR_UNITS_FLAT if scenario.placement == FLAT else REPAIR_UNITS_HIER
    mu_single = gamma / (units * cap)
    mu_multi = gamma / (REPAIR_UNITS_MULTI * cap)

    states = [9, 8, 7, 6, 5]
    idx = {s: i for i, s in enumerate(states)}
    q = np.zeros((5, 5), dtype=float)

    for i in range(6, 10):
        q[idx[i], idx[i - 1]] += i * lam1
    q[idx[9], idx[8]] += 9 * lam2
    if scenario.placement == HIERARCHICAL:
        q[idx[9], idx[7]] += 9 * lam2 ** 2
        q[idx[9], idx[6]] += 3 * lam2 ** 3

    q[idx[8], idx[9]] += mu_single
    q[idx[7], idx[8]] += mu_multi
    q[idx[6], idx[7]] += mu_multi

    for i in range(5):
        q[i, i] = -q[i].sum()
    # state 5 is absorbing: no outgoing transitions
    assert not q[idx[5]].any()

    return MarkovModel(
        states=states, rate=q, lambda1=lam1, lambda2=lam2,
        repair_single=mu_single, repair_multi=mu_multi,
    )


def mttdl(model: MarkovModel) -> float:
    """Expected years from the all-healthy state to absorption, by exact
    linear solve of the first-passage equations."""
    transient = slice(0, 4)
    m = model.rate[transient, transient]
    try:
        times = np.linalg.solve(-m, np.ones(4))
    except np.linalg.LinAlgError as e:
        raise DrckitError(f"markov model is singular: {e}") from e
    if not np.all(np.isfinite(times)):
        raise DrckitError("markov solve produced non-finite times")
    return float(times[0])


def mttdl_for(placement: str, correlated: bool, mttf_years: float,
              gamma_gbps: float, lambda2_per_year: float = 0.005,
              node_capacity_tib: float = 1.0) -> float:
    scenario = ReliabilityScenario(
        placement=placement, correlated=correlated, mttf_years=mttf_years,
        lambda2_per_year=lambda2_per_year, gamma_gbps=gamma_gbps,
        node_capacity_tib=node_capacity_tib,
    )
    return mttdl(build_chain(scenario))


def mttdl_table(mttf_grid, gamma_grid, lambda2_per_year: float = 0.005,
                node_capacity_tib: float = 1.0) -> list[dict]:
    """Four placement/correlation combinations per (1/lambda1, gamma) point."""
    mttf_grid = list(mttf_grid)
    gamma_grid = list(gamma_grid)
    if not mttf_grid or not gamma_grid:
        raise ParameterError("mttdl grid is empty")
    rows = []
    for mttf in mttf_grid:
        for gamma in gamma_grid:
            for placement in (FLAT, HIERARCHICAL):
                for correlated in (False, True):
                    value = mttdl_for(
                        placement, correlated, mttf, gamma,
                        lambda2_per_year, node_capacity_tib,
                    )
                    rows.append({
                        "placement": placement,
                        "correlated": "yes" if correlated else "no",
                        "inv_lambda1_years": mttf,
                        "gamma_gbps": gamma,
                        "mttdl_years": value,
                    })
    return rows


def table_to_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["placement", "correlated", "inv_lambda1_years", "gamma_gbps", "mttdl_years"])
    for row in rows:
        w.writerow([
            row["placement"], row["correlated"], row["inv_lambda1_years"],
            row["gamma_gbps"], f"{row['mttdl_years']:.2E}",
        ])
    return out.getvalue()
