"""Double regenerating codes: constructions, repair plans, validation.

Two executable families are built here, plus the plain RS code used as a
baseline.  Both DRC families split every block into ``s`` subblocks and
run one systematic MDS code per subblock set (set t couples the t-th
subblock of every block), so the stripe is MDS iff each per-set code is.

Family 1 (n, k, n/(n-k)): s = n-k.  A single-failure repair is driven by
s linear "checks", each a combination of the per-set parity identities.
The checks are tuned so that in every non-local rack all nodes except
the relayer contribute through one encoded subblock, reused (scaled or
zeroed) across checks; the target cancels everything but the failed
node's terms and solves an s x s system.  Coefficients are derived per
failure scenario by a nullspace solve and frozen into the spec.

Family 2 (3z, 2z-1, 3): s = 2.  Each failed subblock is rebuilt from the
z-1 same-set subblocks in the local rack plus the z same-set subblocks
of one helper rack; helper nodes forward raw subblocks and the relayer
collapses its rack's share into a single subblock.

Parity-block repair uses the same machinery: the per-set codes make no
structural distinction between data and parity symbols beyond the
generator rows, so the scenario solver simply runs with the failed
node's symbols as the unknowns.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np

from . import engine, gf256
from .engine import TARGET, StripeLayout, TrafficReport, actor_name
from .errors import (
    ConstructionError,
    GeometryError,
    InsufficientDataError,
    MdsViolationError,
    ParameterError,
    UnsupportedScenarioError,
)
from .stripe import (
    DATA,
    PARITY,
    Block,
    StripeGeometry,
    assemble_block,
    subblock_view,
)

FAMILY_RS = "rs"
FAMILY_MSR = "msr"
FAMILY_F1 = "drc1"
FAMILY_F2 = "drc2"

EXECUTABLE_FAMILIES = (FAMILY_RS, FAMILY_F1, FAMILY_F2)

_MAX_SEEDS = 64


@dataclass
class Send:
    """One node encodes ``rows`` over its own stored subblocks and ships the
    result to ``dest`` (a relayer node id, or TARGET)."""

    node: int
    rows: np.ndarray
    dest: int


@dataclass
class Relay:
    """A relayer combines gathered subblocks into its cross-rack shipment.

    ``inputs`` name (source node, row index) pairs referring to Send
    outputs; ``matrix`` is (outputs x len(inputs)).
    """

    node: int
    inputs: list[tuple[int, int]]
    matrix: np.ndarray


@dataclass
class RepairPlan:
    family: str
    n: int
    k: int
    r: int
    subblocks: int
    failed_index: int
    target_rack: int
    relayers: dict[int, int]
    sends: list[Send]
    relays: list[Relay]
    decode_inputs: list[tuple[str, int, int]]  # ("relay", node, out) | ("send", node, row)
    decode_matrix: np.ndarray

    @property
    def target(self) -> int:
        """Slot of the replacement node; it takes over the failed block's
        place in the failed block's rack."""
        return self.failed_index


@dataclass
class CodeSpec:
    family: str
    n: int
    k: int
    r: int
    subblocks: int
    generators: list[np.ndarray] | None = None
    repair_tables: dict[int, RepairPlan] | None = None
    seed: int = 0

    @property
    def name(self) -> str:
        label = {FAMILY_RS: "RS", FAMILY_MSR: "MSR", FAMILY_F1: "DRC", FAMILY_F2: "DRC"}[self.family]
        return f"{label}({self.n},{self.k},{self.r})"

    @property
    def nodes_per_rack(self) -> int:
        return self.n // self.r

    def rack_of(self, node: int) -> int:
        return node // self.nodes_per_rack

    def rack_nodes(self, rack: int) -> list[int]:
        w = self.nodes_per_rack
        return list(range(rack * w, (rack + 1) * w))

    def full_matrix(self, t: int) -> np.ndarray:
        """(n x k) symbol matrix of subblock set t: identity for data rows,
        generator rows for parity."""
        return np.concatenate([np.eye(self.k, dtype=np.uint8), self.generators[t]], axis=0)


def _validate_params(n: int, k: int, r: int) -> None:
    if k < 1 or k >= n:
        raise ParameterError(f"need 1 <= k < n, got (n={n}, k={k})")
    if n % r:
        raise ParameterError(f"n={n} must be divisible by r={r}")
    w = n // r
    if w > k or w > n - k:
        raise ParameterError(
            f"(n={n}, k={k}, r={r}) violates n/r <= k and n/r <= n-k"
        )


def _seeded_cauchy(seed: int, t: int, rows: int, cols: int) -> np.ndarray:
    rng = random.Random((seed << 8) | t)
    pts = rng.sample(range(256), rows + cols)
    return gf256.cauchy_matrix(pts[:rows], pts[rows:])


def _gf_dot(a: np.ndarray, b: np.ndarray) -> int:
    acc = 0
    for x, y in zip(a, b):
        acc ^= int(gf256.MUL[int(x), int(y)])
    return acc


class _ScenarioSolver:
    """Derives the per-failure check coefficients for Family 1."""

    def __init__(self, n: int, k: int, gens: list[np.ndarray]):
        self.n = n
        self.k = k
        self.m = n - k
        self.r = n // self.m
        self.gens = gens
        self._units = np.eye(self.m, dtype=np.uint8)

    def rack_nodes(self, rack: int) -> list[int]:
        return list(range(rack * self.m, (rack + 1) * self.m))

    def col(self, t: int, node: int) -> np.ndarray:
        """Coefficient column of node's set-t symbol inside the set-t parity
        identities: generator column for data, unit vector for parity."""
        if node < self.k:
            return self.gens[t][:, node]
        return self._units[node - self.k]

    def v(self, w: np.ndarray, node: int) -> np.ndarray:
        """Node's coefficient vector (over its s subblocks) in check ``w``."""
        return np.array(
            [_gf_dot(w[t], self.col(t, node)) for t in range(self.m)], dtype=np.uint8
        )

    @staticmethod
    def _solution_basis(eqs: list[np.ndarray], nvars: int) -> np.ndarray:
        if not eqs:
            return np.eye(nvars, dtype=np.uint8)
        return gf256.mat_nullspace(np.array(eqs, dtype=np.uint8))

    @staticmethod
    def _candidates(basis: np.ndarray) -> list[np.ndarray]:
        cands = []
        if basis.shape[0] > 1:
            acc = basis[0].copy()
            for row in basis[1:]:
                acc = acc ^ row
            cands.append(acc)
        cands.extend(basis)
        for i in range(basis.shape[0]):
            for j in range(i + 1, basis.shape[0]):
                cands.append(basis[i] ^ basis[j])
        return [c for c in cands if c.any()]

    def solve(self, failed: int):
        """Return (checks, lambdas, roles) for one failure scenario, or None
        if no candidate assignment passes the rank filters."""
        m, r, k = self.m, self.r, self.k
        rack_of = lambda i: i // m
        rho_f = rack_of(failed)
        nonlocal_racks = [rho for rho in range(r) if rho != rho_f]
        relayers = {rho: self.rack_nodes(rho)[0] for rho in nonlocal_racks}
        parity_rack = r - 1
        rho_star = parity_rack if parity_rack != rho_f else nonlocal_racks[0]
        star_relayer = relayers[rho_star]
        star_mates = [j for j in self.rack_nodes(rho_star) if j != star_relayer]
        aligned = [
            j
            for rho in nonlocal_racks
            if rho != rho_star
            for j in self.rack_nodes(rho)
            if j != relayers[rho]
        ]
        local_mates = [j for j in self.rack_nodes(rho_f) if j != failed]
        roles = {
            "rho_f": rho_f,
            "rho_star": rho_star,
            "relayers": relayers,
            "star_mates": star_mates,
            "aligned": aligned,
            "local_mates": local_mates,
        }

        nunk = m * m

        def zero_rows(node: int) -> list[np.ndarray]:
            rows = []
            for t in range(m):
                row = np.zeros(nunk, dtype=np.uint8)
                row[t * m : (t + 1) * m] = self.col(t, node)
                rows.append(row)
            return rows

        # check 1: vanish at every star mate
        eqs = []
        for s in star_mates:
            eqs.extend(zero_rows(s))
        basis = self._solution_basis(eqs, nunk)
        w1 = None
        for cand in self._candidates(basis):
            w = cand.reshape(m, m)
            if not self.v(w, failed).any():
                continue
            if any(not self.v(w, j).any() for j in aligned):
                continue
            w1 = w
            break
        if w1 is None:
            return None

        checks = [w1]
        lambdas = {j: [1] for j in aligned}
        wrows = [self.v(w1, failed)]
        refs = {j: self.v(w1, j) for j in aligned}

        for s_u in star_mates:
            nvars = nunk + len(aligned)
            eqs = []
            for s in star_mates:
                if s == s_u:
                    continue
                for row in zero_rows(s):
                    full = np.zeros(nvars, dtype=np.uint8)
                    full[:nunk] = row
                    eqs.append(full)
            for j_idx, j in enumerate(aligned):
                ref = refs[j]
                for t in range(m):
                    full = np.zeros(nvars, dtype=np.uint8)
                    full[t * m : (t + 1) * m] = self.col(t, j)
                    full[nunk + j_idx] = ref[t]
                    eqs.append(full)
            basis = self._solution_basis(eqs, nvars)
            chosen = None
            for cand in self._candidates(basis):
                w = cand[:nunk].reshape(m, m)
                if not self.v(w, s_u).any():
                    continue
                wrow = self.v(w, failed)
                stack = np.array(wrows + [wrow], dtype=np.uint8)
                if gf256.mat_rank(stack) != len(wrows) + 1:
                    continue
                chosen = (w, cand[nunk:])
                break
            if chosen is None:
                return None
            w, lam = chosen
            checks.append(w)
            wrows.append(self.v(w, failed))
            for j_idx, j in enumerate(aligned):
                lambdas[j].append(int(lam[j_idx]))

        wmat = np.array(wrows, dtype=np.uint8)
        try:
            w_inv = gf256.mat_inv(wmat)
        except gf256.SingularMatrixError:
            return None
        return checks, lambdas, roles, w_inv


def _build_f1_plan(solver: _ScenarioSolver, failed: int) -> RepairPlan | None:
    res = solver.solve(failed)
    if res is None:
        return None
    checks, lambdas, roles, w_inv = res
    m = solver.m
    n, k, r = solver.n, solver.k, solver.r
    relayers = roles["relayers"]
    rho_f = roles["rho_f"]

    sends: list[Send] = []
    relays: list[Relay] = []

    for j in roles["local_mates"]:
        rows = np.array([solver.v(w, j) for w in checks], dtype=np.uint8)
        sends.append(Send(node=j, rows=rows, dest=TARGET))

    star_sched = {s: c for c, s in enumerate(roles["star_mates"], start=1)}

    for rho in sorted(relayers):
        nu = relayers[rho]
        own = np.array([solver.v(w, nu) for w in checks], dtype=np.uint8)
        sends.append(Send(node=nu, rows=own, dest=nu))
        inputs = [(nu, c) for c in range(m)]
        cols = [np.eye(m, dtype=np.uint8)[:, c] for c in range(m)]
        mates = [j for j in solver.rack_nodes(rho) if j != nu]
        for j in mates:
            if rho == roles["rho_star"]:
                row = solver.v(checks[star_sched[j]], j)
                scales = np.zeros(m, dtype=np.uint8)
                scales[star_sched[j]] = 1
            else:
                row = solver.v(checks[0], j)
                scales = np.array(lambdas[j], dtype=np.uint8)
            sends.append(Send(node=j, rows=row.reshape(1, -1), dest=nu))
            inputs.append((j, 0))
            cols.append(scales)
        matrix = np.stack(cols, axis=1)
        relays.append(Relay(node=nu, inputs=inputs, matrix=matrix))

    decode_inputs: list[tuple[str, int, int]] = []
    cols = []
    for relay in relays:
        for c in range(m):
            decode_inputs.append(("relay", relay.node, c))
            cols.append(w_inv[:, c])
    for j in roles["local_mates"]:
        for c in range(m):
            decode_inputs.append(("send", j, c))
            cols.append(w_inv[:, c])
    decode_matrix = np.stack(cols, axis=1)

    return RepairPlan(
        family=FAMILY_F1,
        n=n,
        k=k,
        r=r,
        subblocks=m,
        failed_index=failed,
        target_rack=rho_f,
        relayers=dict(sorted(relayers.items())),
        sends=sends,
        relays=relays,
        decode_inputs=decode_inputs,
        decode_matrix=decode_matrix,
    )


def _build_f2_plan(n: int, k: int, gens: list[np.ndarray], failed: int) -> RepairPlan:
    z = n // 3
    w = z  # nodes per rack
    rack_of = lambda i: i // w
    rack_nodes = lambda rho: list(range(rho * w, (rho + 1) * w))
    rho_f = rack_of(failed)
    helpers = [rho for rho in range(3) if rho != rho_f]
    local_mates = [j for j in rack_nodes(rho_f) if j != failed]

    full = [
        np.concatenate([np.eye(k, dtype=np.uint8), gens[t]], axis=0) for t in range(2)
    ]

    sends: list[Send] = []
    relays: list[Relay] = []
    ident = np.eye(2, dtype=np.uint8)

    for j in local_mates:
        sends.append(Send(node=j, rows=ident.copy(), dest=TARGET))

    local_coeff = np.zeros((2, len(local_mates)), dtype=np.uint8)

    for t, rho in enumerate(helpers):
        nu = rack_nodes(rho)[0]
        chosen = local_mates + rack_nodes(rho)
        sub = np.array([full[t][j] for j in chosen], dtype=np.uint8)
        # failed set-t symbol as a combination of the chosen k symbols
        coeff = gf256.mat_solve(sub.T, full[t][failed])
        for li in range(len(local_mates)):
            local_coeff[t, li] = coeff[li]
        helper_coeff = coeff[len(local_mates):]

        row_t = ident[t].reshape(1, -1)
        sends.append(Send(node=nu, rows=row_t.copy(), dest=nu))
        inputs = [(nu, 0)]
        scalars = [int(helper_coeff[0])]
        for pos, j in enumerate(rack_nodes(rho)[1:], start=1):
            sends.append(Send(node=j, rows=row_t.copy(), dest=nu))
            inputs.append((j, 0))
            scalars.append(int(helper_coeff[pos]))
        relays.append(
            Relay(node=nu, inputs=inputs, matrix=np.array([scalars], dtype=np.uint8))
        )

    decode_inputs: list[tuple[str, int, int]] = []
    cols = []
    set_of_relay = {relays[t].node: t for t in range(2)}
    for relay in sorted(relays, key=lambda rl: rl.node):
        t = set_of_relay[relay.node]
        decode_inputs.append(("relay", relay.node, 0))
        cols.append(ident[:, t])
    for li, j in enumerate(local_mates):
        for sb in range(2):
            decode_inputs.append(("send", j, sb))
            col = np.zeros(2, dtype=np.uint8)
            col[sb] = local_coeff[sb, li]
            cols.append(col)
    decode_matrix = np.stack(cols, axis=1)

    relayers = {rack_of(rl.node): rl.node for rl in relays}
    return RepairPlan(
        family=FAMILY_F2,
        n=n,
        k=k,
        r=3,
        subblocks=2,
        failed_index=failed,
        target_rack=rho_f,
        relayers=dict(sorted(relayers.items())),
        sends=sends,
        relays=sorted(relays, key=lambda rl: rl.node),
        decode_inputs=decode_inputs,
        decode_matrix=decode_matrix,
    )


def _build_rs_plan(n: int, k: int, r: int, gen: np.ndarray, failed: int) -> RepairPlan:
    w = n // r
    rack_of = lambda i: i // w
    rho_f = rack_of(failed)
    local = [j for j in range(rho_f * w, (rho_f + 1) * w) if j != failed]
    cross = [j for j in range(n) if rack_of(j) != rho_f]
    sources = (local + cross)[:k]

    full = np.concatenate([np.eye(k, dtype=np.uint8), gen], axis=0)
    sub = np.array([full[j] for j in sources], dtype=np.uint8)
    coeff = gf256.mat_solve(sub.T, full[failed])

    one = np.array([[1]], dtype=np.uint8)
    sends = [Send(node=j, rows=one.copy(), dest=TARGET) for j in sources]
    decode_inputs = [("send", j, 0) for j in sources]
    decode_matrix = coeff.reshape(1, -1)
    return RepairPlan(
        family=FAMILY_RS,
        n=n,
        k=k,
        r=r,
        subblocks=1,
        failed_index=failed,
        target_rack=rho_f,
        relayers={},
        sends=sends,
        relays=[],
        decode_inputs=decode_inputs,
        decode_matrix=decode_matrix,
    )


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def construct_f1(n: int, k: int) -> CodeSpec:
    """Family 1 code DRC(n, k, n/(n-k)) with derived repair coefficients."""
    m = n - k
    if m < 2:
        raise ParameterError(
            f"family 1 needs n-k >= 2 subblocks per block, got n-k={m}"
        )
    if n % m:
        raise ParameterError(
            f"family 1 needs n divisible by n-k; ({n},{k}) gives n/(n-k)={n}/{m}"
        )
    r = n // m
    if r < 2:
        raise ParameterError(f"family 1 needs at least 2 racks, got r={r}")
    _validate_params(n, k, r)

    last_error = "no seed produced a full set of repair plans"
    for seed in range(_MAX_SEEDS):
        gens = [_seeded_cauchy(seed, t, m, k) for t in range(m)]
        solver = _ScenarioSolver(n, k, gens)
        tables = {}
        ok = True
        for failed in range(n):
            plan = _build_f1_plan(solver, failed)
            if plan is None:
                ok = False
                last_error = f"seed {seed}: no aligned checks for failure {failed}"
                break
            tables[failed] = plan
        if not ok:
            continue
        spec = CodeSpec(
            family=FAMILY_F1, n=n, k=k, r=r, subblocks=m,
            generators=gens, repair_tables=tables, seed=seed,
        )
        report = validate_code(spec)
        if report.passed:
            return spec
        last_error = f"seed {seed}: validation failed: {report.summary()}"
    raise ConstructionError(f"family 1 ({n},{k},{r}): {last_error}")


@lru_cache(maxsize=None)
def construct_f2(z: int) -> CodeSpec:
    """Family 2 code DRC(3z, 2z-1, 3)."""
    if z < 2:
        raise ParameterError(f"family 2 needs z >= 2, got z={z}")
    n, k = 3 * z, 2 * z - 1
    _validate_params(n, k, 3)
    for seed in range(_MAX_SEEDS):
        gens = [_seeded_cauchy(seed, t, z + 1, k) for t in range(2)]
        tables = {failed: _build_f2_plan(n, k, gens, failed) for failed in range(n)}
        spec = CodeSpec(
            family=FAMILY_F2, n=n, k=k, r=3, subblocks=2,
            generators=gens, repair_tables=tables, seed=seed,
        )
        report = validate_code(spec)
        if report.passed:
            return spec
    raise ConstructionError(f"family 2 z={z}: no seed passed validation")


@lru_cache(maxsize=None)
def construct_rs(n: int, k: int, r: int) -> CodeSpec:
    """Systematic RS baseline with whole-block repair."""
    _validate_params(n, k, r)
    gen = gf256.cauchy_matrix(range(k, n), range(k))
    tables = {failed: _build_rs_plan(n, k, r, gen, failed) for failed in range(n)}
    return CodeSpec(
        family=FAMILY_RS, n=n, k=k, r=r, subblocks=1,
        generators=[gen], repair_tables=tables,
    )


def make_msr_model(n: int, k: int, r: int) -> CodeSpec:
    """MSR codes are modeled analytically; no payload arithmetic exists."""
    _validate_params(n, k, r)
    return CodeSpec(family=FAMILY_MSR, n=n, k=k, r=r, subblocks=n - k)


def make_code(family: str, n: int, k: int, r: int) -> CodeSpec:
    family = family.lower()
    if family == FAMILY_RS:
        return construct_rs(n, k, r)
    if family == FAMILY_MSR:
        return make_msr_model(n, k, r)
    if family == FAMILY_F1:
        m = n - k
        if m < 1 or n % m or n // m != r:
            raise ParameterError(
                f"family 1 requires r = n/(n-k); got (n={n}, k={k}, r={r})"
            )
        return construct_f1(n, k)
    if family == FAMILY_F2:
        if n % 3 or (n // 3) * 2 - 1 != k or r != 3:
            raise ParameterError(
                f"family 2 requires (n,k,r) = (3z, 2z-1, 3); got ({n},{k},{r})"
            )
        return construct_f2(n // 3)
    raise ParameterError(f"unknown code family {family!r}")


# ---------------------------------------------------------------------------
# stripe encode / decode
# ---------------------------------------------------------------------------


def encode_stripe(spec: CodeSpec, data_blocks: list[Block], geom: StripeGeometry) -> list[Block]:
    """Systematic encode: returns all n blocks, data blocks unchanged."""
    if spec.family not in EXECUTABLE_FAMILIES:
        raise ParameterError(f"{spec.name} is an analytic model; it cannot encode data")
    if geom.subblocks_per_block != spec.subblocks:
        raise GeometryError(
            f"geometry has {geom.subblocks_per_block} subblocks per block, "
            f"{spec.name} needs {spec.subblocks}"
        )
    if len(data_blocks) != spec.k:
        raise GeometryError(f"expected {spec.k} data blocks, got {len(data_blocks)}")
    views = []
    for i, b in enumerate(data_blocks):
        b.check(geom)
        views.append(subblock_view(b.payload, geom))

    out = [Block(payload=b.payload, role=DATA, index=i) for i, b in enumerate(data_blocks)]
    s = spec.subblocks
    for u in range(spec.n - spec.k):
        subs = np.zeros((s, geom.subblock_size), dtype=np.uint8)
        for t in range(s):
            for i in range(spec.k):
                gf256.addmul_bytes(subs[t], int(spec.generators[t][u, i]), views[i][t])
        out.append(Block(payload=assemble_block(subs, geom), role=PARITY, index=spec.k + u))
    return out


def decode_stripe(spec: CodeSpec, available: list[Block], geom: StripeGeometry) -> list[Block]:
    """Recover the k data blocks from any k available blocks."""
    if spec.family not in EXECUTABLE_FAMILIES:
        raise ParameterError(f"{spec.name} is an analytic model; it cannot decode data")
    if len(available) < spec.k:
        raise InsufficientDataError(f"need {spec.k} blocks, got {len(available)}")
    chosen = available[: spec.k]
    indices = [b.index for b in chosen]
    if len(set(indices)) != spec.k:
        raise ParameterError(f"duplicate block indices {indices}")
    views = []
    for b in chosen:
        b.check(geom)
        views.append(subblock_view(b.payload, geom))

    s = spec.subblocks
    data_subs = []
    for t in range(s):
        sub = spec.full_matrix(t)[indices]
        try:
            inv = gf256.mat_inv(sub)
        except gf256.SingularMatrixError as e:
            raise MdsViolationError(
                f"{spec.name}: set {t} decode matrix for blocks {indices} is singular"
            ) from e
        stacked = np.stack([v[t] for v in views])
        data_subs.append(gf256.mat_mul(inv, stacked))

    out = []
    for i in range(spec.k):
        subs = np.stack([data_subs[t][i] for t in range(s)])
        out.append(Block(payload=assemble_block(subs, geom), role=DATA, index=i))
    return out


# ---------------------------------------------------------------------------
# repair planning and execution
# ---------------------------------------------------------------------------


def plan_repair(spec: CodeSpec, failed_index, layout: StripeLayout) -> RepairPlan:
    """Fetch the frozen repair plan for a single failed block."""
    if isinstance(failed_index, (list, tuple, set)):
        if len(failed_index) != 1:
            raise UnsupportedScenarioError(
                f"repair plans cover single failures only, got {sorted(failed_index)}"
            )
        (failed_index,) = failed_index
    if spec.repair_tables is None:
        raise ParameterError(f"{spec.name} has no executable repair plans")
    if layout.n != spec.n or layout.r != spec.r:
        raise ParameterError(
            f"layout ({layout.n} nodes, {layout.r} racks) does not match {spec.name}"
        )
    if not 0 <= failed_index < spec.n:
        raise ParameterError(f"failed index {failed_index} out of range")
    return spec.repair_tables[failed_index]


def execute_repair(plan: RepairPlan, available: dict[int, Block],
                   geom: StripeGeometry) -> tuple[Block, TrafficReport]:
    """Run a repair plan on real payloads; returns the rebuilt block and the
    exact per-actor traffic tally."""
    if geom.subblocks_per_block != plan.subblocks:
        raise GeometryError(
            f"geometry has {geom.subblocks_per_block} subblocks, plan needs {plan.subblocks}"
        )
    needed = {s.node for s in plan.sends}
    missing = sorted(needed - set(available))
    if missing:
        raise UnsupportedScenarioError(
            f"plan for failure {plan.failed_index} needs blocks {missing}; "
            "only single failures are supported"
        )
    w = plan.n // plan.r
    rack_of = lambda node: plan.target_rack if node == TARGET else node // w

    report = TrafficReport()
    symbols: dict[tuple[int, int], np.ndarray] = {}

    for send in plan.sends:
        block = available[send.node]
        out = engine.node_encode(block.payload, send.rows, geom)
        for i in range(out.shape[0]):
            symbols[(send.node, i)] = out[i]
        touched = {
            c for row in np.atleast_2d(send.rows) for c in np.nonzero(row)[0]
        }
        report.add_disk(actor_name(send.node), rack_of(send.node),
                        len(touched) * geom.subblock_size)
        if send.dest != send.node:
            report.add_send(
                actor_name(send.node), rack_of(send.node), rack_of(send.dest),
                out.shape[0] * geom.subblock_size,
            )

    target_inputs: dict[tuple[str, int, int], np.ndarray] = {}
    for relay in plan.relays:
        gathered = [symbols[key] for key in relay.inputs]
        out = engine.relayer_encode(gathered, relay.matrix)
        for i in range(out.shape[0]):
            target_inputs[("relay", relay.node, i)] = out[i]
        report.add_send(
            actor_name(relay.node), rack_of(relay.node), plan.target_rack,
            out.shape[0] * geom.subblock_size,
        )
    for send in plan.sends:
        if send.dest == TARGET:
            for i in range(np.atleast_2d(send.rows).shape[0]):
                target_inputs[("send", send.node, i)] = symbols[(send.node, i)]

    received = [target_inputs[key] for key in plan.decode_inputs]
    payload = engine.decode_block(received, plan.decode_matrix, geom)
    role = DATA if plan.failed_index < plan.k else PARITY
    return Block(payload=payload, role=role, index=plan.failed_index), report


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    spec_name: str
    mds_failures: list[tuple[int, ...]] = field(default_factory=list)
    repair_failures: list[tuple[int, str]] = field(default_factory=list)
    rack_failures: list[tuple[int, str]] = field(default_factory=list)
    mds_subsets_checked: int = 0
    repairs_checked: int = 0
    racks_checked: int = 0

    @property
    def passed(self) -> bool:
        return not (self.mds_failures or self.repair_failures or self.rack_failures)

    def summary(self) -> str:
        lines = [f"validation of {self.spec_name}: {'PASS' if self.passed else 'FAIL'}"]
        lines.append(
            f"  mds: {self.mds_subsets_checked - len(self.mds_failures)}/"
            f"{self.mds_subsets_checked} subsets decode"
        )
        for subset in self.mds_failures[:10]:
            lines.append(f"    FAIL subset {subset}")
        lines.append(
            f"  exact-repair: {self.repairs_checked - len(self.repair_failures)}/"
            f"{self.repairs_checked} single-failure plans"
        )
        for failed, msg in self.repair_failures[:10]:
            lines.append(f"    FAIL block {failed}: {msg}")
        lines.append(
            f"  single-rack: {self.racks_checked - len(self.rack_failures)}/"
            f"{self.racks_checked} rack losses decodable"
        )
        for rack, msg in self.rack_failures[:10]:
            lines.append(f"    FAIL rack {rack}: {msg}")
        return "\n".join(lines)


def validate_code(spec: CodeSpec, rng_seed: int = 2024) -> ValidationReport:
    """Exhaustive MDS check, per-position exact-repair check, and single-rack
    decodability check on random payloads."""
    report = ValidationReport(spec_name=spec.name)
    if spec.family not in EXECUTABLE_FAMILIES:
        raise ParameterError(f"{spec.name} is an analytic model; nothing to validate")

    s = spec.subblocks
    geom = StripeGeometry(block_size=64 * s, strip_size=32 * s, subblocks_per_block=s)
    rng = random.Random(rng_seed)
    data = [
        Block(payload=bytes(rng.randrange(256) for _ in range(geom.block_size)),
              role=DATA, index=i)
        for i in range(spec.k)
    ]
    stripe_blocks = encode_stripe(spec, data, geom)

    for subset in combinations(range(spec.n), spec.k):
        report.mds_subsets_checked += 1
        ok = all(
            gf256.mat_rank(spec.full_matrix(t)[list(subset)]) == spec.k
            for t in range(s)
        )
        if not ok:
            report.mds_failures.append(subset)
            continue
        decoded = decode_stripe(spec, [stripe_blocks[i] for i in subset], geom)
        if any(decoded[i].payload != data[i].payload for i in range(spec.k)):
            report.mds_failures.append(subset)

    layout = StripeLayout(
        n=spec.n, r=spec.r,
        placement_mode=engine.FLAT if spec.r == spec.n else engine.HIERARCHICAL,
    )
    for failed in range(spec.n):
        report.repairs_checked += 1
        try:
            plan = plan_repair(spec, failed, layout)
            avail = {b.index: b for b in stripe_blocks if b.index != failed}
            rebuilt, _ = execute_repair(plan, avail, geom)
            if rebuilt.payload != stripe_blocks[failed].payload:
                report.repair_failures.append((failed, "payload mismatch"))
        except Exception as e:  # the report carries the failure, never raises
            report.repair_failures.append((failed, f"{type(e).__name__}: {e}"))

    for rack in range(spec.r):
        report.racks_checked += 1
        survivors = [b for b in stripe_blocks if spec.rack_of(b.index) != rack]
        try:
            decoded = decode_stripe(spec, survivors[: spec.k], geom)
            if any(decoded[i].payload != data[i].payload for i in range(spec.k)):
                report.rack_failures.append((rack, "payload mismatch"))
        except Exception as e:
            report.rack_failures.append((rack, f"{type(e).__name__}: {e}"))

    return report


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _plan_to_doc(plan: RepairPlan) -> dict:
    return {
        "failed_index": plan.failed_index,
        "target_rack": plan.target_rack,
        "relayers": {str(k): v for k, v in plan.relayers.items()},
        "sends": [
            {"node": s.node, "rows": np.atleast_2d(s.rows).tolist(), "dest": s.dest}
            for s in plan.sends
        ],
        "relays": [
            {"node": rl.node, "inputs": [list(p) for p in rl.inputs],
             "matrix": rl.matrix.tolist()}
            for rl in plan.relays
        ],
        "decode_inputs": [list(d) for d in plan.decode_inputs],
        "decode_matrix": plan.decode_matrix.tolist(),
    }


def _plan_from_doc(doc: dict, family: str, n: int, k: int, r: int, s: int) -> RepairPlan:
    return RepairPlan(
        family=family, n=n, k=k, r=r, subblocks=s,
        failed_index=doc["failed_index"],
        target_rack=doc["target_rack"],
        relayers={int(key): val for key, val in doc["relayers"].items()},
        sends=[
            Send(node=d["node"], rows=np.array(d["rows"], dtype=np.uint8), dest=d["dest"])
            for d in doc["sends"]
        ],
        relays=[
            Relay(node=d["node"], inputs=[tuple(p) for p in d["inputs"]],
                  matrix=np.array(d["matrix"], dtype=np.uint8))
            for d in doc["relays"]
        ],
        decode_inputs=[(d[0], int(d[1]), int(d[2])) for d in doc["decode_inputs"]],
        decode_matrix=np.array(doc["decode_matrix"], dtype=np.uint8),
    )


def spec_to_doc(spec: CodeSpec) -> dict:
    doc = {
        "family": spec.family,
        "n": spec.n,
        "k": spec.k,
        "r": spec.r,
        "subblocks": spec.subblocks,
        "seed": spec.seed,
    }
    if spec.generators is not None:
        doc["generators"] = [g.tolist() for g in spec.generators]
    if spec.repair_tables is not None:
        doc["repair_tables"] = {
            str(f): _plan_to_doc(p) for f, p in spec.repair_tables.items()
        }
    return doc


def spec_from_doc(doc: dict) -> CodeSpec:
    gens = None
    if "generators" in doc:
        gens = [np.array(g, dtype=np.uint8) for g in doc["generators"]]
    tables = None
    if "repair_tables" in doc:
        tables = {
            int(f): _plan_from_doc(
                p, doc["family"], doc["n"], doc["k"], doc["r"], doc["subblocks"]
            )
            for f, p in doc["repair_tables"].items()
        }
    return CodeSpec(
        family=doc["family"], n=doc["n"], k=doc["k"], r=doc["r"],
        subblocks=doc["subblocks"], generators=gens, repair_tables=tables,
        seed=doc.get("seed", 0),
    )


def save_spec(spec: CodeSpec, path: Path) -> None:
    Path(path).write_text(json.dumps(spec_to_doc(spec), indent=2) + "\n")


def load_spec(path: Path) -> CodeSpec:
    return spec_from_doc(json.loads(Path(path).read_text()))
