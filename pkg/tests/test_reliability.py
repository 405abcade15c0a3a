
import pytest

from drckit import reliability as rel
from drckit.errors import ParameterError
from drckit.reliability import (
    FLAT,
    HIERARCHICAL,
    MarkovModel,
    ReliabilityScenario,
    build_chain,
    gamma_tib_per_year,
    mttdl,
    mttdl_for,
    mttdl_table,
    table_to_csv,
)


def scenario(placement=FLAT, correlated=False, mttf=4.0, lam2=0.005, gamma=1.0):
    return ReliabilityScenario(
        placement=placement, correlated=correlated, mttf_years=mttf,
        lambda2_per_year=lam2, gamma_gbps=gamma,
    )


def test_failure_rates_flat():
    m = build_chain(scenario(mttf=4.0))
    lam1 = 0.25
    assert m.rate_between(9, 8) == pytest.approx(9 * lam1)
    assert m.rate_between(8, 7) == pytest.approx(8 * lam1)
    assert m.rate_between(7, 6) == pytest.approx(7 * lam1)
    assert m.rate_between(6, 5) == pytest.approx(6 * lam1)
    assert m.rate_between(9, 7) == 0.0


def test_correlated_rates_hierarchical():
    m = build_chain(scenario(HIERARCHICAL, correlated=True, mttf=4.0, lam2=0.005))
    assert m.rate_between(9, 8) == pytest.approx(9 * 0.25 + 9 * 0.005)
    assert m.rate_between(9, 7) == pytest.approx(9 * 0.005 ** 2)
    assert m.rate_between(9, 6) == pytest.approx(3 * 0.005 ** 3)


def test_correlated_disabled_zeroes_lambda2_paths():
    m = build_chain(scenario(HIERARCHICAL, correlated=False))
    assert m.lambda2 == 0.0
    assert m.rate_between(9, 7) == 0.0
    assert m.rate_between(9, 6) == 0.0


def test_repair_rates():
    gamma = gamma_tib_per_year(1.0)
    mf = build_chain(scenario(FLAT))
    mh = build_chain(scenario(HIERARCHICAL))
    assert mf.repair_single == pytest.approx(gamma / (8 / 3))
    assert mh.repair_single == pytest.approx(gamma / 2)
    assert mf.repair_multi == pytest.approx(gamma / 6)
    assert mf.rate_between(8, 9) == pytest.approx(mf.repair_single)
    assert mf.rate_between(7, 8) == pytest.approx(mf.repair_multi)
    assert mf.rate_between(6, 7) == pytest.approx(mf.repair_multi)


def test_absorbing_state_has_no_exits():
    m = build_chain(scenario(HIERARCHICAL, correlated=True))
    assert not m.rate[m.states.index(5)].any()


def test_gamma_conversion_order_of_magnitude():
    # 1 Gb/s sustained for a year is a few thousand TiB
    assert 3.0e3 < gamma_tib_per_year(1.0) < 4.0e3


def test_zero_repair_matches_closed_form():
    """With all repair rates zero the chain is a pure birth process whose
    absorption time has a simple harmonic closed form."""
    import numpy as np

    lam1 = 0.25
    m = build_chain(scenario(FLAT, mttf=4.0))
    q = m.rate.copy()
    for i, j in ((1, 0), (2, 1), (3, 2)):
        q[i, j] = 0.0
    for i in range(5):
        q[i, i] = 0.0
        q[i, i] = -q[i].sum()
    stripped = MarkovModel(states=m.states, rate=q, lambda1=m.lambda1,
                           lambda2=m.lambda2, repair_single=0.0, repair_multi=0.0)
    expect = sum(1.0 / (i * lam1) for i in (9, 8, 7, 6))
    assert abs(mttdl(stripped) - expect) / expect < 1e-12


REFERENCE_MTTF = {
    (FLAT, False): {2: 2.56e6, 4: 4.08e7, 10: 1.59e9},
    (HIERARCHICAL, False): {2: 3.41e6, 4: 5.44e7, 10: 2.12e9},
    (FLAT, True): {2: 2.54e6, 4: 4.00e7, 10: 1.51e9},
    (HIERARCHICAL, True): {2: 3.28e6, 4: 4.69e7, 10: 8.80e8},
}


@pytest.mark.parametrize("placement,corr", list(REFERENCE_MTTF))
def test_reference_table_mttf_sweep(placement, corr):
    tol = 0.05 if not corr else 0.10
    for mttf, ref in REFERENCE_MTTF[(placement, corr)].items():
        got = mttdl_for(placement, corr, mttf, 1.0)
        assert abs(got - ref) / ref <= tol


REFERENCE_GAMMA = {
    (FLAT, False): {0.2: 3.32e5, 2.0: 3.26e8},
    (HIERARCHICAL, False): {0.2: 4.42e5, 2.0: 4.34e8},
    (FLAT, True): {0.2: 3.26e5, 2.0: 3.19e8},
    (HIERARCHICAL, True): {0.2: 4.25e5, 2.0: 3.09e8},
}


@pytest.mark.parametrize("placement,corr", list(REFERENCE_GAMMA))
def test_reference_table_gamma_sweep(placement, corr):
    tol = 0.05 if not corr else 0.10
    for gamma, ref in REFERENCE_GAMMA[(placement, corr)].items():
        got = mttdl_for(placement, corr, 4.0, gamma)
        assert abs(got - ref) / ref <= tol


def test_hierarchical_beats_flat_without_correlated_failures():
    for mttf in (2, 4, 6, 8, 10):
        for gamma in (0.2, 0.5, 1.0, 2.0):
            h = mttdl_for(HIERARCHICAL, False, mttf, gamma)
            f = mttdl_for(FLAT, False, mttf, gamma)
            assert h > f
    # the advantage is roughly a third at the reference point
    ratio = mttdl_for(HIERARCHICAL, False, 4, 1.0) / mttdl_for(FLAT, False, 4, 1.0)
    assert 1.25 < ratio < 1.45


def test_mttdl_monotonicity():
    base = mttdl_for(HIERARCHICAL, True, 4, 1.0)
    assert mttdl_for(HIERARCHICAL, True, 8, 1.0) > base          # rarer failures
    assert mttdl_for(HIERARCHICAL, True, 4, 2.0) > base          # faster repair
    lo = mttdl_for(HIERARCHICAL, True, 4, 1.0, lambda2_per_year=0.01)
    assert lo < base                                             # more outages


def test_table_shape_and_formatting():
    rows = mttdl_table([2, 4], [1.0])
    assert len(rows) == 8  # 2 grid points x 4 scheme/correlation combos
    text = table_to_csv(rows)
    lines = text.strip().splitlines()
    assert lines[0] == "placement,correlated,inv_lambda1_years,gamma_gbps,mttdl_years"
    # scientific notation with 3 significant digits
    import re

    for line in lines[1:]:
        assert re.search(r",\d\.\d{2}E\+\d{2}$", line)


def test_single_cell_table():
    rows = mttdl_table([4], [1.0])
    assert len(rows) == 4
    with pytest.raises(ParameterError):
        mttdl_table([], [1.0])


def test_scenario_validation():
    with pytest.raises(ParameterError):
        ReliabilityScenario(placement="diagonal", correlated=False, mttf_years=4)
    with pytest.raises(ParameterError):
        ReliabilityScenario(placement=FLAT, correlated=False, mttf_years=-1)
