"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured numbers when its assertions hold.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines.

Byte-level checks use 4 KiB blocks; codes that split blocks three ways use
3 KiB instead, since block and strip sizes must divide evenly by the
subblock count (the same reason production deployments pair 63 MiB blocks
with three-way codes).
"""

import random
from fractions import Fraction
from itertools import combinations

import pytest

from drckit import codes, engine, reliability, sim
from drckit.engine import DRC, HIERARCHICAL, MSR, RS, StripeLayout
from drckit.stripe import DATA, Block, StripeGeometry

MiB = 1 << 20


def geometry_for(spec, kib=4):
    s = spec.subblocks
    if kib * 1024 % (4 * s) == 0:
        block = kib * 1024
    else:
        block = 3 * 1024  # three-way split: nearest even size below 4 KiB
    return StripeGeometry(block_size=block, strip_size=block // 4,
                          subblocks_per_block=s)


def build_stripe(spec, geom, seed):
    rng = random.Random(seed)
    data = [
        Block(bytes(rng.randrange(256) for _ in range(geom.block_size)), DATA, i)
        for i in range(spec.k)
    ]
    return data, codes.encode_stripe(spec, data, geom)


def all_codes():
    return [
        codes.construct_rs(6, 4, 3),
        codes.construct_rs(9, 6, 3),
        codes.construct_f2(2),      # DRC(6,3,3)
        codes.construct_f1(6, 4),   # DRC(6,4,3)
        codes.construct_f1(8, 6),   # DRC(8,6,4)
        codes.construct_f2(3),      # DRC(9,5,3)
        codes.construct_f1(9, 6),   # DRC(9,6,3)
    ]


def drc_codes():
    return [s for s in all_codes() if s.family in ("drc1", "drc2")]


def test_criterion_01_mds_brute_force():
    """Every k-subset of every implemented code decodes random payloads
    bit-exactly."""
    total = 0
    for spec in all_codes():
        geom = geometry_for(spec)
        data, stripe = build_stripe(spec, geom, seed=101 + spec.n)
        for subset in combinations(range(spec.n), spec.k):
            decoded = codes.decode_stripe(spec, [stripe[i] for i in subset], geom)
            for i in range(spec.k):
                assert decoded[i].payload == data[i].payload, (spec.name, subset, i)
            total += 1
    print(f"\nACCEPTANCE 1 PASS: MDS brute force, {total} subsets decoded bit-exactly "
          f"across {len(all_codes())} codes")


def test_criterion_02_exact_repair_every_position():
    """Layered repair rebuilds every block position (data and parity)
    bit-exactly for every implemented code."""
    cases = 0
    for spec in all_codes():
        geom = geometry_for(spec)
        _, stripe = build_stripe(spec, geom, seed=202 + spec.n)
        layout = StripeLayout(n=spec.n, r=spec.r, placement_mode=HIERARCHICAL)
        for failed in range(spec.n):
            plan = codes.plan_repair(spec, failed, layout)
            avail = {b.index: b for b in stripe if b.index != failed}
            rebuilt, _ = codes.execute_repair(plan, avail, geom)
            assert rebuilt.payload == stripe[failed].payload, (spec.name, failed)
            cases += 1
    print(f"\nACCEPTANCE 2 PASS: exact repair for {cases} (code, failed-position) cases")


def test_criterion_03_traffic_exactness():
    """Executed byte tallies equal the minimum cross-rack bound exactly:
    DRC(6,3,3)=1B, DRC(6,4,3)=2B, DRC(8,6,4)=3B, DRC(9,5,3)=1B, DRC(9,6,3)=2B."""
    expected = {
        "DRC(6,3,3)": Fraction(1),
        "DRC(6,4,3)": Fraction(2),
        "DRC(8,6,4)": Fraction(3),
        "DRC(9,5,3)": Fraction(1),
        "DRC(9,6,3)": Fraction(2),
    }
    seen = {}
    for spec in drc_codes():
        geom = geometry_for(spec)
        _, stripe = build_stripe(spec, geom, seed=303 + spec.n)
        layout = StripeLayout(n=spec.n, r=spec.r, placement_mode=HIERARCHICAL)
        for failed in range(spec.n):
            plan = codes.plan_repair(spec, failed, layout)
            avail = {b.index: b for b in stripe if b.index != failed}
            _, rep = codes.execute_repair(plan, avail, geom)
            got = Fraction(rep.total_cross_rack_bytes, geom.block_size)
            assert got == expected[spec.name], (spec.name, failed, got)
        seen[spec.name] = float(expected[spec.name])
    print(f"\nACCEPTANCE 3 PASS: cross-rack tallies exact (zero tolerance): {seen}")


def test_criterion_04_baseline_formulas():
    """Analytic models: MSR(6,3,6)=5B/3, MSR(6,3,3)=4B/3, RS(9,5,3)=3B; the
    rack-layer bound collapses to the MSR bound at one block per rack for
    4 <= n <= 12; the theorem check holds for (6,3), (6,4), (8,6)."""
    assert engine.analytic_cross_rack_traffic(MSR, 6, 3, 6) == Fraction(5, 3)
    assert engine.analytic_cross_rack_traffic(MSR, 6, 3, 3) == Fraction(4, 3)
    assert engine.analytic_cross_rack_traffic(RS, 9, 5, 3) == Fraction(3)
    pairs = 0
    for n in range(4, 13):
        for k in range(1, n):
            assert engine.analytic_cross_rack_traffic(DRC, n, k, n) == \
                Fraction(n - 1, n - k)
            pairs += 1
    for n, k in ((6, 3), (6, 4), (8, 6)):
        assert engine.verify_theorem1(n, k)
    print(f"\nACCEPTANCE 4 PASS: baseline formulas exact; flat-placement identity "
          f"holds for {pairs} (n,k) pairs; theorem check true for (6,3),(6,4),(8,6)")


def test_criterion_05_microbenchmark_reproduction():
    """Calibrated stage times: cross-rack 1.105 s / 0.561 s within 2%,
    inner-rack 0.039 s / 0.059 s within 5%."""
    cfg = sim.ClusterConfig()
    t963 = sim.simulate_block_repair(codes.construct_f1(9, 6), cfg)
    t953 = sim.simulate_block_repair(codes.construct_f2(3), cfg)
    assert t963.cross_rack_transfer == pytest.approx(1.105, rel=0.02)
    assert t953.cross_rack_transfer == pytest.approx(0.561, rel=0.02)
    assert t963.inner_rack_transfer == pytest.approx(0.039, rel=0.05)
    assert t953.inner_rack_transfer == pytest.approx(0.059, rel=0.05)
    print(f"\nACCEPTANCE 5 PASS: cross {t963.cross_rack_transfer:.4f}/"
          f"{t953.cross_rack_transfer:.4f} s (ref 1.105/0.561 ±2%), inner "
          f"{t963.inner_rack_transfer:.4f}/{t953.inner_rack_transfer:.4f} s "
          f"(ref 0.039/0.059 ±5%)")


def test_criterion_06_recovery_throughput_ratio():
    """DRC(9,5,3)/RS(9,5,3) recovery throughput ratio in [2.8, 3.0] at a
    200 Mb/s gateway, strictly lower at 2 Gb/s."""
    d = codes.construct_f2(3)
    r = codes.construct_rs(9, 5, 3)
    lo = sim.ClusterConfig().with_overrides(gateway_bandwidth_bps=200e6)
    hi = sim.ClusterConfig().with_overrides(gateway_bandwidth_bps=2e9)
    ratio_lo = sim.simulate_node_recovery(d, lo) / sim.simulate_node_recovery(r, lo)
    ratio_hi = sim.simulate_node_recovery(d, hi) / sim.simulate_node_recovery(r, hi)
    assert 2.8 <= ratio_lo <= 3.0 + 1e-9
    assert ratio_hi < ratio_lo
    assert ratio_hi < 3.0
    print(f"\nACCEPTANCE 6 PASS: recovery ratio {ratio_lo:.4f} at 200 Mb/s "
          f"(in [2.8, 3.0]), {ratio_hi:.4f} at 2 Gb/s (diminishing gain)")


def test_criterion_07_degraded_read_reduction():
    """Degraded-read time reduction of DRC(9,5,3) over RS(9,5,3) at 200 Mb/s
    is 66.7% within 2 percentage points."""
    cfg = sim.ClusterConfig().with_overrides(gateway_bandwidth_bps=200e6)
    t_d = sim.simulate_degraded_read(codes.construct_f2(3), cfg)
    t_r = sim.simulate_degraded_read(codes.construct_rs(9, 5, 3), cfg)
    reduction = 1 - t_d / t_r
    assert abs(reduction - 0.667) <= 0.02
    print(f"\nACCEPTANCE 7 PASS: degraded-read reduction {reduction*100:.1f}% "
          f"(target 66.7 ± 2 points)")


TABLE_MTTF = {  # gamma = 1 Gb/s
    ("flat", False): {2: 2.56e6, 4: 4.08e7, 10: 1.59e9},
    ("hierarchical", False): {2: 3.41e6, 4: 5.44e7, 10: 2.12e9},
    ("flat", True): {2: 2.54e6, 4: 4.00e7, 10: 1.51e9},
    ("hierarchical", True): {2: 3.28e6, 4: 4.69e7, 10: 8.80e8},
}
TABLE_GAMMA = {  # 1/lambda1 = 4 years
    ("flat", False): {0.2: 3.32e5, 2.0: 3.26e8},
    ("hierarchical", False): {0.2: 4.42e5, 2.0: 4.34e8},
    ("flat", True): {0.2: 3.26e5, 2.0: 3.19e8},
    ("hierarchical", True): {0.2: 4.25e5, 2.0: 3.09e8},
}


def test_criterion_08_mttdl_regression():
    """MTTDL tables: uncorrelated cells within 5%, correlated within 10%."""
    worst = 0.0
    for (placement, corr), cells in TABLE_MTTF.items():
        tol = 0.10 if corr else 0.05
        for mttf, ref in cells.items():
            got = reliability.mttdl_for(placement, corr, mttf, 1.0)
            err = abs(got - ref) / ref
            worst = max(worst, err)
            assert err <= tol, (placement, corr, mttf, got, ref)
    for (placement, corr), cells in TABLE_GAMMA.items():
        tol = 0.10 if corr else 0.05
        for gamma, ref in cells.items():
            got = reliability.mttdl_for(placement, corr, 4.0, gamma)
            err = abs(got - ref) / ref
            worst = max(worst, err)
            assert err <= tol, (placement, corr, gamma, got, ref)
    print(f"\nACCEPTANCE 8 PASS: 20 MTTDL reference cells reproduced, worst "
          f"relative error {worst*100:.2f}% (tolerances 5%/10%)")


def test_criterion_09_sweep_shapes():
    """Strip sweep is unimodal with its peak in [8 KiB, 2 MiB]; block sweep is
    nondecreasing and within 1% of its maximum at 64 MiB."""
    spec = codes.construct_f2(3)
    cfg = sim.ClusterConfig()

    strips = [1024 * 2 ** i for i in range(15)]  # 1 KiB .. 16 MiB
    rows = sim.sweep(spec, cfg, sim.SWEEP_STRIP, strips)
    thr = [float(r["recovery_throughput_mibps"]) for r in rows]
    peak = thr.index(max(thr))
    assert 8 * 1024 <= strips[peak] <= 2 * MiB, strips[peak]
    for i in range(peak):
        assert thr[i] <= thr[i + 1] + 1e-9
    for i in range(peak, len(thr) - 1):
        assert thr[i] >= thr[i + 1] - 1e-9

    blocks = [MiB * 2 ** i for i in range(9)]  # 1 MiB .. 256 MiB
    rows = sim.sweep(spec, cfg, sim.SWEEP_BLOCK, blocks)
    bthr = [float(r["recovery_throughput_mibps"]) for r in rows]
    for a, b in zip(bthr, bthr[1:]):
        assert b >= a - 1e-9
    at64 = bthr[blocks.index(64 * MiB)]
    assert at64 >= 0.99 * max(bthr)
    print(f"\nACCEPTANCE 9 PASS: strip-sweep peak at {strips[peak] // 1024} KiB "
          f"(unimodal); block sweep nondecreasing, 64 MiB at "
          f"{at64 / max(bthr) * 100:.2f}% of max")


def test_criterion_10_balanced_relayer_traffic():
    """Per-relayer cross-rack bytes are identical across relayers for every
    repair plan of every implemented rack-layer code, exactly."""
    checked = 0
    for spec in drc_codes():
        geom = geometry_for(spec)
        _, stripe = build_stripe(spec, geom, seed=909 + spec.n)
        layout = StripeLayout(n=spec.n, r=spec.r, placement_mode=HIERARCHICAL)
        for failed in range(spec.n):
            plan = codes.plan_repair(spec, failed, layout)
            avail = {b.index: b for b in stripe if b.index != failed}
            _, rep = codes.execute_repair(plan, avail, geom)
            per = rep.per_actor_cross()
            assert len(per) == spec.r - 1
            assert len(set(per.values())) == 1, (spec.name, failed, per)
            checked += 1
    print(f"\nACCEPTANCE 10 PASS: relayer cross-rack volumes equal in all "
          f"{checked} plans")
