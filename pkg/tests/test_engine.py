import random
from fractions import Fraction

import numpy as np
import pytest

from drckit import codes, engine, gf256
from drckit.engine import (
    DRC,
    FLAT,
    HIERARCHICAL,
    MSR,
    RS,
    StripeLayout,
    analytic_cross_rack_traffic,
    node_encode,
    place_stripe,
    relayer_encode,
    verify_theorem1,
)
from drckit.errors import GeometryError, IncompleteRackError, ParameterError
from drckit.stripe import StripeGeometry


def test_place_stripe_hierarchical_9_6_3():
    spec = codes.construct_f1(9, 6)
    layout = place_stripe(spec, HIERARCHICAL)
    assert [layout.rack_nodes(r) for r in range(3)] == [[0, 1, 2], [3, 4, 5], [6, 7, 8]]
    assert layout.rack_of(7) == 2
    assert layout.node_of(7) == 7


def test_place_stripe_flat_one_block_per_rack():
    spec = codes.construct_rs(6, 4, 6)
    layout = place_stripe(spec, FLAT)
    assert layout.nodes_per_rack == 1
    assert [layout.rack_of(i) for i in range(6)] == list(range(6))


def test_place_stripe_8_6_4_two_per_rack():
    spec = codes.construct_f1(8, 6)
    layout = place_stripe(spec, HIERARCHICAL)
    assert layout.nodes_per_rack == 2
    assert layout.rack_nodes(3) == [6, 7]


def test_place_stripe_mode_mismatch():
    spec = codes.construct_f1(9, 6)
    with pytest.raises(ParameterError):
        place_stripe(spec, FLAT)
    flat_spec = codes.construct_rs(6, 4, 6)
    with pytest.raises(ParameterError):
        place_stripe(flat_spec, HIERARCHICAL)
    with pytest.raises(ParameterError):
        StripeLayout(n=9, r=4, placement_mode=HIERARCHICAL)


def test_node_encode_identity_and_zero():
    g = StripeGeometry(block_size=96, strip_size=24, subblocks_per_block=3)
    rng = random.Random(10)
    payload = bytes(rng.randrange(256) for _ in range(96))
    from drckit.stripe import subblock_view

    view = subblock_view(payload, g)
    out = node_encode(payload, np.array([[0, 1, 0]], dtype=np.uint8), g)
    assert np.array_equal(out[0], view[1])
    out = node_encode(payload, np.zeros((1, 3), dtype=np.uint8), g)
    assert not out.any()


def test_node_encode_three_subblocks_of_third_size():
    spec = codes.construct_f1(9, 6)
    g = StripeGeometry(block_size=63 * 48, strip_size=63 * 12, subblocks_per_block=3)
    payload = bytes(g.block_size)
    rows = np.eye(3, dtype=np.uint8)
    out = node_encode(payload, rows, g)
    assert out.shape == (3, g.block_size // 3)


def test_node_encode_shape_mismatch():
    g = StripeGeometry(block_size=96, strip_size=24, subblocks_per_block=3)
    with pytest.raises(GeometryError):
        node_encode(bytes(96), np.array([[1, 2]], dtype=np.uint8), g)


def test_relayer_encode_passthrough_and_errors():
    x = np.arange(8, dtype=np.uint8)
    out = relayer_encode([x], np.array([[1]], dtype=np.uint8))
    assert np.array_equal(out[0], x)
    with pytest.raises(IncompleteRackError):
        relayer_encode([x], np.array([[1, 1]], dtype=np.uint8))
    with pytest.raises(IncompleteRackError):
        relayer_encode([x, None], np.array([[1, 1]], dtype=np.uint8))


def test_decode_block_requires_full_rank():
    g = StripeGeometry(block_size=32, strip_size=16, subblocks_per_block=2)
    parts = [np.zeros(16, dtype=np.uint8)] * 2
    with pytest.raises(gf256.SingularMatrixError):
        engine.decode_block(parts, np.array([[1, 1], [1, 1]], dtype=np.uint8), g)


# ---- analytic traffic ----


def test_analytic_worked_examples():
    B = Fraction(1)
    assert analytic_cross_rack_traffic(MSR, 6, 3, 6) == Fraction(5, 3)
    assert analytic_cross_rack_traffic(MSR, 6, 3, 3) == Fraction(4, 3)
    assert analytic_cross_rack_traffic(RS, 9, 5, 3) == 3
    assert analytic_cross_rack_traffic(DRC, 9, 5, 3) == 1
    assert analytic_cross_rack_traffic(DRC, 8, 6, 4) == 3
    assert analytic_cross_rack_traffic(RS, 6, 4, 6) == 4
    assert analytic_cross_rack_traffic(RS, 8, 6, 8) == 6


def test_rs_flat_traffic_is_k():
    for n, k in [(6, 4), (9, 6), (12, 8)]:
        assert analytic_cross_rack_traffic(RS, n, k, n) == k


def test_constraint_violations_rejected():
    with pytest.raises(ParameterError):
        analytic_cross_rack_traffic(RS, 9, 5, 2)  # n/r > n-k would lose a rack
    with pytest.raises(ParameterError):
        analytic_cross_rack_traffic(DRC, 9, 2, 3)  # n/r > k
    with pytest.raises(ParameterError):
        analytic_cross_rack_traffic(DRC, 9, 5, 4)  # r does not divide n


def test_min_bound_reduces_to_msr_at_flat_placement():
    """At one block per rack the rack-layer bound collapses to the per-node
    minimum (n-1)/(n-k), as exact rationals."""
    for n in range(4, 13):
        for k in range(1, n):
            assert analytic_cross_rack_traffic(DRC, n, k, n) == Fraction(n - 1, n - k)


@pytest.mark.parametrize("n,k,expect_blocks", [(6, 4, 2), (8, 6, 3), (6, 3, 1)])
def test_verify_theorem1(n, k, expect_blocks):
    assert verify_theorem1(n, k)
    r = n // (n - k)
    assert analytic_cross_rack_traffic(MSR, n, k, r) == Fraction(expect_blocks)


def test_verify_theorem1_needs_divisibility():
    with pytest.raises(ParameterError):
        verify_theorem1(7, 5)


# ---- traffic report ----


def test_traffic_report_totals_and_csv():
    rep = engine.TrafficReport()
    rep.add_disk("n0", 0, 100)
    rep.add_send("n0", 0, 0, 50)   # inner
    rep.add_send("n3", 1, 0, 75)   # cross
    rep.add_disk("n3", 1, 25)
    assert rep.total_disk_bytes == 125
    assert rep.total_inner_rack_bytes == 50
    assert rep.total_cross_rack_bytes == 75
    text = rep.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "actor,rack,disk_read_bytes,inner_rack_sent_bytes,cross_rack_sent_bytes"
    assert lines[-1] == "total,,125,50,75"


def test_executed_tally_matches_formula_for_every_drc():
    """Byte-level cross-rack tallies equal the analytic minimum exactly."""
    import drckit.codes as c

    for spec in (c.construct_f2(2), c.construct_f1(6, 4), c.construct_f1(8, 6),
                 c.construct_f2(3), c.construct_f1(9, 6)):
        s = spec.subblocks
        geom = StripeGeometry(block_size=32 * s, strip_size=16 * s, subblocks_per_block=s)
        rng = random.Random(spec.n)
        from drckit.stripe import DATA, Block

        data = [Block(bytes(rng.randrange(256) for _ in range(geom.block_size)), DATA, i)
                for i in range(spec.k)]
        stripe = c.encode_stripe(spec, data, geom)
        layout = StripeLayout(n=spec.n, r=spec.r, placement_mode=HIERARCHICAL)
        expect = analytic_cross_rack_traffic(DRC, spec.n, spec.k, spec.r)
        for failed in range(spec.n):
            plan = c.plan_repair(spec, failed, layout)
            avail = {b.index: b for b in stripe if b.index != failed}
            _, rep = c.execute_repair(plan, avail, geom)
            assert Fraction(rep.total_cross_rack_bytes, geom.block_size) == expect
