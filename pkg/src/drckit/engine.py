"""Placement, repair primitives, traffic accounting, and analytic models.

The three primitives exported here mirror the repair pipeline: a storage
node encodes subblocks from its own block (``node_encode``), a per-rack
relayer re-encodes what it gathered (``relayer_encode``), and the target
combines everything back into the failed block (``decode_block``).

Traffic is tallied in exact byte counts per actor and per boundary
(disk, inner-rack, cross-rack).  Analytic cross-rack traffic for the
RS / MSR / DRC models is computed in exact rational units of the block
size so the floor/ratio formulas stay exact.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import gf256
from .errors import GeometryError, IncompleteRackError, ParameterError
from .stripe import StripeGeometry, assemble_block, subblock_view

FLAT = "flat"
HIERARCHICAL = "hierarchical"

#: pseudo node id for the repair target (the replacement node)
TARGET = -1


@dataclass(frozen=True)
class StripeLayout:
    """Where each block of one stripe lives: block index -> node -> rack."""

    n: int
    r: int
    placement_mode: str

    def __post_init__(self):
        if self.n % self.r:
            raise ParameterError(f"n={self.n} not divisible by r={self.r}")
        if self.placement_mode == FLAT and self.r != self.n:
            raise ParameterError("flat placement requires r == n")
        if self.placement_mode == HIERARCHICAL and self.r >= self.n:
            raise ParameterError("hierarchical placement requires r < n")

    @property
    def nodes_per_rack(self) -> int:
        return self.n // self.r

    def node_of(self, block_index: int) -> int:
        return block_index

    def rack_of(self, block_index: int) -> int:
        return block_index // self.nodes_per_rack

    def rack_nodes(self, rack: int) -> list[int]:
        w = self.nodes_per_rack
        return list(range(rack * w, (rack + 1) * w))


def place_stripe(spec, mode: str) -> StripeLayout:
    """Deterministic block placement for a code spec.

    Hierarchical placement puts blocks 0..n/r-1 in rack 0, the next n/r in
    rack 1, and so on; flat placement uses one block per rack.
    """
    if mode == FLAT:
        if spec.r != spec.n:
            raise ParameterError(f"flat placement needs r == n, spec has r={spec.r}")
        return StripeLayout(n=spec.n, r=spec.n, placement_mode=FLAT)
    if mode == HIERARCHICAL:
        if spec.r >= spec.n:
            raise ParameterError(f"hierarchical placement needs r < n, spec has r={spec.r}")
        return StripeLayout(n=spec.n, r=spec.r, placement_mode=HIERARCHICAL)
    raise ParameterError(f"unknown placement mode {mode!r}")


@dataclass
class ActorTraffic:
    disk_read_bytes: int = 0
    inner_rack_sent_bytes: int = 0
    cross_rack_sent_bytes: int = 0


class TrafficReport:
    """Per-actor byte tallies for one repair.

    Actors are node names ("n0", "n1", ...) plus "target".  Aggregation is
    plain addition, so merging reports is order-independent.
    """

    def __init__(self):
        self.actors: dict[str, ActorTraffic] = {}
        self.racks: dict[str, int] = {}

    def _entry(self, actor: str, rack: int) -> ActorTraffic:
        if actor not in self.actors:
            self.actors[actor] = ActorTraffic()
            self.racks[actor] = rack
        return self.actors[actor]

    def add_disk(self, actor: str, rack: int, nbytes: int) -> None:
        self._entry(actor, rack).disk_read_bytes += nbytes

    def add_send(self, actor: str, rack: int, dest_rack: int, nbytes: int) -> None:
        e = self._entry(actor, rack)
        if rack == dest_rack:
            e.inner_rack_sent_bytes += nbytes
        else:
            e.cross_rack_sent_bytes += nbytes

    @property
    def total_disk_bytes(self) -> int:
        return sum(a.disk_read_bytes for a in self.actors.values())

    @property
    def total_inner_rack_bytes(self) -> int:
        return sum(a.inner_rack_sent_bytes for a in self.actors.values())

    @property
    def total_cross_rack_bytes(self) -> int:
        return sum(a.cross_rack_sent_bytes for a in self.actors.values())

    def per_actor_cross(self) -> dict[str, int]:
        return {
            name: a.cross_rack_sent_bytes
            for name, a in self.actors.items()
            if a.cross_rack_sent_bytes
        }

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow(
            ["actor", "rack", "disk_read_bytes", "inner_rack_sent_bytes", "cross_rack_sent_bytes"]
        )
        for name in sorted(self.actors, key=_actor_sort_key):
            a = self.actors[name]
            w.writerow(
                [name, self.racks[name], a.disk_read_bytes, a.inner_rack_sent_bytes, a.cross_rack_sent_bytes]
            )
        w.writerow(
            ["total", "", self.total_disk_bytes, self.total_inner_rack_bytes, self.total_cross_rack_bytes]
        )
        return out.getvalue()


def _actor_sort_key(name: str):
    if name == "target":
        return (1, 0)
    return (0, int(name[1:]))


def actor_name(node: int) -> str:
    return "target" if node == TARGET else f"n{node}"


def node_encode(payload, rows: np.ndarray, geom: StripeGeometry) -> np.ndarray:
    """Encode subblocks from one locally stored block.

    ``rows`` is a (q x subblocks_per_block) coefficient matrix; the result
    is a (q x subblock_size) array of encoded subblocks.
    """
    rows = gf256.mat(rows)
    if rows.shape[1] != geom.subblocks_per_block:
        raise GeometryError(
            f"coefficient rows have {rows.shape[1]} columns, block has "
            f"{geom.subblocks_per_block} subblocks"
        )
    sub = subblock_view(payload, geom)
    return gf256.mat_mul(rows, sub)


def relayer_encode(received: list[np.ndarray], matrix: np.ndarray) -> np.ndarray:
    """Re-encode collected subblocks at a relayer.

    ``received`` holds equal-sized encoded subblocks; ``matrix`` is
    (outputs x len(received)).
    """
    matrix = gf256.mat(matrix)
    if any(r is None for r in received):
        raise IncompleteRackError("relayer is missing an input subblock")
    if matrix.shape[1] != len(received):
        raise IncompleteRackError(
            f"relayer expected {matrix.shape[1]} inputs, got {len(received)}"
        )
    sizes = {r.shape[-1] for r in received}
    if len(sizes) > 1:
        raise GeometryError(f"relayer inputs have mixed sizes {sorted(sizes)}")
    stacked = np.vstack([r.reshape(1, -1) for r in received])
    return gf256.mat_mul(matrix, stacked)


def decode_block(received: list[np.ndarray], decode_matrix: np.ndarray,
                 geom: StripeGeometry) -> bytes:
    """Reconstruct a failed block from the subblocks gathered at the target."""
    decode_matrix = gf256.mat(decode_matrix)
    if decode_matrix.shape[1] != len(received):
        raise IncompleteRackError(
            f"decode expected {decode_matrix.shape[1]} inputs, got {len(received)}"
        )
    if gf256.mat_rank(decode_matrix) < geom.subblocks_per_block:
        raise gf256.SingularMatrixError(
            "decode matrix is rank-deficient", gf256.mat_rank(decode_matrix)
        )
    stacked = np.vstack([r.reshape(1, -1) for r in received])
    subblocks = gf256.mat_mul(decode_matrix, stacked)
    return assemble_block(subblocks, geom)


# ---------------------------------------------------------------------------
# analytic cross-rack repair traffic, in exact rational units of B
# ---------------------------------------------------------------------------

RS = "rs"
MSR = "msr"
DRC = "drc"


def _check_hierarchy(n: int, k: int, r: int) -> None:
    if k < 1 or k >= n:
        raise ParameterError(f"need 1 <= k < n, got (n={n}, k={k})")
    if r < 1 or r > n or n % r:
        raise ParameterError(f"r={r} must divide n={n}")
    w = n // r
    if w > k:
        raise ParameterError(f"n/r={w} exceeds k={k}: some rack holds more than k blocks")
    if w > n - k:
        raise ParameterError(
            f"n/r={w} exceeds n-k={n - k}: a single rack failure would lose data"
        )


def analytic_cross_rack_traffic(kind: str, n: int, k: int, r: int) -> Fraction:
    """Cross-rack repair traffic per failed block, in units of block size B."""
    _check_hierarchy(n, k, r)
    w = n // r
    if kind == RS:
        if r == n:
            return Fraction(k)
        return Fraction(k - (w - 1))
    if kind == MSR:
        if r == n:
            return Fraction(n - 1, n - k)
        return Fraction(n - w, n - k)
    if kind == DRC:
        return Fraction(r - 1, r - (k * r) // n)
    raise ParameterError(f"unknown traffic model {kind!r}")


def verify_theorem1(n: int, k: int) -> bool:
    """Check that MSR under hierarchical placement with r = n/(n-k) racks
    meets the minimum cross-rack traffic bound, both equal to (r-1) blocks."""
    if n % (n - k):
        raise ParameterError(f"n={n} must be divisible by n-k={n - k}")
    r = n // (n - k)
    msr = analytic_cross_rack_traffic(MSR, n, k, r)
    bound = analytic_cross_rack_traffic(DRC, n, k, r)
    return msr == bound == Fraction(r - 1)
