"""Stripe geometry and the systematic Reed-Solomon codec.

A block is split into strips; each strip into ``subblocks_per_block``
substrips.  Subblock j of a block is the concatenation of substrip j of
every strip, so coding is defined per byte offset and strips can be
processed in any order.

The RS codec here works on whole blocks (one symbol stream per block);
the regenerating-code families in :mod:`drckit.codes` reuse it per
subblock set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gf256
from .errors import GeometryError, InsufficientDataError, MdsViolationError, ParameterError


@dataclass(frozen=True)
class StripeGeometry:
    block_size: int
    strip_size: int
    subblocks_per_block: int = 1

    def __post_init__(self):
        if self.block_size <= 0 or self.strip_size <= 0 or self.subblocks_per_block <= 0:
            raise GeometryError("sizes must be positive")
        if self.block_size % self.strip_size:
            raise GeometryError(
                f"block_size {self.block_size} not divisible by strip_size {self.strip_size}"
            )
        if self.strip_size % self.subblocks_per_block:
            raise GeometryError(
                f"strip_size {self.strip_size} not divisible by "
                f"{self.subblocks_per_block} subblocks (must be a multiple of "
                f"{self.subblocks_per_block})"
            )

    @property
    def substrip_size(self) -> int:
        return self.strip_size // self.subblocks_per_block

    @property
    def strips_per_block(self) -> int:
        return self.block_size // self.strip_size

    @property
    def subblock_size(self) -> int:
        return self.block_size // self.subblocks_per_block


DATA = "data"
PARITY = "parity"


@dataclass
class Block:
    payload: bytes
    role: str
    index: int

    def check(self, geom: StripeGeometry) -> None:
        if len(self.payload) != geom.block_size:
            raise GeometryError(
                f"block {self.index} has {len(self.payload)} bytes, "
                f"geometry wants {geom.block_size}"
            )


def subblock_view(payload: bytes | np.ndarray, geom: StripeGeometry) -> np.ndarray:
    """View a block as (subblocks_per_block, subblock_size) without copying order.

    Row j holds substrip j of every strip in strip order.
    """
    arr = np.frombuffer(payload, dtype=np.uint8) if isinstance(payload, (bytes, bytearray)) else payload
    if arr.size != geom.block_size:
        raise GeometryError(f"payload has {arr.size} bytes, geometry wants {geom.block_size}")
    s = geom.subblocks_per_block
    return (
        arr.reshape(geom.strips_per_block, s, geom.substrip_size)
        .transpose(1, 0, 2)
        .reshape(s, geom.subblock_size)
    )


def assemble_block(subblocks: np.ndarray, geom: StripeGeometry) -> bytes:
    """Inverse of :func:`subblock_view`: interleave subblocks back to a payload."""
    s = geom.subblocks_per_block
    if subblocks.shape != (s, geom.subblock_size):
        raise GeometryError("subblock array has wrong shape")
    return (
        subblocks.reshape(s, geom.strips_per_block, geom.substrip_size)
        .transpose(1, 0, 2)
        .tobytes()
    )


@dataclass(frozen=True)
class RsCodeSpec:
    k: int
    m: int
    generator: np.ndarray  # (m x k)

    @property
    def n(self) -> int:
        return self.k + self.m


def make_rs_spec(k: int, m: int) -> RsCodeSpec:
    if k < 1 or m < 1:
        raise ParameterError("k and m must be at least 1")
    if k + m > 255:
        raise ParameterError("k + m must not exceed 255")
    gen = gf256.cauchy_matrix(range(k, k + m), range(k))
    return RsCodeSpec(k=k, m=m, generator=gen)


def full_matrix(spec: RsCodeSpec) -> np.ndarray:
    """(k+m) x k matrix: identity rows for data, generator rows for parity."""
    return np.concatenate([np.eye(spec.k, dtype=np.uint8), spec.generator], axis=0)


def rs_encode(data_blocks: list[Block], spec: RsCodeSpec, geom: StripeGeometry) -> list[Block]:
    if len(data_blocks) != spec.k:
        raise GeometryError(f"expected {spec.k} data blocks, got {len(data_blocks)}")
    arrays = []
    for b in data_blocks:
        b.check(geom)
        arrays.append(np.frombuffer(b.payload, dtype=np.uint8))
    parities = []
    for j in range(spec.m):
        acc = np.zeros(geom.block_size, dtype=np.uint8)
        for i in range(spec.k):
            gf256.addmul_bytes(acc, int(spec.generator[j, i]), arrays[i])
        parities.append(Block(payload=acc.tobytes(), role=PARITY, index=spec.k + j))
    return parities


def rs_decode(available: list[Block], spec: RsCodeSpec, geom: StripeGeometry) -> list[Block]:
    """Recover the k data blocks from any k distinct blocks of the stripe."""
    if len(available) < spec.k:
        raise InsufficientDataError(
            f"need {spec.k} blocks to decode, got {len(available)}"
        )
    chosen = available[: spec.k]
    indices = [b.index for b in chosen]
    if len(set(indices)) != len(indices):
        raise ParameterError(f"duplicate block indices: {indices}")
    if any(i < 0 or i >= spec.n for i in indices):
        raise ParameterError(f"block index out of range: {indices}")
    for b in chosen:
        b.check(geom)

    if indices == list(range(spec.k)):
        return [Block(payload=b.payload, role=DATA, index=b.index) for b in chosen]

    fm = full_matrix(spec)
    sub = fm[indices]
    try:
        inv = gf256.mat_inv(sub)
    except gf256.SingularMatrixError as e:
        raise MdsViolationError(
            f"decode matrix for blocks {indices} is singular (rank {e.rank}); "
            "generator is not MDS"
        ) from e
    arrays = [np.frombuffer(b.payload, dtype=np.uint8) for b in chosen]
    out = []
    for i in range(spec.k):
        acc = np.zeros(geom.block_size, dtype=np.uint8)
        for j in range(spec.k):
            gf256.addmul_bytes(acc, int(inv[i, j]), arrays[j])
        out.append(Block(payload=acc.tobytes(), role=DATA, index=i))
    return out


def check_mds(spec: RsCodeSpec) -> list[tuple[int, ...]]:
    """Exhaustively test every k-subset for invertibility; return the failures."""
    from itertools import combinations

    fm = full_matrix(spec)
    bad = []
    for subset in combinations(range(spec.n), spec.k):
        if gf256.mat_rank(fm[list(subset)]) < spec.k:
            bad.append(subset)
    return bad


def write_manifest(path: Path, stripe_id: str, code_doc: dict, geom: StripeGeometry,
                   entries: list[dict]) -> None:
    doc = {
        "stripe_id": stripe_id,
        "code": code_doc,
        "geometry": {
            "block_size": geom.block_size,
            "strip_size": geom.strip_size,
            "subblocks_per_block": geom.subblocks_per_block,
        },
        "blocks": entries,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")


def read_manifest(path: Path) -> dict:
    return json.loads(Path(path).read_text())
