"""Arithmetic and dense linear algebra over GF(2^8).

Reduction polynomial is fixed to 0x11D (x^8 + x^4 + x^3 + x^2 + 1), the
conventional generator used by most storage coding libraries, so results
are interoperable with standard test vectors.

Addition/subtraction is XOR.  Multiplication goes through precomputed
tables; a full 256x256 product table is also built so that multiplying a
large byte array by a scalar is a single numpy fancy-index.

All matrix routines operate on 2-D numpy arrays of dtype uint8 and use
Gauss-Jordan elimination with a deterministic pivot rule: the first row
(lowest index) with a nonzero entry in the pivot column.
"""

from __future__ import annotations

import numpy as np

POLY = 0x11D
ORDER = 255


class GFDomainError(ValueError):
    """Raised for operations outside the field domain (e.g. inverse of 0)."""


class SingularMatrixError(ValueError):
    """Raised when elimination hits a rank deficiency.

    Carries ``rank``, the rank achieved before failure.
    """

    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


def _build_tables():
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int16)
    x = 1
    for i in range(ORDER):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= POLY
    exp[ORDER : 2 * ORDER] = exp[:ORDER]

    # full product table: MUL[a, b] = a * b
    la = log[1:256].astype(np.int32)
    mul = np.zeros((256, 256), dtype=np.uint8)
    mul[1:, 1:] = exp[(la[:, None] + la[None, :]) % ORDER]

    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[(ORDER - la) % ORDER]
    return exp, log, mul, inv


EXP, LOG, MUL, INV = _build_tables()


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def gf_inv(a: int) -> int:
    if a == 0:
        raise GFDomainError("zero has no multiplicative inverse")
    return int(INV[a])


def gf_div(a: int, b: int) -> int:
    return gf_mul(a, gf_inv(b))


def gf_pow(a: int, e: int) -> int:
    if a == 0:
        if e == 0:
            return 1
        if e < 0:
            raise GFDomainError("negative power of zero")
        return 0
    return int(EXP[(int(LOG[a]) * e) % ORDER])


def scale_bytes(coeff: int, data: np.ndarray) -> np.ndarray:
    """coeff * data, elementwise over a uint8 array (vectorized table lookup)."""
    return MUL[coeff][data]


def addmul_bytes(acc: np.ndarray, coeff: int, data: np.ndarray) -> None:
    """acc ^= coeff * data, in place."""
    if coeff == 0:
        return
    if coeff == 1:
        np.bitwise_xor(acc, data, out=acc)
    else:
        np.bitwise_xor(acc, MUL[coeff][data], out=acc)


def mat(data) -> np.ndarray:
    """Coerce nested lists / arrays to a 2-D uint8 matrix."""
    m = np.asarray(data, dtype=np.uint8)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ValueError("matrix must be 2-D")
    return m


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = mat(a)
    b = mat(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} x {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
    for i in range(a.shape[0]):
        row = out[i]
        for j in range(a.shape[1]):
            addmul_bytes(row, int(a[i, j]), b[j])
    return out


def mat_vec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    return mat_mul(a, mat(v).reshape(-1, 1)).reshape(-1)


def _eliminate(m: np.ndarray, ncols_left: int):
    """Row-reduce ``m`` in place over its first ``ncols_left`` columns.

    Returns (rank, pivot column list).  Pivot choice: first row at or below
    the current one with a nonzero entry (ties broken by lowest row index).
    """
    rows = m.shape[0]
    rank = 0
    pivots = []
    for col in range(ncols_left):
        pivot = -1
        for r in range(rank, rows):
            if m[r, col]:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != rank:
            m[[rank, pivot]] = m[[pivot, rank]]
        pv = int(m[rank, col])
        if pv != 1:
            m[rank] = MUL[INV[pv]][m[rank]]
        nz = np.nonzero(m[:, col])[0]
        for r in nz:
            if r != rank:
                addmul_bytes(m[r], int(m[r, col]), m[rank])
        pivots.append(col)
        rank += 1
        if rank == rows:
            break
    return rank, pivots


def mat_rank(a: np.ndarray) -> int:
    work = mat(a).copy()
    rank, _ = _eliminate(work, work.shape[1])
    return rank


def mat_inv(a: np.ndarray) -> np.ndarray:
    a = mat(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("inverse requires a square matrix")
    work = np.concatenate([a.copy(), np.eye(n, dtype=np.uint8)], axis=1)
    rank, _ = _eliminate(work, n)
    if rank < n:
        raise SingularMatrixError(f"matrix is singular (rank {rank} < {n})", rank)
    return work[:, n:].copy()


def mat_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b exactly.  b may be a vector or a matrix of columns."""
    a = mat(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("solve requires a square matrix")
    bm = np.asarray(b, dtype=np.uint8)
    vector = bm.ndim == 1
    if vector:
        bm = bm.reshape(-1, 1)
    if bm.shape[0] != n:
        raise ValueError("right-hand side has wrong length")
    work = np.concatenate([a.copy(), bm.copy()], axis=1)
    rank, _ = _eliminate(work, n)
    if rank < n:
        raise SingularMatrixError(f"matrix is singular (rank {rank} < {n})", rank)
    x = work[:, n:]
    return x.reshape(-1) if vector else x.copy()


def mat_nullspace(a: np.ndarray) -> np.ndarray:
    """Basis of the right nullspace of A, one vector per row.

    Deterministic: basis vectors are emitted in increasing order of their
    free-column index, each with a 1 in that free column.
    """
    a = mat(a)
    rows, cols = a.shape
    work = a.copy()
    rank, pivots = _eliminate(work, cols)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for bi, fc in enumerate(free):
        basis[bi, fc] = 1
        for r, pc in enumerate(pivots):
            basis[bi, pc] = work[r, fc]
    return basis


def random_matrix(rng, rows: int, cols: int) -> np.ndarray:
    return np.array(
        [[rng.randrange(256) for _ in range(cols)] for _ in range(rows)],
        dtype=np.uint8,
    )


def cauchy_matrix(xs, ys) -> np.ndarray:
    """Cauchy matrix C[i, j] = 1 / (xs[i] ^ ys[j]).

    Every square submatrix is nonsingular provided the xs are distinct,
    the ys are distinct, and the two sets do not intersect.
    """
    xs = list(xs)
    ys = list(ys)
    if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
        raise ValueError("cauchy points must be distinct")
    if set(xs) & set(ys):
        raise ValueError("cauchy point sets must be disjoint")
    out = np.zeros((len(xs), len(ys)), dtype=np.uint8)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            out[i, j] = INV[x ^ y]
    return out
