"""Rectangular matrix power actions over m x n matrices (RM-sets).

Base-side matrices hold units of Z_p, exponent-side matrices hold residues
of Z_(p-1).  All product bounds run over the column count n, so only the
top n rows of a left operand's target (or a right operand) participate.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import struct
from typing import Iterable, Sequence

from .modarith import powmod_unchecked as _pow

Rows = tuple[tuple[int, ...], ...]

_DIMS = struct.Struct(">HH")


class DimensionError(ValueError):
    pass


class MatrixFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dims:
    m: int
    n: int

    def __post_init__(self):
        if self.n < 1 or self.m < 2:
            raise DimensionError(f"need m >= 2 and n >= 1, got {self.m}x{self.n}")
        if self.m <= self.n:
            raise DimensionError(f"dimensions must satisfy m > n, got {self.m}x{self.n}")

    def __str__(self):
        return f"{self.m}x{self.n}"

    @classmethod
    def parse(cls, text: str) -> "Dims":
        m, _, n = text.lower().partition("x")
        return cls(int(m), int(n))


def _freeze(rows: Iterable[Iterable[int]]) -> Rows:
    frozen = tuple(tuple(int(v) for v in row) for row in rows)
    if not frozen or any(len(r) != len(frozen[0]) for r in frozen):
        raise DimensionError("matrix rows must be non-empty and of equal length")
    return frozen


@dataclass(frozen=True)
class BaseMatrix:
    """m x n matrix with entries in Z_p^* = [1, p-1]."""

    p: int
    rows: Rows

    def __post_init__(self):
        object.__setattr__(self, "rows", _freeze(self.rows))
        Dims(len(self.rows), len(self.rows[0]))
        for i, row in enumerate(self.rows):
            for j, v in enumerate(row):
                if not 0 < v < self.p:
                    raise ValueError(f"entry ({i + 1},{j + 1}) = {v} not in [1, {self.p - 1}]")

    @property
    def dims(self) -> Dims:
        return Dims(len(self.rows), len(self.rows[0]))

    @property
    def entries(self) -> list[int]:
        return [v for row in self.rows for v in row]

    def to_bytes(self) -> bytes:
        return encode_matrix(self.rows)

    @classmethod
    def from_bytes(cls, data: bytes, p: int) -> "BaseMatrix":
        rows, used = decode_matrix(data)
        if used != len(data):
            raise MatrixFormatError(f"{len(data) - used} trailing bytes after matrix")
        return cls(p, rows)

    @classmethod
    def ones(cls, dims: Dims, p: int) -> "BaseMatrix":
        return cls(p, [[1] * dims.n for _ in range(dims.m)])


@dataclass(frozen=True)
class ExpMatrix:
    """m x n matrix of exponents in Z_q, q = p - 1."""

    q: int
    rows: Rows

    def __post_init__(self):
        object.__setattr__(self, "rows", _freeze(self.rows))
        Dims(len(self.rows), len(self.rows[0]))
        for i, row in enumerate(self.rows):
            for j, v in enumerate(row):
                if not 0 <= v < self.q:
                    raise ValueError(f"exponent ({i + 1},{j + 1}) = {v} not in [0, {self.q - 1}]")

    @property
    def dims(self) -> Dims:
        return Dims(len(self.rows), len(self.rows[0]))

    @property
    def entries(self) -> list[int]:
        return [v for row in self.rows for v in row]

    @classmethod
    def reduce(cls, rows: Iterable[Iterable[int]], q: int) -> "ExpMatrix":
        """Build from arbitrary integers, reducing each entry mod q."""
        return cls(q, [[v % q for v in row] for row in rows])

    @classmethod
    def zeros(cls, dims: Dims, q: int) -> "ExpMatrix":
        return cls(q, [[0] * dims.n for _ in range(dims.m)])

    @classmethod
    def identity(cls, dims: Dims, q: int) -> "ExpMatrix":
        """Top n x n block is the identity, remaining rows zero."""
        return cls(q, [[int(i == j) for j in range(dims.n)] for i in range(dims.m)])

    def to_bytes(self) -> bytes:
        return encode_matrix(self.rows)


def encode_matrix(rows: Sequence[Sequence[int]]) -> bytes:
    """u16 m, u16 n (big-endian), then m*n u64 big-endian entries row-major."""
    m, n = len(rows), len(rows[0])
    flat = [v for row in rows for v in row]
    return _DIMS.pack(m, n) + struct.pack(f">{m * n}Q", *flat)


def decode_matrix(data: bytes, offset: int = 0) -> tuple[Rows, int]:
    """Parse one canonical matrix blob at `offset`; returns (rows, end offset)."""
    if len(data) - offset < _DIMS.size:
        raise MatrixFormatError("truncated matrix header")
    m, n = _DIMS.unpack_from(data, offset)
    if m == 0 or n == 0:
        raise MatrixFormatError(f"empty matrix {m}x{n}")
    start = offset + _DIMS.size
    end = start + 8 * m * n
    if len(data) < end:
        raise MatrixFormatError(f"truncated matrix body: need {end - start} bytes")
    flat = struct.unpack_from(f">{m * n}Q", data, start)
    return tuple(flat[i * n:(i + 1) * n] for i in range(m)), end


def _check_pair(e: ExpMatrix, w: BaseMatrix):
    if e.dims != w.dims:
        raise DimensionError(f"dimension mismatch: {e.dims} vs {w.dims}")
    if e.q != w.p - 1:
        raise DimensionError(f"exponent modulus {e.q} does not match p - 1 = {w.p - 1}")


def _bump(counter, k):
    if counter is not None:
        counter["modexp"] += k


def left_action(x: ExpMatrix, w: BaseMatrix, counter=None) -> BaseMatrix:
    """c_ij = prod_{k<=n} w_kj ^ x_ik mod p."""
    _check_pair(x, w)
    p, n = w.p, w.dims.n
    wr = w.rows
    out = [[math.prod(_pow(wr[k][j], xi[k], p) for k in range(n)) % p for j in range(n)]
           for xi in x.rows]
    _bump(counter, len(x.rows) * n * n)
    return BaseMatrix(p, out)


def _right_rows(wrows, y, p, n):
    yr = y.rows
    return [[math.prod(_pow(wi[l], yr[l][j], p) for l in range(n)) % p for j in range(n)]
            for wi in wrows]


def right_action(w: BaseMatrix, y: ExpMatrix, counter=None) -> BaseMatrix:
    """d_ij = prod_{l<=n} w_il ^ y_lj mod p."""
    _check_pair(y, w)
    n = w.dims.n
    out = _right_rows(w.rows, y, w.p, n)
    _bump(counter, len(w.rows) * n * n)
    return BaseMatrix(w.p, out)


def two_sided_action(x: ExpMatrix, w: BaseMatrix, y: ExpMatrix, counter=None) -> BaseMatrix:
    """q_ij = prod_k prod_l w_kl ^ (x_ik * y_lj) mod p, via left(x, right(w, y)).

    The left action reads only the top n rows of right(w, y), so only those
    are computed: n^3 + m*n^2 exponentiations instead of m*n^3.
    """
    _check_pair(x, w)
    _check_pair(y, w)
    p, n = w.p, w.dims.n
    top = _right_rows(w.rows[:n], y, p, n)
    out = [[math.prod(_pow(top[k][j], xi[k], p) for k in range(n)) % p for j in range(n)]
           for xi in x.rows]
    _bump(counter, n ** 3 + len(x.rows) * n * n)
    return BaseMatrix(p, out)


def two_sided_action_naive(x: ExpMatrix, w: BaseMatrix, y: ExpMatrix, counter=None) -> BaseMatrix:
    """Direct quadruple product; reference path for checking the factored one."""
    _check_pair(x, w)
    _check_pair(y, w)
    p, q, n = w.p, x.q, w.dims.n
    m = len(x.rows)
    out = [[1] * n for _ in range(m)]
    for i in range(m):
        for j in range(n):
            acc = 1
            for k in range(n):
                for l in range(n):
                    acc = acc * _pow(w.rows[k][l], x.rows[i][k] * y.rows[l][j] % q, p) % p
            out[i][j] = acc
    _bump(counter, m * n ** 3)
    return BaseMatrix(p, out)


def scalar_mul(lam: int, x: ExpMatrix) -> ExpMatrix:
    return ExpMatrix(x.q, [[lam * v % x.q for v in row] for row in x.rows])


def _check_exp_pair(a: ExpMatrix, b: ExpMatrix):
    if a.dims != b.dims or a.q != b.q:
        raise DimensionError(f"operands differ: {a.dims} mod {a.q} vs {b.dims} mod {b.q}")


def _transpose_times(a: Rows, b: Rows, q: int) -> list[list[int]]:
    # a^T b, both m x n -> n x n
    n = len(a[0])
    return [[sum(ar[i] * br[j] for ar, br in zip(a, b)) % q for j in range(n)] for i in range(n)]


def commutes(x: ExpMatrix, u: ExpMatrix) -> bool:
    """True iff X^T U == U^T X entry-wise mod q."""
    _check_exp_pair(x, u)
    return _transpose_times(x.rows, u.rows, x.q) == _transpose_times(u.rows, x.rows, x.q)


def compose_left(y: ExpMatrix, x: ExpMatrix) -> ExpMatrix:
    """Z with left_action(Z, W) == left_action(y, left_action(x, W)).

    z_ik = sum_{k' <= n} y_ik' * x_k'k, i.e. y times the top n x n block of x.
    """
    _check_exp_pair(y, x)
    q, n = y.q, y.dims.n
    xr = x.rows
    return ExpMatrix(q, [[sum(yi[t] * xr[t][k] for t in range(n)) % q for k in range(n)]
                         for yi in y.rows])


def compose_right(x: ExpMatrix, y: ExpMatrix) -> ExpMatrix:
    """Z with right_action(W, Z) == right_action(right_action(W, x), y).

    Only the top n rows of a right operand are ever read; the rest are zero.
    """
    _check_exp_pair(x, y)
    q, n = x.q, x.dims.n
    yr = y.rows
    top = [[sum(x.rows[l][t] * yr[t][j] for t in range(n)) % q for j in range(n)]
           for l in range(n)]
    return ExpMatrix(q, top + [[0] * n for _ in range(x.dims.m - n)])


def random_base(dims: Dims, p: int, rng) -> BaseMatrix:
    return BaseMatrix(p, [[rng.randrange(1, p) for _ in range(dims.n)] for _ in range(dims.m)])


def random_exp(dims: Dims, q: int, rng) -> ExpMatrix:
    return ExpMatrix(q, [[rng.randrange(q) for _ in range(dims.n)] for _ in range(dims.m)])


def modexp_counts(dims: Dims) -> dict[str, int]:
    """Exponentiations per two-sided action for each evaluation path."""
    m, n = dims.m, dims.n
    return {"factored": n ** 3 + m * n * n, "naive": m * n ** 3}


__all__ = [
    "BaseMatrix", "Dims", "DimensionError", "ExpMatrix", "MatrixFormatError",
    "commutes", "compose_left", "compose_right", "decode_matrix", "encode_matrix",
    "left_action", "modexp_counts", "random_base", "random_exp", "right_action",
    "scalar_mul", "two_sided_action", "two_sided_action_naive",
]
