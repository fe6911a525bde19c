"""Dense GF(2) linear algebra on square matrices packed one row per word.

Row ``i`` of a :class:`BitMatrix` is a Python ``int`` whose bit ``j`` holds
entry ``(i, j)``; bit 0 is column 0.  Sizes are limited to 64 so every row
fits a machine word, which is also what the vectorized numpy paths assume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_SIZE = 64


class NotInvertible(ValueError):
    """Raised when a matrix has no inverse over GF(2)."""


def _mask(n: int) -> int:
    return (1 << n) - 1


@dataclass(frozen=True)
class BitMatrix:
    size: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= self.size <= MAX_SIZE:
            raise ValueError(f"size must be in 1..{MAX_SIZE}, got {self.size}")
        if len(self.rows) != self.size:
            raise ValueError(f"expected {self.size} rows, got {len(self.rows)}")
        m = _mask(self.size)
        for r in self.rows:
            if r < 0 or r & ~m:
                raise ValueError("row has bits outside the matrix width")

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(n, tuple(1 << i for i in range(n)))

    @classmethod
    def zero(cls, n: int) -> BitMatrix:
        return cls(n, (0,) * n)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> BitMatrix:
        """Build from a nested list of 0/1 entries, ``rows[i][j]`` = entry (i, j)."""
        n = len(rows)
        words = []
        for r in rows:
            if len(r) != n:
                raise ValueError("matrix must be square")
            words.append(sum((int(b) & 1) << j for j, b in enumerate(r)))
        return cls(n, tuple(words))

    @classmethod
    def from_word(cls, word: int, n: int, layout: str = "row") -> BitMatrix:
        """Unpack an ``n*n``-bit word; ``row`` layout puts entry (i, j) at bit ``n*i + j``."""
        if word >> (n * n):
            raise ValueError(f"word does not fit a {n}x{n} matrix")
        m = BitMatrix(n, tuple((word >> (n * i)) & _mask(n) for i in range(n)))
        if layout == "row":
            return m
        if layout == "col":
            return m.T
        raise ValueError(f"unknown layout {layout!r}")

    def to_word(self) -> int:
        """Inverse of :meth:`from_word` with the row-major layout."""
        return sum(r << (self.size * i) for i, r in enumerate(self.rows))

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return (self.rows[i] >> j) & 1

    def to_array(self) -> np.ndarray:
        n = self.size
        return np.array([[(r >> j) & 1 for j in range(n)] for r in self.rows], dtype=np.uint8)

    @classmethod
    def from_array(cls, a) -> BitMatrix:
        return cls.from_rows(np.asarray(a).tolist())

    @property
    def T(self) -> BitMatrix:
        n = self.size
        cols = [0] * n
        for i, r in enumerate(self.rows):
            while r:
                low = r & -r
                cols[low.bit_length() - 1] |= 1 << i
                r ^= low
        return BitMatrix(n, tuple(cols))

    def columns(self) -> tuple[int, ...]:
        """Column words: bit ``i`` of column ``j`` is entry (i, j)."""
        return self.T.rows

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            return mat_mul(self, other)
        if isinstance(other, BitVector):
            return mat_vec(self, other)
        return NotImplemented

    def __add__(self, other: BitMatrix) -> BitMatrix:
        if self.size != other.size:
            raise ValueError("size mismatch")
        return BitMatrix(self.size, tuple(a ^ b for a, b in zip(self.rows, other.rows)))

    def __pow__(self, k: int) -> BitMatrix:
        return mat_pow(self, k)

    def is_zero(self) -> bool:
        return not any(self.rows)

    def is_identity(self) -> bool:
        return self.rows == BitMatrix.identity(self.size).rows

    def __str__(self) -> str:
        return "\n".join(
            "".join("1" if (r >> j) & 1 else "." for j in range(self.size)) for r in self.rows
        )


@dataclass(frozen=True)
class BitVector:
    size: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.size <= MAX_SIZE:
            raise ValueError(f"size must be in 1..{MAX_SIZE}, got {self.size}")
        if self.bits < 0 or self.bits >> self.size:
            raise ValueError("vector has bits beyond its size")

    def __getitem__(self, i: int) -> int:
        return (self.bits >> i) & 1


def _check_same(a: BitMatrix, b: BitMatrix):
    if a.size != b.size:
        raise ValueError(f"size mismatch: {a.size} vs {b.size}")


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    _check_same(a, b)
    brows = b.rows
    out = []
    for r in a.rows:
        acc = 0
        j = 0
        while r:
            if r & 1:
                acc ^= brows[j]
            r >>= 1
            j += 1
        out.append(acc)
    return BitMatrix(a.size, tuple(out))


def mat_vec(a: BitMatrix, v: BitVector) -> BitVector:
    if a.size != v.size:
        raise ValueError(f"size mismatch: {a.size} vs {v.size}")
    x = v.bits
    out = 0
    for i, r in enumerate(a.rows):
        out |= ((r & x).bit_count() & 1) << i
    return BitVector(a.size, out)


def mat_pow(a: BitMatrix, k: int) -> BitMatrix:
    if k < 0:
        return mat_pow(mat_inverse(a), -k)
    result = BitMatrix.identity(a.size)
    base = a
    while k:
        if k & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        k >>= 1
    return result


def rank_of_rows(rows: Iterable[int]) -> int:
    """Rank of an arbitrary list of row words (any width)."""
    # xor basis keyed by leading bit
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top in basis:
                r ^= basis[top]
            else:
                basis[top] = r
                break
    return len(basis)


def mat_rank(a: BitMatrix) -> int:
    return rank_of_rows(a.rows)


def mat_inverse(a: BitMatrix) -> BitMatrix:
    """Gauss-Jordan inverse; raises :class:`NotInvertible` on rank deficiency."""
    n = a.size
    left = list(a.rows)
    right = [1 << i for i in range(n)]
    for col in range(n):
        bit = 1 << col
        pivot = next((r for r in range(col, n) if left[r] & bit), None)
        if pivot is None:
            raise NotInvertible(f"matrix is singular (rank < {n})")
        left[col], left[pivot] = left[pivot], left[col]
        right[col], right[pivot] = right[pivot], right[col]
        for r in range(n):
            if r != col and left[r] & bit:
                left[r] ^= left[col]
                right[r] ^= right[col]
    return BitMatrix(n, tuple(right))


def is_invertible(a: BitMatrix) -> bool:
    return mat_rank(a) == a.size


def block_get(a: BitMatrix, bi: int, bj: int, q: int) -> BitMatrix:
    if q < 1 or a.size % q:
        raise ValueError(f"block size {q} does not divide matrix size {a.size}")
    nb = a.size // q
    if not (0 <= bi < nb and 0 <= bj < nb):
        raise IndexError("block coordinates out of range")
    m = _mask(q)
    return BitMatrix(q, tuple((a.rows[bi * q + i] >> (bj * q)) & m for i in range(q)))


def block_set(a: BitMatrix, bi: int, bj: int, block: BitMatrix) -> BitMatrix:
    q = block.size
    if a.size % q:
        raise ValueError(f"block size {q} does not divide matrix size {a.size}")
    nb = a.size // q
    if not (0 <= bi < nb and 0 <= bj < nb):
        raise IndexError("block coordinates out of range")
    rows = list(a.rows)
    shift = bj * q
    clear = ~(_mask(q) << shift)
    for i in range(q):
        r = bi * q + i
        rows[r] = (rows[r] & clear) | (block.rows[i] << shift)
    return BitMatrix(a.size, tuple(rows))


def block_diag(block: BitMatrix, n: int) -> BitMatrix:
    """Repeat ``block`` along the diagonal of an ``n``-sized matrix (``n`` multiple of block size)."""
    q = block.size
    if n % q:
        raise ValueError(f"block size {q} does not divide {n}")
    rows = []
    for bi in range(n // q):
        rows.extend(r << (bi * q) for r in block.rows)
    return BitMatrix(n, tuple(rows))


def top_left(a: BitMatrix, n: int) -> BitMatrix:
    if not 1 <= n <= a.size:
        raise ValueError("submatrix size out of range")
    m = _mask(n)
    return BitMatrix(n, tuple(r & m for r in a.rows[:n]))


# --- text formats -----------------------------------------------------------


def format_matrix(a: BitMatrix, style: str = "dots") -> str:
    if style == "dots":
        return f"size={a.size}\n{a}"
    if style == "hex":
        return f"size={a.size}\nrows=" + ",".join(f"{r:x}" for r in a.rows)
    raise ValueError(f"unknown style {style!r}")


def parse_matrix(lines: Sequence[str]) -> tuple[BitMatrix, int]:
    """Parse one matrix from ``lines``; returns it and the number of lines consumed."""
    it = 0
    while it < len(lines) and not lines[it].strip():
        it += 1
    if it >= len(lines):
        raise ValueError("no matrix found")
    head = lines[it].strip()
    if not head.startswith("size="):
        raise ValueError(f"expected 'size=<n>', got {head!r}")
    n = int(head[5:])
    it += 1
    nxt = lines[it].strip() if it < len(lines) else ""
    if nxt.startswith("rows="):
        words = [int(h, 16) for h in nxt[5:].split(",")]
        return BitMatrix(n, tuple(words)), it + 1
    rows = []
    for k in range(n):
        if it + k >= len(lines):
            raise ValueError("truncated matrix")
        text = lines[it + k].strip()
        if len(text) != n or set(text) - {".", "1", "0"}:
            raise ValueError(f"bad matrix row {text!r}")
        rows.append(sum(1 << j for j, c in enumerate(text) if c == "1"))
    return BitMatrix(n, tuple(rows)), it + n
