"""Net and sequence validation: hybrid-matrix ranks plus a point-counting oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .alphabet import BudgetExceeded
from .gf2 import BitMatrix, rank_of_rows
from .szgen import GeneratorSet

DEFAULT_BUDGET = 2_000_000_000


def compositions(m: int, s: int) -> Iterator[tuple[int, ...]]:
    """All ways to split ``m`` into ``s`` nonnegative parts, in colexicographic order."""
    if s == 1:
        yield (m,)
        return
    for last in range(m + 1):
        for head in compositions(m - last, s - 1):
            yield head + (last,)


def composition_count(m: int, s: int) -> int:
    return math.comb(m + s - 1, s - 1)


@dataclass
class NetReport:
    checked_m: int
    base_q: int
    failures: list[tuple[int, tuple[int, ...], int, int]] = field(default_factory=list)
    partial: bool = False

    @property
    def passed(self) -> bool:
        return not self.failures and not self.partial

    def lines(self, all_m: Sequence[int] | None = None) -> list[str]:
        """Line-oriented report: one PASS per clean level, one FAIL per failing composition."""
        failed = {f[0] for f in self.failures}
        out = []
        for m in all_m if all_m is not None else range(1, self.checked_m + 1):
            if m in failed:
                out.extend(
                    f"FAIL m={fm} comp={','.join(map(str, c))} rank={r}/{n}"
                    for fm, c, r, n in self.failures
                    if fm == m
                )
            else:
                out.append(f"PASS m={m}")
        return out


def _hybrid_rows(mats: Sequence[BitMatrix], comp: Sequence[int], base_bits: int, width: int) -> list[int]:
    mask = (1 << width) - 1
    rows: list[int] = []
    for mat, mk in zip(mats, comp):
        rows.extend(r & mask for r in mat.rows[: base_bits * mk])
    return rows


def hybrid_matrix(g: GeneratorSet, comp: Sequence[int], base_bits: int | None = None) -> BitMatrix:
    """Stack the first ``base_bits * m_k`` rows of each generator, cut to the leading columns."""
    b = g.q if base_bits is None else base_bits
    if len(comp) != g.s:
        raise ValueError("composition length must equal the dimension count")
    n = b * sum(comp)
    if n > g.precision:
        raise ValueError(f"composition needs {n} bits but precision is {g.precision}")
    if n == 0:
        raise ValueError("empty composition")
    return BitMatrix(n, tuple(_hybrid_rows(g.matrices, comp, b, n)))


def _select(g: GeneratorSet, dims: Sequence[int] | None) -> list[BitMatrix]:
    return list(g.matrices) if dims is None else [g.matrices[d] for d in dims]


def check_net(
    g: GeneratorSet,
    m: int,
    *,
    dims: Sequence[int] | None = None,
    base_bits: int | None = None,
    max_failures: int = 16,
) -> NetReport:
    """Full-rank test of every hybrid matrix for ``b^m`` points (b = 2^base_bits)."""
    b = g.q if base_bits is None else base_bits
    mats = _select(g, dims)
    n = b * m
    if n > g.precision:
        raise ValueError(f"m={m} needs {n} bits but precision is {g.precision}")
    report = NetReport(m, b)
    for comp in compositions(m, len(mats)):
        r = rank_of_rows(_hybrid_rows(mats, comp, b, n))
        if r != n:
            report.failures.append((m, comp, r, n))
            if len(report.failures) >= max_failures:
                break
    return report


def check_sequence(
    g: GeneratorSet,
    max_m: int,
    *,
    dims: Sequence[int] | None = None,
    base_bits: int | None = None,
    budget: int = DEFAULT_BUDGET,
    stop_on_failure: bool = False,
) -> NetReport:
    """Check every net level m = 1..max_m on the top-left submatrices.

    ``budget`` bounds the summed ``compositions * n^2`` work; exceeding it
    raises :class:`BudgetExceeded` before any checking starts.
    """
    b = g.q if base_bits is None else base_bits
    s = g.s if dims is None else len(dims)
    if b * max_m > g.precision:
        raise ValueError(f"max_m={max_m} needs {b * max_m} bits but precision is {g.precision}")
    cost = sum(composition_count(m, s) * (b * m) ** 2 for m in range(1, max_m + 1))
    if cost > budget:
        raise BudgetExceeded(f"estimated work {cost} exceeds budget {budget}")
    report = NetReport(max_m, b)
    for m in range(1, max_m + 1):
        sub = check_net(g, m, dims=dims, base_bits=b)
        report.failures.extend(sub.failures)
        if sub.failures and stop_on_failure:
            report.checked_m = m
            break
    return report


# --- independent oracle ---------------------------------------------------------


def stratification_oracle(
    words: np.ndarray, comp: Sequence[int], base_bits: int, precision: int
) -> bool:
    """True iff every elementary interval of shape ``comp`` holds exactly one point.

    ``words`` is an (N, s) array of coordinate digit words (most significant
    digit in the top bit of ``precision``).  Works purely by counting
    digit-prefix tuples, so it shares no logic with the rank test.
    """
    words = np.asarray(words, dtype=np.uint64)
    if words.ndim != 2 or words.shape[1] != len(comp):
        raise ValueError("words must be (N, s) with s matching the composition")
    m = sum(comp)
    if words.shape[0] != 1 << (base_bits * m):
        raise ValueError(f"need exactly {1 << (base_bits * m)} points, got {words.shape[0]}")
    key = np.zeros(words.shape[0], dtype=np.uint64)
    for k, mk in enumerate(comp):
        nb = base_bits * mk
        if nb == 0:
            continue
        prefix = words[:, k] >> np.uint64(precision - nb)
        key = (key << np.uint64(nb)) | prefix
    return np.unique(key).size == words.shape[0]


def oracle_check_net(words: np.ndarray, m: int, base_bits: int, precision: int) -> bool:
    s = words.shape[1]
    return all(stratification_oracle(words, c, base_bits, precision) for c in compositions(m, s))


# --- exhaustive extension search (q = 2) ------------------------------------------

# invertible 2x2 corner blocks left after removing lower-triangular factors
REDUCED_BLOCKS = (
    BitMatrix.from_rows([[1, 0], [0, 1]]),
    BitMatrix.from_rows([[1, 1], [0, 1]]),
    BitMatrix.from_rows([[0, 1], [1, 0]]),
    BitMatrix.from_rows([[0, 1], [1, 1]]),
)


def _extend(a: tuple[int, ...], col: int, corner: BitMatrix, m2: int) -> tuple[int, ...]:
    """Grow a 2m x 2m row tuple by a column block C (packed) and corner X, with R = 0."""
    rows = [r | (((col >> (2 * i)) & 3) << m2) for i, r in enumerate(a)]
    rows.extend(cr << m2 for cr in corner.rows)
    return tuple(rows)


def _comps_ok(mats: Sequence[tuple[int, ...]], level: int, required: Sequence[int]) -> bool:
    """Check level compositions that use every dim in ``required`` (indices into mats)."""
    n = 2 * level
    for comp in compositions(level, len(mats)):
        if any(comp[k] == 0 for k in required):
            continue
        rows: list[int] = []
        for mat, mk in zip(mats, comp):
            rows.extend(mat[: 2 * mk])
        if rank_of_rows(rows) != n:
            return False
    return True


@dataclass
class ExtensionResult:
    level: int
    count: int
    sets: list[tuple[tuple[int, ...], ...]]


def _is_valid_prefix(mats: Sequence[tuple[int, ...]], level: int) -> bool:
    for m in range(1, level + 1):
        w = (1 << (2 * m)) - 1
        for comp in compositions(m, len(mats)):
            rows: list[int] = []
            for mat, mk in zip(mats, comp):
                rows.extend(r & w for r in mat[: 2 * mk])
            if rank_of_rows(rows) != 2 * m:
                return False
    return True


def extend_once(
    base: Sequence[tuple[int, ...]], corners: Sequence[BitMatrix] = REDUCED_BLOCKS
) -> ExtensionResult:
    """All valid one-step extensions of a (identity, A, B, C) prefix at 2m x 2m.

    ``base`` holds the three non-identity matrices as row tuples.  Corners only
    enter the single-dimension hybrid (already guaranteed by invertibility), so
    the column blocks are filtered with identity corners and the corner choices
    are multiplied in afterwards.
    """
    m = len(base[0]) // 2
    level = m + 1
    m2 = 2 * m
    ident = tuple(1 << i for i in range(2 * level))
    eye2 = REDUCED_BLOCKS[0]
    ncol = 1 << (2 * m2)
    # per-matrix candidates: compositions touching only {identity, k}
    single: list[list[tuple[int, ...]]] = []
    for a in base:
        keep = []
        for col in range(ncol):
            ext = _extend(a, col, eye2, m2)
            if _comps_ok([ident, ext], level, [1]):
                keep.append(ext)
        single.append(keep)
    # pairs, then the full triple
    pair_ok = {}
    for i, j in itertools.combinations(range(3), 2):
        pair_ok[(i, j)] = {
            (x, y)
            for x in single[i]
            for y in single[j]
            if _comps_ok([ident, x, y], level, [1, 2])
        }
    found = []
    for x in single[0]:
        for y in single[1]:
            if (x, y) not in pair_ok[(0, 1)]:
                continue
            for z in single[2]:
                if (x, z) in pair_ok[(0, 2)] and (y, z) in pair_ok[(1, 2)]:
                    if _comps_ok([ident, x, y, z], level, [1, 2, 3]):
                        found.append((x, y, z))
    sets = []
    for x, y, z in found:
        for cx, cy, cz in itertools.product(corners, repeat=3):
            sets.append(tuple(_set_corner(t, c, m2) for t, c in ((x, cx), (y, cy), (z, cz))))
    return ExtensionResult(level, len(sets), sets)


def _set_corner(t: tuple[int, ...], corner: BitMatrix, m2: int) -> tuple[int, ...]:
    return t[:m2] + tuple(cr << m2 for cr in corner.rows)


def initial_triples(blocks: Sequence[BitMatrix] = REDUCED_BLOCKS) -> list[tuple[tuple[int, ...], ...]]:
    """Valid 2x2 starting blocks for the three non-identity dimensions."""
    return [tuple(b.rows for b in t) for t in itertools.product(blocks, repeat=3)]


def extension_search(
    step: int = 1,
    *,
    identity_corners: bool = False,
    branch: Sequence[tuple[int, ...]] | None = None,
    rng_seed: int = 0,
) -> ExtensionResult:
    """Count valid extensions at a given step for q = 2.

    ``step=1`` extends 2x2 initial blocks to 4x4; later steps extend a branch
    (a valid set at the previous size).  Without an explicit ``branch`` a
    seeded random valid branch is grown from the first initial triple that
    admits extensions.
    """
    if not 1 <= step <= 3:
        raise ValueError("step must be 1..3 (up to 8x8 matrices)")
    corners = REDUCED_BLOCKS[:1] if identity_corners else REDUCED_BLOCKS
    if branch is None:
        rng = np.random.default_rng(rng_seed)
        cur = None
        for t in initial_triples():
            if extend_once(t, REDUCED_BLOCKS[:1]).count:
                cur = t
                break
        if cur is None:
            raise RuntimeError("no initial triple extends")
        for _ in range(step - 1):
            res = extend_once(cur, REDUCED_BLOCKS)
            cur = res.sets[int(rng.integers(res.count))]
        branch = cur
    if not _is_valid_prefix([tuple(1 << i for i in range(len(branch[0])))] + list(branch), len(branch[0]) // 2):
        raise ValueError("branch is not a valid prefix")
    return extend_once(branch, corners)
