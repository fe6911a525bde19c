"""Finite-field alphabets of q x q binary blocks.

An alphabet is the set {0, I, x, x^2, ..., x^(2^q - 2)} generated by a
primitive block ``x``; it is a copy of GF(2^q) living inside the q x q
binary matrices.  Slot 0 always holds the zero block and slot 1 the identity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .gf2 import BitMatrix, block_diag, is_invertible, mat_mul, mat_pow, parse_matrix, format_matrix

log = logging.getLogger(__name__)

DEFAULT_ATTEMPTS = 10_000
MAX_SEARCH_Q = 8
MAX_ENUM_Q = 5


class SearchTimeout(RuntimeError):
    """A randomized search used up its attempt budget."""


class BudgetExceeded(RuntimeError):
    """A request is outside the supported exhaustive range."""


@dataclass(frozen=True)
class Alphabet:
    q: int
    symbols: tuple[BitMatrix, ...]
    alpha: int = 2
    # set when the alphabet came from an unrestricted fallback search
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.symbols) != 1 << self.q:
            raise ValueError(f"alphabet for q={self.q} needs {1 << self.q} symbols")
        if any(s.size != self.q for s in self.symbols):
            raise ValueError("symbol size does not match q")
        if not 0 <= self.alpha < len(self.symbols):
            raise ValueError("alpha index out of range")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i: int) -> BitMatrix:
        return self.symbols[i]

    def index(self, x: BitMatrix) -> int:
        for i, s in enumerate(self.symbols):
            if s.rows == x.rows:
                return i
        raise ValueError("symbol not in alphabet")

    def canonical_key(self) -> tuple[int, ...]:
        return tuple(sorted(s.to_word() for s in self.symbols))

    def same_set(self, other: Alphabet) -> bool:
        return self.q == other.q and self.canonical_key() == other.canonical_key()

    @property
    def alpha_symbol(self) -> BitMatrix:
        return self.symbols[self.alpha]

    def log_table(self) -> dict[tuple[int, ...], int]:
        """Map nonzero symbol rows to j with symbol == alpha^j."""
        a = self.alpha_symbol
        out = {}
        cur = BitMatrix.identity(self.q)
        for j in range((1 << self.q) - 1):
            out[cur.rows] = j
            cur = mat_mul(cur, a)
        return out


# --- small number theory ----------------------------------------------------


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def euler_phi(n: int) -> int:
    r = n
    for p in _prime_factors(n):
        r -= r // p
    return r


def gl2_order(q: int) -> int:
    """Number of invertible q x q binary matrices."""
    r = 1
    for i in range(q):
        r *= (1 << q) - (1 << i)
    return r


def alphabet_count_formula(q: int) -> int:
    """Closed-form alphabet count |GL(q,2)| / (q (2^q - 1)).

    The primitive elements of GL(q, 2) are partitioned by the alphabets they
    generate, phi(2^q - 1) per alphabet, and their number is
    |GL(q,2)| * phi(2^q - 1) / (q (2^q - 1)) (Singer-cycle normalizer).
    Used only as an independent oracle for :func:`enumerate_alphabets`.
    """
    return gl2_order(q) // (q * ((1 << q) - 1))


# --- single-symbol operations -------------------------------------------------


def root_index(x: BitMatrix) -> int:
    """Smallest n >= 1 with x^n == I."""
    if not is_invertible(x):
        raise ValueError("root index needs an invertible block")
    ident = BitMatrix.identity(x.size).rows
    cur = x
    n = 1
    # element orders in GL(q,2) stay below 4^q
    limit = 1 << (2 * x.size)
    while cur.rows != ident:
        cur = mat_mul(cur, x)
        n += 1
        if n > limit:
            raise RuntimeError("root index search did not terminate")
    return n


def is_primitive(x: BitMatrix) -> bool:
    """True iff x has multiplicative order exactly 2^q - 1."""
    order = (1 << x.size) - 1
    ident = BitMatrix.identity(x.size).rows
    if mat_pow(x, order).rows != ident:
        return False
    return all(mat_pow(x, order // p).rows != ident for p in _prime_factors(order))


def alphabet_from_alpha(x: BitMatrix) -> Alphabet:
    """{0, I, x, x^2, ...} in power order; slot 2 (slot 1 for q=1) holds x."""
    if not is_primitive(x):
        raise ValueError("block is not primitive")
    q = x.size
    syms = [BitMatrix.zero(q), BitMatrix.identity(q)]
    cur = BitMatrix.identity(q)
    for _ in range((1 << q) - 2):
        cur = mat_mul(cur, x)
        syms.append(cur)
    return Alphabet(q, tuple(syms), alpha=2 if q > 1 else 1)


def companion(poly: int) -> BitMatrix:
    """Companion block of a monic binary polynomial (bit k = coeff of t^k)."""
    q = poly.bit_length() - 1
    rows = []
    for i in range(q):
        r = 1 << (i - 1) if i else 0
        r |= ((poly >> i) & 1) << (q - 1)
        rows.append(r)
    return BitMatrix(q, tuple(rows))


def standard_alphabet(q: int) -> Alphabet:
    """Deterministic alphabet generated by the companion block of the smallest primitive polynomial.

    For q = 2 this is {0, I, [[0,1],[1,1]], [[1,1],[1,0]]}, the S set in the
    digit order used by the base-4 multiplication table.
    """
    if not 1 <= q <= MAX_SEARCH_Q:
        raise ValueError(f"q must be in 1..{MAX_SEARCH_Q}")
    for poly in range((1 << q) + 1, 1 << (q + 1), 2):
        c = companion(poly)
        if is_primitive(c):
            return alphabet_from_alpha(c)
    raise AssertionError("no primitive polynomial found")


def alpha_search(q: int, timeout_attempts: int = DEFAULT_ATTEMPTS, rng_seed: int = 0) -> Alphabet:
    """Randomized alphabet search: draw blocks until one has root index 2^q - 1."""
    if not 1 <= q <= MAX_SEARCH_Q:
        raise ValueError(f"q must be in 1..{MAX_SEARCH_Q}")
    rng = np.random.default_rng(rng_seed)
    for _ in range(timeout_attempts):
        word = int(rng.integers(0, 1 << (q * q), dtype=np.uint64))
        x = BitMatrix.from_word(word, q)
        if is_invertible(x) and is_primitive(x):
            return alphabet_from_alpha(x)
    raise SearchTimeout(f"no primitive {q}x{q} block in {timeout_attempts} attempts")


# --- field verification -------------------------------------------------------


def verify_field(a: Alphabet) -> bool:
    syms = a.symbols
    q = a.q
    if len(syms) != 1 << q or not syms[0].is_zero() or not syms[1].is_identity():
        return False
    keys = {s.rows for s in syms}
    if len(keys) != len(syms):
        return False
    if not all(is_invertible(s) for s in syms[1:]):
        return False
    for i, x in enumerate(syms):
        for y in syms[i:]:
            if (x + y).rows not in keys:
                return False
            xy = mat_mul(x, y)
            if xy.rows not in keys or xy.rows != mat_mul(y, x).rows:
                return False
    ident = syms[1].rows
    for x in syms[1:]:
        if not any(mat_mul(x, y).rows == ident for y in syms[1:]):
            return False
    return True


# --- exhaustive enumeration (vectorized over packed words) ----------------------


def _vec_mul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Multiply arrays of row-major packed q x q matrices elementwise."""
    m = np.uint64((1 << q) - 1)
    qq = np.uint64(q)
    brows = [(b >> np.uint64(q * j)) & m for j in range(q)]
    out = np.zeros_like(a)
    for i in range(q):
        ai = (a >> np.uint64(q * i)) & m
        acc = np.zeros_like(a)
        for j in range(q):
            sel = (ai >> np.uint64(j)) & np.uint64(1)
            acc ^= brows[j] * sel
        out |= acc << (qq * np.uint64(i))
    return out


def _vec_pow(a: np.ndarray, e: int, q: int, ident: int) -> np.ndarray:
    result = np.full_like(a, ident)
    base = a
    while e:
        if e & 1:
            result = _vec_mul(result, base, q)
        e >>= 1
        if e:
            base = _vec_mul(base, base, q)
    return result


def _primitive_words(q: int, chunk: int = 1 << 21) -> np.ndarray:
    """All packed q x q blocks of multiplicative order exactly 2^q - 1."""
    ident = BitMatrix.identity(q).to_word()
    order = (1 << q) - 1
    total = 1 << (q * q)
    found = []
    for start in range(0, total, chunk):
        w = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        # x^(2^q) == x keeps every element whose order divides 2^q - 1 (plus
        # some singular idempotents that the exact test below removes)
        sq = w
        for _ in range(q):
            sq = _vec_mul(sq, sq, q)
        w = w[(sq == w) & (w != 0)]
        if w.size == 0:
            continue
        keep = _vec_pow(w, order, q, ident) == ident
        for p in _prime_factors(order):
            keep &= _vec_pow(w, order // p, q, ident) != ident
        found.append(w[keep])
    return np.concatenate(found) if found else np.zeros(0, dtype=np.uint64)


def enumerate_alphabets(q: int) -> list[Alphabet]:
    """Every distinct alphabet of q x q blocks, in canonical order.

    Each alphabet is reported once, generated by its numerically smallest
    primitive element (the primitive elements of one alphabet are x^k with
    gcd(k, 2^q - 1) = 1).
    """
    if not 1 <= q <= MAX_ENUM_Q:
        raise BudgetExceeded(f"exhaustive enumeration supports q <= {MAX_ENUM_Q}")
    prim = _primitive_words(q)
    order = (1 << q) - 1
    ident = BitMatrix.identity(q).to_word()
    best = prim.copy()
    cur = prim.copy()
    for k in range(2, order):
        cur = _vec_mul(cur, prim, q)
        if math.gcd(k, order) == 1:
            np.minimum(best, cur, out=best)
    reps = np.sort(prim[best == prim])
    # rows of powers for every representative: column k holds x^k
    powers = np.empty((reps.size, order), dtype=np.uint64)
    powers[:, 0] = ident
    for k in range(1, order):
        powers[:, k] = _vec_mul(powers[:, k - 1], reps, q)
    zero = BitMatrix.zero(q)
    out = []
    for row in powers:
        syms = [zero] + [BitMatrix.from_word(int(wd), q) for wd in row]
        out.append(Alphabet(q, tuple(syms), alpha=2 if q > 1 else 1))
    return out


def count_alphabets(q: int) -> int:
    """Count by enumeration without materializing alphabet objects."""
    if not 1 <= q <= MAX_ENUM_Q:
        raise BudgetExceeded(f"exhaustive enumeration supports q <= {MAX_ENUM_Q}")
    return int(_primitive_words(q).size) // euler_phi((1 << q) - 1)


# --- ordering for ensembling -------------------------------------------------------


def nest_sort(a: Alphabet, x_choices: Sequence[int] | None = None) -> Alphabet:
    """Reorder so slot i + k holds symbols[i] + symbols[k] for every power of two k and i < k.

    ``x_choices`` optionally names, per stage k = 2, 4, 8, ..., the index
    (into ``a``) of the symbol placed at slot k; by default whatever sits in
    slot k when the stage starts is used.
    """
    syms = list(a.symbols)
    s = len(syms)
    zero, ident = BitMatrix.zero(a.q).rows, BitMatrix.identity(a.q).rows
    for slot, target in ((0, zero), (1, ident)):
        j = next(j for j, x in enumerate(syms) if x.rows == target)
        syms[slot], syms[j] = syms[j], syms[slot]
    choices = list(x_choices or [])
    k = 2
    stage = 0
    while k < s:
        if stage < len(choices):
            want = a.symbols[choices[stage]].rows
            j = next(j for j, x in enumerate(syms) if x.rows == want)
            if j < k:
                raise ValueError(f"x choice for stage {k} is already inside the band")
            syms[k], syms[j] = syms[j], syms[k]
        for i in range(1, k):
            x = (syms[i] + syms[k]).rows
            j = next(j for j, y in enumerate(syms) if y.rows == x)
            syms[i + k], syms[j] = syms[j], syms[i + k]
        k *= 2
        stage += 1
    alpha_rows = a.alpha_symbol.rows
    alpha = next(j for j, x in enumerate(syms) if x.rows == alpha_rows)
    return Alphabet(a.q, tuple(syms), alpha=alpha, notes=a.notes)


def is_nest_sorted(a: Alphabet) -> bool:
    s = a.size
    if not a.symbols[0].is_zero() or not a.symbols[1].is_identity():
        return False
    k = 2
    while k < s:
        for i in range(1, k):
            if (a.symbols[i] + a.symbols[k]).rows != a.symbols[i + k].rows:
                return False
        k *= 2
    return True


# --- nesting --------------------------------------------------------------------


def embed(a: BitMatrix) -> BitMatrix:
    """Nesting-alphabet symbol diag(a^2, a^2) for a nested symbol a."""
    return block_diag(mat_mul(a, a), 2 * a.size)


def _block2(a: BitMatrix, b: BitMatrix, c: BitMatrix, d: BitMatrix) -> BitMatrix:
    q = a.size
    rows = [a.rows[i] | (b.rows[i] << q) for i in range(q)]
    rows += [c.rows[i] | (d.rows[i] << q) for i in range(q)]
    return BitMatrix(2 * q, tuple(rows))


def contains_embedding(nesting: Alphabet, nested: Alphabet) -> bool:
    keys = {s.rows for s in nesting.symbols}
    return all(embed(a).rows in keys for a in nested.symbols)


def find_nesting_alphabet(
    nested: Alphabet,
    rng_seed: int = 0,
    timeout_attempts: int = 100_000,
    fallback: bool = True,
) -> Alphabet:
    """Find a (2q)-alphabet containing diag(a^2, a^2) for every symbol a of ``nested``.

    Candidates are 2 x 2 block matrices whose four blocks are nested symbols.
    A primitive candidate generates a field that contains the embedded copy
    iff it commutes with diag(g, g) for the nested generator g (the
    centralizer of a primitive element is its own field).  If the restricted
    space yields nothing within the budget, an unrestricted search over all
    (2q) x (2q) blocks runs and the result is flagged in ``notes``.
    """
    q = nested.q
    if 2 * q > 2 * MAX_SEARCH_Q:
        raise ValueError("nesting supports output block sizes up to 16")
    g = embed(nested.alpha_symbol)
    rng = np.random.default_rng(rng_seed)
    n = nested.size

    def accept(x: BitMatrix) -> bool:
        return mat_mul(x, g).rows == mat_mul(g, x).rows and is_invertible(x) and is_primitive(x)

    if 4 * q <= 16:
        # small restricted spaces are scanned exhaustively in a seeded random order
        order = rng.permutation(n**4)[:timeout_attempts]
        picks = (np.unravel_index(order, (n, n, n, n)))
        candidates = zip(*(p.tolist() for p in picks))
    else:
        candidates = (tuple(rng.integers(0, n, size=4).tolist()) for _ in range(timeout_attempts))
    for ia, ib, ic, idd in candidates:
        x = _block2(nested[ia], nested[ib], nested[ic], nested[idd])
        if accept(x):
            return alphabet_from_alpha(x)
    if not fallback:
        raise SearchTimeout("restricted nesting search exhausted")
    log.warning("restricted nesting search exhausted for q=%d; trying unrestricted blocks", q)
    for _ in range(timeout_attempts):
        word = int(rng.integers(0, 1 << 63, dtype=np.uint64)) | (int(rng.integers(0, 2)) << 63)
        word &= (1 << (4 * q * q)) - 1
        x = BitMatrix.from_word(word, 2 * q)
        if accept(x):
            out = alphabet_from_alpha(x)
            return Alphabet(out.q, out.symbols, out.alpha, notes=("unrestricted-fallback",))
    raise SearchTimeout("nesting search exhausted (restricted and unrestricted)")


def order_nesting(nesting: Alphabet, nested: Alphabet) -> Alphabet:
    """Nest-sort ``nesting`` so its first |nested| slots are the embeddings of ``nested``, slot by slot.

    ``nested`` must itself be nest-sorted; stages below |nested| pick the
    embedded band generators, later stages use the default choice.
    """
    if not is_nest_sorted(nested):
        raise ValueError("nested alphabet must be nest-sorted")
    choices = []
    k = 2
    while k < nested.size:
        choices.append(nesting.index(embed(nested[k])))
        k *= 2
    out = nest_sort(nesting, choices)
    for i, a in enumerate(nested.symbols):
        if out[i].rows != embed(a).rows:
            raise ValueError("nesting alphabet does not embed the nested one")
    return out


def nesting_chain(q: int, rng_seed: int = 0) -> list[Alphabet]:
    """Nest-sorted alphabets for block sizes 1, 2, 4, ..., q, each nesting the previous."""
    if q < 1 or q & (q - 1):
        raise ValueError("nesting chains need q a power of two")
    chain = [standard_alphabet(1)]
    level = 0
    while chain[-1].q < q:
        nxt = find_nesting_alphabet(chain[-1], rng_seed=rng_seed + level)
        chain.append(order_nesting(nxt, chain[-1]))
        level += 1
    return chain


# --- file format ------------------------------------------------------------------


def format_alphabet(a: Alphabet) -> str:
    parts = [f"q={a.q}", f"alpha={a.alpha}"]
    parts += [format_matrix(s) for s in a.symbols]
    return "\n".join(parts) + "\n"


def parse_alphabets(text: str) -> list[Alphabet]:
    lines = text.splitlines()
    out = []
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line or line.startswith("#"):
            i += 1
            continue
        if not line.startswith("q="):
            raise ValueError(f"expected 'q=<q>', got {line!r}")
        q = int(line[2:])
        i += 1
        alpha = 2 if q > 1 else 1
        if i < len(lines) and lines[i].strip().startswith("alpha="):
            alpha = int(lines[i].strip()[6:])
            i += 1
        syms = []
        for _ in range(1 << q):
            m, used = parse_matrix(lines[i:])
            syms.append(m)
            i += used
        out.append(Alphabet(q, tuple(syms), alpha=alpha))
    return out


def read_alphabet(path) -> Alphabet:
    with open(path) as fh:
        found = parse_alphabets(fh.read())
    if not found:
        raise ValueError(f"no alphabet in {path}")
    return found[0]


def write_alphabets(path, alphabets: Iterable[Alphabet]) -> None:
    with open(path, "w") as fh:
        for a in alphabets:
            fh.write(format_alphabet(a))
            fh.write("\n")
