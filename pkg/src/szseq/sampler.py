"""Point generation: digital construction, scrambling, the S-P-Z fast path."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .alphabet import Alphabet, alphabet_from_alpha, is_primitive
from .gf2 import BitMatrix, BitVector, mat_inverse, mat_mul
from .szgen import DEFAULT_PRECISION, GeneratorSet, build_sz_generators, xor_vector

U64 = np.uint64
_M64 = (1 << 64) - 1


@dataclass(frozen=True)
class ScrambleSpec:
    kind: str = "none"  # none | owen | xor
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "owen", "xor"):
            raise ValueError(f"unknown scramble kind {self.kind!r}")
        if not 0 <= self.seed <= _M64:
            raise ValueError("seed must fit 64 bits")


NO_SCRAMBLE = ScrambleSpec()


@dataclass(frozen=True)
class SamplePoint:
    index: int
    words: tuple[int, ...]
    precision: int

    @property
    def floats(self) -> tuple[float, ...]:
        return tuple(w / (1 << self.precision) for w in self.words)

    def __len__(self) -> int:
        return len(self.words)


# --- bit helpers -------------------------------------------------------------------


def reverse_bits(x: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


_REV_STAGES = [
    (32, 0x00000000FFFFFFFF),
    (16, 0x0000FFFF0000FFFF),
    (8, 0x00FF00FF00FF00FF),
    (4, 0x0F0F0F0F0F0F0F0F),
    (2, 0x3333333333333333),
    (1, 0x5555555555555555),
]


def reverse_bits_array(x: np.ndarray, bits: int) -> np.ndarray:
    """Reverse the low ``bits`` bits of every uint64 entry."""
    x = np.asarray(x, dtype=U64).copy()
    for sh, m in _REV_STAGES:
        sh_, m_ = U64(sh), U64(m)
        x = ((x >> sh_) & m_) | ((x & m_) << sh_)
    return x >> U64(64 - bits) if bits < 64 else x


def reversed_index_vector(v: int, bits: int) -> BitVector:
    """Index digits as a vector; bit i carries weight 2^(-i-1) once mapped to a coordinate."""
    if v < 0 or v >> bits:
        raise ValueError(f"index {v} does not fit {bits} bits")
    return BitVector(bits, v)


def digits_to_word(d: BitVector) -> int:
    return reverse_bits(d.bits, d.size)


def word_to_digits(word: int, precision: int) -> BitVector:
    return BitVector(precision, reverse_bits(word, precision))


# --- Owen scrambling ---------------------------------------------------------------


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = (x + U64(0x9E3779B97F4A7C15)) & U64(_M64)
    x = (x ^ (x >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> U64(27))) * U64(0x94D049BB133111EB)
    return x ^ (x >> U64(31))


def _splitmix_int(x: int) -> int:
    with np.errstate(over="ignore"):
        return int(_splitmix(np.array([x & _M64], dtype=U64))[0])


def owen_key(seed: int, dim_key: int) -> int:
    return _splitmix_int(_splitmix_int(seed) ^ _splitmix_int(dim_key ^ 0xD1B54A32D192ED03))


def default_flip(key: int, nodes: np.ndarray) -> np.ndarray:
    """One pseudorandom bit per tree node."""
    with np.errstate(over="ignore"):
        return _splitmix(nodes ^ U64(key)) >> U64(63)


FlipFn = Callable[[int, np.ndarray], np.ndarray]


def owen_scramble_words(
    words: np.ndarray, precision: int, dim_key: int, seed: int, flip: FlipFn = default_flip
) -> np.ndarray:
    """Nested uniform base-2 scrambling of coordinate words (top bit = first digit).

    The flip for digit i depends on the node ``(1 << i) | prefix`` where
    ``prefix`` is the i original leading digits, so equal prefixes always
    share a permutation.
    """
    words = np.asarray(words, dtype=U64)
    key = owen_key(seed, dim_key)
    out = words.copy()
    for i in range(precision):
        prefix = words >> U64(precision - i) if i else np.zeros_like(words)
        nodes = prefix | U64(1 << i)
        bit = flip(key, nodes).astype(U64) & U64(1)
        out ^= bit << U64(precision - 1 - i)
    return out


def owen_scramble_digits(
    digits: BitVector, dim_key: int, seed: int, flip: FlipFn = default_flip
) -> BitVector:
    w = digits_to_word(digits)
    out = owen_scramble_words(np.array([w], dtype=U64), digits.size, dim_key, seed, flip)
    return word_to_digits(int(out[0]), digits.size)


def apply_scramble(words: np.ndarray, precision: int, scramble: ScrambleSpec, dims: Sequence[int] | None = None) -> np.ndarray:
    """Scramble an (N, s) word array in place of its columns; returns a new array."""
    words = np.asarray(words, dtype=U64)
    s = words.shape[1]
    dims = range(s) if dims is None else dims
    if scramble.kind == "none":
        return words
    out = words.copy()
    if scramble.kind == "owen":
        for c, k in enumerate(dims):
            out[:, c] = owen_scramble_words(words[:, c], precision, k, scramble.seed)
        return out
    offs = xor_vector(scramble.seed, max(dims) + 1, precision)
    for c, k in enumerate(dims):
        out[:, c] ^= U64(digits_to_word(offs[k]))
    return out


# --- naive construction ----------------------------------------------------------


def _reversed_columns(m: BitMatrix) -> np.ndarray:
    return np.array([reverse_bits(c, m.size) for c in m.columns()], dtype=U64)


def _check_indices(idx: np.ndarray, precision: int):
    if idx.size and (int(idx.max()) >> precision if precision < 64 else 0):
        raise ValueError(f"index exceeds {precision}-bit precision")


def naive_words(g: GeneratorSet, indices, dims: Sequence[int] | None = None) -> np.ndarray:
    """(N, s) coordinate words by XOR of the columns selected by each index bit."""
    idx = np.asarray(indices, dtype=U64).ravel()
    _check_indices(idx, g.precision)
    dims = list(range(g.s)) if dims is None else list(dims)
    # filled dimension-major, then transposed once
    out = np.zeros((len(dims), idx.size), dtype=U64)
    bits = [((idx >> U64(j)) & U64(1)).astype(bool) for j in range(g.precision)]
    for c, k in enumerate(dims):
        cols = _reversed_columns(g.matrices[k])
        acc = out[c]
        for j in range(g.precision):
            if cols[j]:
                acc[bits[j]] ^= cols[j]
    return np.ascontiguousarray(out.T)


def sample(g: GeneratorSet, v: int, scramble: ScrambleSpec = NO_SCRAMBLE) -> SamplePoint:
    """One point of the digital sequence, scrambled per ``scramble``."""
    if v < 0 or (g.precision < 64 and v >> g.precision):
        raise ValueError(f"index {v} out of range for {g.precision}-bit precision")
    vec = reversed_index_vector(v, g.precision)
    words = np.array([[digits_to_word(m @ vec) for m in g.matrices]], dtype=U64)
    words = apply_scramble(words, g.precision, scramble)
    return SamplePoint(v, tuple(int(w) for w in words[0]), g.precision)


# --- S-P-Z fast path -------------------------------------------------------------


@dataclass(frozen=True)
class _Banded:
    """A block-diagonal matrix stored as shift/mask diagonals (positive shift = left)."""

    shifts: tuple[int, ...]
    masks: tuple[int, ...]

    def apply(self, w: np.ndarray, tmp: np.ndarray) -> np.ndarray:
        out = np.zeros_like(w)
        for d, m in zip(self.shifts, self.masks):
            if d > 0:
                np.left_shift(w, U64(d), out=tmp)
            elif d < 0:
                np.right_shift(w, U64(-d), out=tmp)
            else:
                tmp[...] = w
            np.bitwise_and(tmp, U64(m), out=tmp)
            np.bitwise_xor(out, tmp, out=out)
        return out


def _banded_diag(blocks: Sequence[BitMatrix], q: int, precision: int) -> _Banded:
    """Block-diagonal operator acting on coordinate words (digit i at bit precision-1-i)."""
    # digit-space entry (iq+r, iq+r+d) sits on diagonal d; in word space the
    # shift direction flips and the mask is mirrored
    shifts, masks = [], []
    for d in range(-(q - 1), q):
        m = 0
        for i, b in enumerate(blocks):
            for r in range(q):
                c = r + d
                if 0 <= c < q and (b.rows[r] >> c) & 1:
                    m |= 1 << (precision - 1 - (i * q + r))
        if m:
            shifts.append(d)
            masks.append(m)
    return _Banded(tuple(shifts), tuple(masks))


@dataclass(frozen=True)
class _Chunked:
    """A block-diagonal matrix applied by one table lookup per q-bit digit block."""

    q: int
    shifts: tuple[int, ...]
    tables: tuple[np.ndarray, ...]

    def apply(self, w: np.ndarray, tmp: np.ndarray) -> np.ndarray:
        out = np.zeros_like(w)
        mask = U64((1 << self.q) - 1)
        for sh, table in zip(self.shifts, self.tables):
            np.right_shift(w, U64(sh), out=tmp)
            np.bitwise_and(tmp, mask, out=tmp)
            np.bitwise_xor(out, np.take(table, tmp.view(np.int64), mode="clip"), out=out)
        return out


def _chunked_diag(blocks: Sequence[BitMatrix], q: int, precision: int) -> _Chunked:
    # digit block i occupies word bits [precision - (i+1)q, precision - iq), reversed
    shifts, tables = [], []
    for i, b in enumerate(blocks):
        sh = precision - (i + 1) * q
        table = np.zeros(1 << q, dtype=U64)
        for x in range(1 << q):
            y = (b @ BitVector(q, reverse_bits(x, q))).bits
            table[x] = reverse_bits(y, q) << sh
        shifts.append(sh)
        tables.append(table)
    return _Chunked(q, tuple(shifts), tuple(tables))


def _block_diag(blocks: Sequence[BitMatrix], q: int, precision: int) -> _Banded | _Chunked:
    """Cheaper of the diagonal and the lookup form (numpy passes per apply)."""
    banded = _banded_diag(blocks, q, precision)
    if 3 * len(banded.shifts) <= 4 * len(blocks):
        return banded
    return _chunked_diag(blocks, q, precision)


def _zeta_stages(q: int, precision: int) -> list[tuple[int, int]]:
    """Digit-space shift/mask stages of the block Pascal multiply by P(I_q)."""
    nb = precision // q
    stages = []
    lvl = 1
    while lvl < nb:
        m = 0
        for i in range(nb):
            if not i & lvl and i + lvl < nb:
                m |= ((1 << q) - 1) << (i * q)
        stages.append((q * lvl, m))
        lvl <<= 1
    return stages


def pascal_identity_apply(v: np.ndarray, q: int, precision: int) -> np.ndarray:
    """Digit vectors times P(I_q) in log2(precision/q) shift-XOR stages."""
    v = np.asarray(v, dtype=U64).copy()
    for sh, m in _zeta_stages(q, precision):
        v ^= (v >> U64(sh)) & U64(m)
    return v


class SPZPlan:
    """Precomputed factors of P(a) = D(a)^-1 P(I) D(a) for each dimension of a raw set.

    All factors are mirrored into coordinate-word space, so the index is bit
    reversed once per batch and shared by every dimension.
    """

    def __init__(self, alphabet: Alphabet, precision: int = DEFAULT_PRECISION, dims: Sequence[int] | None = None):
        q = alphabet.q
        if precision % q:
            raise ValueError(f"precision {precision} is not a multiple of q={q}")
        self.q, self.precision = q, precision
        self.dims = list(range(alphabet.size)) if dims is None else list(dims)
        nb = precision // q
        self.stages = [(sh, reverse_bits(m, precision)) for sh, m in _zeta_stages(q, precision)]
        self.plans: list[tuple[_Banded | _Chunked, _Banded | _Chunked] | None] = []
        for k in self.dims:
            a = alphabet.symbols[k]
            if a.is_zero():
                self.plans.append(None)
                continue
            ainv = mat_inverse(a)
            fwd, inv = [BitMatrix.identity(q)], [BitMatrix.identity(q)]
            for _ in range(nb - 1):
                fwd.append(mat_mul(fwd[-1], a))
                inv.append(mat_mul(inv[-1], ainv))
            self.plans.append((_block_diag(fwd, q, precision), _block_diag(inv, q, precision)))

    def _dim(self, rev: np.ndarray, c: int, tmp: np.ndarray) -> np.ndarray:
        plan = self.plans[c]
        if plan is None:
            return rev
        fwd, inv = plan
        w = fwd.apply(rev, tmp)
        for sh, m in self.stages:
            np.left_shift(w, U64(sh), out=tmp)
            np.bitwise_and(tmp, U64(m), out=tmp)
            np.bitwise_xor(w, tmp, out=w)
        return inv.apply(w, tmp)

    def words(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=U64).ravel()
        _check_indices(idx, self.precision)
        rev = reverse_bits_array(idx, self.precision)
        tmp = np.empty_like(rev)
        out = np.empty((len(self.dims), idx.size), dtype=U64)
        for c in range(len(self.dims)):
            out[c] = self._dim(rev, c, tmp)
        return np.ascontiguousarray(out.T)


def spz_sample(alphabet: Alphabet, dim: int, v: int, precision: int = DEFAULT_PRECISION) -> int:
    """Coordinate word of dimension ``dim`` for index ``v`` via the S-P-Z factorization."""
    if not 0 <= dim < alphabet.size:
        raise ValueError(f"dimension {dim} has no symbol in the alphabet")
    plan = SPZPlan(alphabet, precision, [dim])
    return int(plan.words(np.array([v], dtype=U64))[0, 0])


def generate_words(
    g: GeneratorSet,
    indices,
    scramble: ScrambleSpec = NO_SCRAMBLE,
    method: str = "auto",
    dims: Sequence[int] | None = None,
) -> np.ndarray:
    """(N, s) coordinate words; ``method`` is naive, spz, or auto (spz when the set is raw)."""
    raw = g.provenance == "raw" and g.alphabet is not None
    if method == "auto":
        method = "spz" if raw else "naive"
    if method == "spz":
        if not raw:
            raise ValueError("the spz path needs a raw generator set with its alphabet")
        words = SPZPlan(g.alphabet, g.precision, dims).words(indices)
    elif method == "naive":
        words = naive_words(g, indices, dims)
    else:
        raise ValueError(f"unknown method {method!r}")
    return apply_scramble(words, g.precision, scramble, dims)


def words_to_floats(words: np.ndarray, precision: int) -> np.ndarray:
    # exact: words < 2^53 after truncation to 53 significant bits
    w = np.asarray(words, dtype=U64)
    if precision > 53:
        w = w >> U64(precision - 53)
        precision = 53
    return w.astype(np.float64) / float(1 << precision)


def generate_points(g: GeneratorSet, n: int, scramble: ScrambleSpec = NO_SCRAMBLE, start: int = 0, method: str = "auto") -> np.ndarray:
    idx = np.arange(start, start + n, dtype=U64)
    return words_to_floats(generate_words(g, idx, scramble, method), g.precision)


# --- compact 16D generator --------------------------------------------------------


def _nib_mul(a: BitMatrix, x: int) -> int:
    out = 0
    for r, row in enumerate(a.rows):
        out |= ((row & x).bit_count() & 1) << r
    return out


def compact_alpha_points(alpha_word: int = 0x13A5, scramble: ScrambleSpec = NO_SCRAMBLE) -> np.ndarray:
    """256 points in 16 dimensions from one 16-bit primitive 4x4 block.

    Each index has two base-16 digits (lo, hi).  Dimension 0 is the identity;
    dimension k >= 1 uses P(alpha^(k-1)), i.e. digits (lo + alpha^(k-1) hi, hi),
    with the multiplier advanced by one alpha multiply per dimension.
    Returns an (256, 16) array of 8-bit coordinate words.
    """
    a = BitMatrix.from_word(alpha_word, 4)
    if not is_primitive(a):
        raise ValueError(f"0x{alpha_word:04X} is not a primitive 4x4 block")
    mul = [[_nib_mul(a, x) for x in range(16)]]  # alpha times nibble
    out = np.zeros((256, 16), dtype=U64)
    for v in range(256):
        lo, hi = v & 15, v >> 4
        out[v, 0] = reverse_bits(lo | hi << 4, 8)
        t = hi  # alpha^(k-1) * hi, starting at k = 1
        for k in range(1, 16):
            out[v, k] = reverse_bits((lo ^ t) | hi << 4, 8)
            t = mul[0][t]
    return apply_scramble(out, 8, scramble)


def compact_generator_set(alpha_word: int = 0x13A5) -> GeneratorSet:
    """The explicit q=4, 8-bit generator set matching :func:`compact_alpha_points`."""
    return build_sz_generators(alphabet_from_alpha(BitMatrix.from_word(alpha_word, 4)), 8)


# --- output formats --------------------------------------------------------------

BINARY_MAGIC = b"SZPT"


def write_csv(fh, words: np.ndarray, precision: int) -> None:
    pts = words_to_floats(words, precision)
    for row in pts:
        fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def write_binary(fh, words: np.ndarray, precision: int) -> None:
    words = np.asarray(words, dtype="<u8")
    n, s = words.shape
    fh.write(BINARY_MAGIC + struct.pack("<IIQ", s, precision, n))
    fh.write(words.tobytes())


def read_binary(fh) -> tuple[np.ndarray, int]:
    head = fh.read(20)
    if head[:4] != BINARY_MAGIC:
        raise ValueError("not an SZ point file")
    s, precision, n = struct.unpack("<IIQ", head[4:])
    data = np.frombuffer(fh.read(8 * n * s), dtype="<u8").reshape(n, s)
    return data.astype(U64), precision


# --- scipy engine ----------------------------------------------------------------


class SZEngine(qmc.QMCEngine):
    """SZ sequence as a :class:`scipy.stats.qmc.QMCEngine`.

    ``generators`` defaults to the raw set of the standard alphabet with the
    smallest block size covering ``d``.  ``scramble=True`` applies Owen
    scrambling keyed by a 64-bit seed drawn from ``rng``.
    """

    def __init__(
        self,
        d: int,
        *,
        generators: GeneratorSet | None = None,
        scramble: bool = True,
        method: str = "auto",
        rng=None,
    ) -> None:
        super().__init__(d=d, rng=rng)
        if generators is None:
            from .alphabet import standard_alphabet

            q = max(1, (d - 1).bit_length())
            prec = 64 - 64 % q
            generators = build_sz_generators(standard_alphabet(q), prec)
        if d > generators.s:
            raise ValueError(f"generator set has only {generators.s} dimensions")
        self.generators = generators
        self.scramble = scramble
        self.method = method
        self._spec = self._make_spec()

    def _make_spec(self) -> ScrambleSpec:
        if not self.scramble:
            return NO_SCRAMBLE
        return ScrambleSpec("owen", int(self.rng.integers(0, 1 << 63)))

    def reset(self):
        super().reset()
        self._spec = self._make_spec()
        return self

    def _random(self, n: int = 1, *, workers: int = 1) -> np.ndarray:
        idx = np.arange(self.num_generated, self.num_generated + n, dtype=U64)
        words = generate_words(self.generators, idx, self._spec, self.method, list(range(self.d)))
        return words_to_floats(words, self.generators.precision)
