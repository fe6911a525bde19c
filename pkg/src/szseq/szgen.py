"""SZ generator-matrix sets: raw, nested, ensembled, and scrambled variants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .alphabet import Alphabet, embed, is_nest_sorted, verify_field
from .gf2 import (
    BitMatrix,
    BitVector,
    block_diag,
    format_matrix,
    mat_mul,
    parse_matrix,
    top_left,
)

DEFAULT_PRECISION = 32


@dataclass(frozen=True)
class GeneratorSet:
    q: int
    precision: int
    matrices: tuple[BitMatrix, ...]
    provenance: str = "raw"
    alphabet: Alphabet | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 1 <= self.precision <= 64:
            raise ValueError("precision must be in 1..64")
        if self.precision % self.q:
            raise ValueError(f"precision {self.precision} is not a multiple of q={self.q}")
        if any(m.size != self.precision for m in self.matrices):
            raise ValueError("matrix sizes must equal the precision")

    @property
    def s(self) -> int:
        return len(self.matrices)

    def __len__(self) -> int:
        return len(self.matrices)

    def __getitem__(self, k):
        return self.matrices[k]

    def select(self, dims: Sequence[int]) -> GeneratorSet:
        """Sub-set of dimensions; spz metadata survives only for raw sets."""
        return GeneratorSet(
            self.q, self.precision, tuple(self.matrices[d] for d in dims), self.provenance + "+select"
        )

    def truncate(self, precision: int) -> GeneratorSet:
        return GeneratorSet(
            self.q, precision, tuple(top_left(m, precision) for m in self.matrices),
            self.provenance, self.alphabet,
        )


def _powers(a: BitMatrix, n: int) -> list[BitMatrix]:
    out = [BitMatrix.identity(a.size)]
    for _ in range(n - 1):
        out.append(mat_mul(out[-1], a))
    return out


def pascal_matrix(a: BitMatrix, q: int | None = None, precision_bits: int = DEFAULT_PRECISION) -> BitMatrix:
    """Block Pascal matrix: block (i, j) = a^(j-i) when C(j, i) is odd, else zero."""
    q = a.size if q is None else q
    if a.size != q:
        raise ValueError(f"block is {a.size}x{a.size}, expected q={q}")
    if precision_bits % q:
        raise ValueError(f"precision {precision_bits} is not a multiple of q={q}")
    nb = precision_bits // q
    pw = _powers(a, nb)
    rows = []
    for bi in range(nb):
        for r in range(q):
            word = 0
            for bj in range(bi, nb):
                # Lucas: C(j, i) is odd iff i is a submask of j
                if bi & bj == bi:
                    word |= pw[bj - bi].rows[r] << (bj * q)
            rows.append(word)
    return BitMatrix(precision_bits, tuple(rows))


def build_sz_generators(alphabet: Alphabet, precision_bits: int = DEFAULT_PRECISION) -> GeneratorSet:
    """One Pascal generator per alphabet symbol (the zero symbol gives the identity)."""
    if precision_bits % alphabet.q:
        raise ValueError(f"precision {precision_bits} is not a multiple of q={alphabet.q}")
    if not verify_field(alphabet):
        raise ValueError("alphabet is not a field")
    mats = tuple(pascal_matrix(s, alphabet.q, precision_bits) for s in alphabet.symbols)
    return GeneratorSet(alphabet.q, precision_bits, mats, "raw", alphabet)


def nesting_factor(a: BitMatrix, q: int | None = None, precision_bits: int = DEFAULT_PRECISION) -> BitMatrix:
    """Block-diagonal repetition of [[I, a], [0, I]] over 2q x 2q tiles."""
    q = a.size if q is None else q
    if a.size != q:
        raise ValueError(f"block is {a.size}x{a.size}, expected q={q}")
    ident = BitMatrix.identity(q)
    tile = BitMatrix(
        2 * q,
        tuple(ident.rows[i] | (a.rows[i] << q) for i in range(q)) + tuple(1 << (q + i) for i in range(q)),
    )
    padded = -(-precision_bits // (2 * q)) * 2 * q
    full = block_diag(tile, padded)
    return top_left(full, precision_bits)


def build_nested_generators(
    nested_alphabet: Alphabet, nesting_alphabet: Alphabet, precision_bits: int = DEFAULT_PRECISION
) -> GeneratorSet:
    """Pascal set of the nesting alphabet with embedded dimensions restored to the nested generators."""
    q = nested_alphabet.q
    if nesting_alphabet.q != 2 * q:
        raise ValueError("nesting alphabet must have twice the block size")
    if precision_bits % (2 * q):
        raise ValueError(f"precision must be a multiple of {2 * q}")
    emb = {embed(a).rows: a for a in nested_alphabet.symbols}
    keys = {s.rows for s in nesting_alphabet.symbols}
    if not all(k in keys for k in emb):
        raise ValueError("nesting alphabet does not contain every embedded symbol")
    mats = []
    for sym in nesting_alphabet.symbols:
        p = pascal_matrix(sym, 2 * q, precision_bits)
        a = emb.get(sym.rows)
        if a is not None:
            p = mat_mul(nesting_factor(a, q, precision_bits), p)
        mats.append(p)
    return GeneratorSet(2 * q, precision_bits, tuple(mats), "nested", nesting_alphabet)


# --- ensembling ---------------------------------------------------------------


def _half_block(b: BitMatrix, h: int) -> BitMatrix | None:
    """Return c when b == diag(c, c) with c of size h, else None."""
    m = (1 << h) - 1
    top = tuple(r & m for r in b.rows[:h])
    if any(r >> h for r in b.rows[:h]):
        return None
    if any(r & m for r in b.rows[h:]) or tuple(r >> h for r in b.rows[h:]) != top:
        return None
    return BitMatrix(h, top)


def nested_chain(alphabet: Alphabet) -> list[Alphabet]:
    """Peel the embedded sub-alphabets out of a nest-sorted alphabet.

    Returns ``[A_low, ..., alphabet]`` where each member's leading slots are
    the embeddings of the previous one, in order.  Peeling stops when q is
    odd or the leading band is not an embedded subfield.
    """
    chain = [alphabet]
    cur = alphabet
    while cur.q % 2 == 0:
        h = cur.q // 2
        n = 1 << h
        subs = []
        for sym in cur.symbols[:n]:
            c = _half_block(sym, h)
            if c is None:
                break
            # e(a) = diag(a^2, a^2): undo the squaring with the inverse Frobenius map
            subs.append(c ** (1 << (h - 1)) if c.rows != (0,) * h else c)
        if len(subs) != n:
            break
        alpha = next((i for i, s in enumerate(subs) if i and _is_primitive_block(s)), 1)
        low = Alphabet(h, tuple(subs), alpha=alpha)
        if not verify_field(low) or any(embed(a).rows != s.rows for a, s in zip(subs, cur.symbols)):
            break
        chain.insert(0, low)
        cur = low
    return chain


def _is_primitive_block(x: BitMatrix) -> bool:
    from .alphabet import is_primitive

    try:
        return is_primitive(x)
    except ValueError:
        return False


def _band_factor_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), 0xBA2D]))


def build_ensembled_generators(
    alphabet: Alphabet,
    precision_bits: int = DEFAULT_PRECISION,
    shuffle_seed: int = 0,
    shuffle: str = "tezuka",
) -> GeneratorSet:
    """Generators whose consecutive bands repeat the lower-dimensional sequences.

    Slot ``S*h + l`` (S = size of the embedded sub-alphabet) gets the lower
    generator ``l`` times ``P(symbol[S*h])``; since the symbol at that slot
    equals ``e(a_l) + symbol[S*h]`` this is a structure-preserving left factor
    on ``P(symbol)``.  The recursion runs down the chain of embedded
    subfields, so only block sizes that are powers of two get every band level.

    ``shuffle_seed`` decorrelates bands.  ``"tezuka"`` left-multiplies each
    band at each level by a random unit lower-triangular matrix, which keeps
    every band valid.  ``"symbol"`` left-multiplies by block-diagonal
    expansions of random nonzero symbols from the next alphabet up the chain;
    that keeps the full set valid but not the finer bands it acts on.
    """
    if not is_nest_sorted(alphabet):
        raise ValueError("alphabet is not nest-sorted (band relation violated)")
    if precision_bits % alphabet.q:
        raise ValueError(f"precision {precision_bits} is not a multiple of q={alphabet.q}")
    chain = nested_chain(alphabet)
    gens = [pascal_matrix(s, chain[0].q, precision_bits) for s in chain[0].symbols]
    for upper in chain[1:]:
        size = len(gens)
        nxt = []
        for h in range(len(upper.symbols) // size):
            p = pascal_matrix(upper.symbols[size * h], upper.q, precision_bits)
            nxt.extend(mat_mul(g, p) for g in gens)
        gens = nxt
    prov = "ensembled"
    if shuffle_seed:
        gens = _shuffle_bands(gens, chain, precision_bits, shuffle_seed, shuffle)
        prov += f"+shuffle-{shuffle}"
    return GeneratorSet(alphabet.q, precision_bits, tuple(gens), prov, alphabet)


def _shuffle_bands(gens, chain, precision_bits, seed, mode):
    rng = _band_factor_rng(seed)
    gens = list(gens)
    s = len(gens)
    widths = [len(a.symbols) for a in chain]
    if mode == "tezuka":
        # every band width from pairs up to half the set
        w = 2
        while w < s:
            for start in range(0, s, w):
                lt = random_unit_lower(precision_bits, rng)
                for k in range(start, start + w):
                    gens[k] = mat_mul(lt, gens[k])
            w *= 2
        return gens
    if mode == "symbol":
        # bands of width |A_j| get symbols from A_{j+1}
        for j, w in enumerate(widths[:-1]):
            up = chain[j + 1]
            for start in range(0, s, w):
                z = up.symbols[int(rng.integers(1, len(up.symbols)))]
                d = block_diag(z, precision_bits)
                for k in range(start, start + w):
                    gens[k] = mat_mul(d, gens[k])
        return gens
    raise ValueError(f"unknown shuffle mode {mode!r}")


# --- scrambling ---------------------------------------------------------------


def random_unit_lower(n: int, rng: np.random.Generator) -> BitMatrix:
    rows = []
    for i in range(n):
        low = int(rng.integers(0, 1 << i, dtype=np.uint64)) if i else 0
        rows.append(low | (1 << i))
    return BitMatrix(n, tuple(rows))


def tezuka_scramble(g: GeneratorSet, seeds: Sequence[int] | int | None) -> GeneratorSet:
    """Left-multiply every generator by a random unit lower-triangular matrix.

    ``seeds`` is one seed per dimension, a single base seed, or ``None`` for
    the identity scrambler.
    """
    if seeds is None:
        return g
    if isinstance(seeds, (int, np.integer)):
        ss = np.random.SeedSequence(int(seeds)).spawn(g.s)
        rngs = [np.random.default_rng(x) for x in ss]
    else:
        if len(seeds) != g.s:
            raise ValueError("need one seed per dimension")
        rngs = [np.random.default_rng(int(x)) for x in seeds]
    mats = tuple(mat_mul(random_unit_lower(g.precision, r), m) for r, m in zip(rngs, g.matrices))
    return GeneratorSet(g.q, g.precision, mats, g.provenance + "+tezuka", g.alphabet)


def xor_vector(seed: int, s: int, precision_bits: int) -> list[BitVector]:
    """Per-dimension digit offsets; seed 0 means no offset."""
    if seed == 0:
        return [BitVector(precision_bits, 0) for _ in range(s)]
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5A]))
    mask = (1 << precision_bits) - 1
    return [BitVector(precision_bits, int(rng.integers(0, 1 << 63, dtype=np.uint64)) << 1 & mask
                      | int(rng.integers(0, 2))) for _ in range(s)]


# --- file format --------------------------------------------------------------


def format_generator_set(g: GeneratorSet, style: str = "hex") -> str:
    lines = [f"q={g.q}", f"s={g.s}", f"precision={g.precision}", f"provenance={g.provenance}"]
    if g.alphabet is not None:
        lines.append(f"alpha={g.alphabet.alpha}")
        lines.append("alphabet=" + ",".join(f"{s.to_word():x}" for s in g.alphabet.symbols))
    for m in g.matrices:
        lines.append(format_matrix(m, style))
    return "\n".join(lines) + "\n"


def parse_generator_set(text: str) -> GeneratorSet:
    lines = [ln for ln in text.splitlines() if not ln.strip().startswith("#")]
    head: dict[str, str] = {}
    i = 0
    while i < len(lines):
        ln = lines[i].strip()
        if not ln:
            i += 1
            continue
        key, sep, val = ln.partition("=")
        if not sep or key == "size":
            break
        head[key] = val
        i += 1
    try:
        q, s, prec = int(head["q"]), int(head["s"]), int(head["precision"])
    except KeyError as e:
        raise ValueError(f"missing header field {e}") from None
    mats = []
    for _ in range(s):
        m, used = parse_matrix(lines[i:])
        mats.append(m)
        i += used
    alphabet = None
    if "alphabet" in head:
        syms = tuple(BitMatrix.from_word(int(h, 16), q) for h in head["alphabet"].split(","))
        alphabet = Alphabet(q, syms, alpha=int(head.get("alpha", 2 if q > 1 else 1)))
    return GeneratorSet(q, prec, tuple(mats), head.get("provenance", "unknown"), alphabet)


def read_generator_set(path) -> GeneratorSet:
    with open(path) as fh:
        return parse_generator_set(fh.read())


def write_generator_set(path, g: GeneratorSet, style: str = "hex") -> None:
    with open(path, "w") as fh:
        fh.write(format_generator_set(g, style))
