"""Comparison samplers: Joe-Kuo Sobol, randomized Halton, independent uniform."""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..gf2 import BitMatrix
from ..szgen import GeneratorSet


@dataclass(frozen=True)
class DirectionNumbers:
    d: int
    s: int
    a: int
    m: tuple[int, ...]


def default_joe_kuo_path() -> str:
    return str(resources.files("szseq.data").joinpath("new-joe-kuo-6.64"))


def read_joe_kuo(path: str | os.PathLike | None = None) -> list[DirectionNumbers]:
    """Parse the ``d s a m_i`` text format (header line optional)."""
    path = default_joe_kuo_path() if path is None else path
    if not os.path.exists(path):
        raise FileNotFoundError(f"direction-number file not found: {path}")
    out = []
    with open(path) as fh:
        for ln in fh:
            parts = ln.split()
            if not parts or not parts[0].isdigit():
                continue
            d, s, a = (int(x) for x in parts[:3])
            m = tuple(int(x) for x in parts[3:3 + s])
            if len(m) != s:
                raise ValueError(f"line for d={d} has {len(m)} initial numbers, expected {s}")
            out.append(DirectionNumbers(d, s, a, m))
    return out


def _direction_columns(dn: DirectionNumbers | None, precision: int) -> list[int]:
    """Column words of one Sobol dimension, top bit of ``precision`` = first digit."""
    if dn is None:
        m = [1] * precision
    else:
        s, a = dn.s, dn.a
        m = list(dn.m)
        for i in range(s, precision):
            v = m[i - s] ^ (m[i - s] << s)
            for k in range(1, s):
                if (a >> (s - 1 - k)) & 1:
                    v ^= m[i - k] << k
            m.append(v)
    # m_i / 2^i scaled to precision bits
    return [m[i] << (precision - i - 1) for i in range(precision)]


def build_sobol_generators(s: int, precision: int = 32, path=None) -> GeneratorSet:
    """Binary generator matrices of the first ``s`` Sobol dimensions."""
    dirs = read_joe_kuo(path) if s > 1 else []
    if s - 1 > len(dirs):
        raise ValueError(f"direction numbers cover only {len(dirs) + 1} dimensions")
    mats = []
    for k in range(s):
        cols = _direction_columns(dirs[k - 1] if k else None, precision)
        # column word bit (precision-1-r) is digit r
        rows = []
        for r in range(precision):
            bit = precision - 1 - r
            rows.append(sum(((c >> bit) & 1) << j for j, c in enumerate(cols)))
        mats.append(BitMatrix(precision, tuple(rows)))
    return GeneratorSet(1, precision, tuple(mats), "sobol-joekuo")


_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


def halton_points(n: int, s: int, rng: np.random.Generator | None = None, start: int = 0) -> np.ndarray:
    """Halton points; with ``rng`` every digit position of every base gets a random permutation."""
    if s > len(_PRIMES):
        raise ValueError(f"at most {len(_PRIMES)} dimensions")
    idx = np.arange(start, start + n, dtype=np.int64)
    out = np.zeros((n, s))
    for d in range(s):
        b = _PRIMES[d]
        ndig = int(np.ceil(53 / np.log2(b)))
        scale = 1.0 / b
        x = np.zeros(n)
        v = idx.copy()
        for _ in range(ndig):
            dig = v % b
            if rng is not None:
                dig = rng.permutation(b)[dig]
            x += dig * scale
            scale /= b
            v //= b
            if rng is None and not v.any():
                break
        out[:, d] = x
    return np.minimum(out, np.nextafter(1.0, 0.0))


def independent_points(n: int, s: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, s))
