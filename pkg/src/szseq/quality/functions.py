"""Radial test integrands built from three 1D profiles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

R_END = 3 / np.pi
R_START = R_END - 0.2
SIGMA = 1 / 3

KINDS = ("g0", "g1", "ginf")
FORMS = ("product2x2", "full4d", "sum-of-products", "all-pairs-product")
FORM_DIMS = {"product2x2": 4, "full4d": 4, "sum-of-products": 8, "all-pairs-product": 4}


def g0(r):
    """1 inside radius R_END, 0 from R_END on."""
    return np.where(np.asarray(r) < R_END, 1.0, 0.0)


def g1(r):
    """1 up to R_START, 0 from R_END, linear in between."""
    t = (np.asarray(r, dtype=np.float64) - R_START) / (R_END - R_START)
    return 1.0 - np.clip(t, 0.0, 1.0)


def ginf(r):
    r = np.asarray(r, dtype=np.float64)
    return np.exp(-(r * r) / (2 * SIGMA * SIGMA))


PROFILES = {"g0": g0, "g1": g1, "ginf": ginf}


@dataclass(frozen=True)
class TestFunction:
    __test__ = False  # not a pytest class

    kind: str
    form: str
    offset: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}")
        if self.offset < 0:
            raise ValueError("offset must be nonnegative")

    @property
    def dims_needed(self) -> int:
        return self.offset + FORM_DIMS[self.form]

    @property
    def name(self) -> str:
        return f"{self.kind}-{self.form}"

    def __call__(self, points) -> np.ndarray:
        return evaluate_test_function(self, points)


def _radial(g, pts, dims):
    sq = np.zeros(pts.shape[0])
    for d in dims:
        sq += pts[:, d] * pts[:, d]
    return g(np.sqrt(sq))


def evaluate_test_function(f: TestFunction, points) -> np.ndarray:
    """Values at each row of an (N, s) array (or a single point)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] < f.dims_needed:
        raise ValueError(f"{f.name} at offset {f.offset} needs {f.dims_needed} dimensions, got {pts.shape[1]}")
    g = PROFILES[f.kind]
    o = f.offset
    if f.form == "product2x2":
        return _radial(g, pts, (o, o + 1)) * _radial(g, pts, (o + 2, o + 3))
    if f.form == "full4d":
        return _radial(g, pts, range(o, o + 4))
    if f.form == "sum-of-products":
        return (_radial(g, pts, (o, o + 1)) * _radial(g, pts, (o + 2, o + 3))
                + _radial(g, pts, (o + 4, o + 5)) * _radial(g, pts, (o + 6, o + 7)))
    out = np.ones(pts.shape[0])
    for i, j in itertools.combinations(range(o, o + 4), 2):
        out *= _radial(g, pts, (i, j))
    return out


def all_test_functions(offset: int = 0, kinds=KINDS, forms=FORMS) -> list[TestFunction]:
    return [TestFunction(k, fm, offset) for k in kinds for fm in forms]
