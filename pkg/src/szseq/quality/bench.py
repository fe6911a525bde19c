"""MRSE integration benchmark over randomized samplers."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from ..alphabet import nesting_chain
from ..sampler import ScrambleSpec, generate_words, words_to_floats
from ..szgen import GeneratorSet, build_ensembled_generators
from .baselines import build_sobol_generators, halton_points, independent_points
from .functions import TestFunction, all_test_functions
from .reference import reference_value

SAMPLERS = ("sz-d0", "sz-d4", "sobol-d0", "sobol-d4", "halton", "independent")
DEFAULT_TRIALS = 128
DEFAULT_MAX_LOG2_N = 14
PRECISION = 32


@dataclass
class BenchResult:
    sampler: str
    function: str
    n: tuple[int, ...]
    mrse: tuple[float, ...]
    trials: int
    seed: int

    def at(self, n: int) -> float:
        return self.mrse[self.n.index(n)]


@lru_cache(maxsize=None)
def sz_bench_generators() -> GeneratorSet:
    """16D ensembled set (block size 4, nesting chain 1 -> 2 -> 4)."""
    return build_ensembled_generators(nesting_chain(4)[-1], PRECISION)


@lru_cache(maxsize=None)
def sobol_bench_generators(s: int, path: str | None) -> GeneratorSet:
    return build_sobol_generators(s, PRECISION, path)


def trial_seed(seed: int, trial: int, sampler_idx: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(trial), int(sampler_idx)])


def _digital_points(g: GeneratorSet, n: int, dims: int, ss: np.random.SeedSequence) -> np.ndarray:
    owen_seed = int(ss.generate_state(1, np.uint64)[0])
    idx = np.arange(n, dtype=np.uint64)
    w = generate_words(g, idx, ScrambleSpec("owen", owen_seed), dims=list(range(dims)))
    return words_to_floats(w, g.precision)


def sampler_points(name: str, n: int, dims: int, ss: np.random.SeedSequence, joe_kuo_path=None) -> np.ndarray:
    """One randomized realization of ``n`` points in ``dims`` dimensions."""
    base = name.split("-d")[0]
    if base == "sz":
        return _digital_points(sz_bench_generators(), n, dims, ss)
    if base == "sobol":
        return _digital_points(sobol_bench_generators(max(dims, 2), joe_kuo_path), n, dims, ss)
    if base == "halton":
        return halton_points(n, dims, np.random.default_rng(ss))
    if base == "independent":
        return independent_points(n, dims, np.random.default_rng(ss))
    raise ValueError(f"unknown sampler {name!r}")


def sampler_offset(name: str) -> int:
    return 4 if name.endswith("-d4") else 0


def _trial_errors(name, funcs, refs, n_max, ns, seed, trial, sidx, joe_kuo_path):
    off = sampler_offset(name)
    dims = max(TestFunction(f.kind, f.form, off).dims_needed for f in funcs)
    pts = sampler_points(name, n_max, dims, trial_seed(seed, trial, sidx), joe_kuo_path)
    out = np.empty((len(funcs), len(ns)))
    for i, f in enumerate(funcs):
        vals = TestFunction(f.kind, f.form, off)(pts)
        csum = np.cumsum(vals)
        est = csum[np.array(ns) - 1] / np.array(ns)
        out[i] = ((est - refs[i]) / refs[i]) ** 2
    return out


def mrse_benchmark(
    samplers: Sequence[str] = SAMPLERS,
    functions: Sequence[TestFunction] | None = None,
    trials: int = DEFAULT_TRIALS,
    max_log2_n: int = DEFAULT_MAX_LOG2_N,
    seed: int = 0,
    joe_kuo_path=None,
    workers: int = 1,
    reference: Callable[[TestFunction], float] = reference_value,
) -> list[BenchResult]:
    """MRSE at every power of two up to ``2^max_log2_n`` for each sampler and function.

    Each trial draws one randomized realization per sampler and evaluates all
    functions on it.  Per-trial seeds derive from ``seed``; errors are summed
    in trial order so the result is identical for any ``workers``.
    """
    funcs = list(functions) if functions is not None else all_test_functions()
    for s in samplers:
        if s not in SAMPLERS:
            raise ValueError(f"unknown sampler {s!r}")
    refs = [reference(f) for f in funcs]
    ns = [1 << k for k in range(max_log2_n + 1)]
    n_max = ns[-1]
    results = []
    for sidx, name in enumerate(samplers):
        sidx = SAMPLERS.index(name)

        def job(t, name=name, sidx=sidx):
            return _trial_errors(name, funcs, refs, n_max, ns, seed, t, sidx, joe_kuo_path)

        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                errs = list(ex.map(job, range(trials)))
        else:
            errs = [job(t) for t in range(trials)]
        total = np.zeros((len(funcs), len(ns)))
        for e in errs:
            total += e
        total /= trials
        for i, f in enumerate(funcs):
            results.append(BenchResult(name, f.name, tuple(ns), tuple(float(x) for x in total[i]), trials, seed))
    return results


def results_to_csv(results: Sequence[BenchResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sampler", "function", "N", "mrse", "trials", "seed"])
    for r in results:
        for n, m in zip(r.n, r.mrse):
            w.writerow([r.sampler, r.function, n, f"{m:.17g}", r.trials, r.seed])
    return buf.getvalue()


def lookup(results: Sequence[BenchResult], sampler: str, function: str) -> BenchResult:
    for r in results:
        if r.sampler == sampler and r.function == function:
            return r
    raise KeyError((sampler, function))
