"""Command-line entry point: ``szseq <subcommand>``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import alphabet as alph
from . import netcheck, sampler, szgen

EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("szseq")


class InputError(Exception):
    pass


def threads() -> int:
    try:
        return max(1, int(os.environ.get("SZSEQ_THREADS", "1")))
    except ValueError:
        return 1


@contextmanager
def _text_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


@contextmanager
def _binary_out(path):
    if path in (None, "-"):
        if sys.stdout.isatty():
            raise InputError("refusing to write binary output to a terminal; use --out")
        yield sys.stdout.buffer
    else:
        with open(path, "wb") as fh:
            yield fh


def _read_text(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise InputError(str(e)) from None


def _load_set(path) -> szgen.GeneratorSet:
    try:
        return szgen.parse_generator_set(_read_text(path))
    except ValueError as e:
        raise InputError(f"malformed generator set {path}: {e}") from None


def _load_alphabet(path) -> alph.Alphabet:
    try:
        recs = alph.parse_alphabets(_read_text(path))
    except ValueError as e:
        raise InputError(f"malformed alphabet file {path}: {e}") from None
    if not recs:
        raise InputError(f"no alphabet in {path}")
    return recs[0]


# --- subcommands ----------------------------------------------------------------


def cmd_alphabets(args) -> int:
    q = args.q
    if args.enumerate:
        found = alph.enumerate_alphabets(q)
        with _text_out(args.out) as fh:
            if args.out:
                fh.write("".join(alph.format_alphabet(a) + "\n" for a in found))
        print(f"count={len(found)}")
        return EXIT_OK
    if args.nest:
        nested = _load_alphabet(args.nest)
        if nested.q * 2 != q:
            raise InputError(f"--q must be twice the nested block size ({2 * nested.q})")
        a = alph.find_nesting_alphabet(nested, rng_seed=args.seed)
        a = alph.order_nesting(a, alph.nest_sort(nested) if not alph.is_nest_sorted(nested) else nested)
    elif args.search:
        a = alph.alpha_search(q, timeout_attempts=args.timeout, rng_seed=args.seed)
    else:
        a = alph.standard_alphabet(q)
    if args.nest_sort and not args.nest:
        a = alph.nest_sort(a)
    with _text_out(args.out) as fh:
        fh.write(alph.format_alphabet(a) + "\n")
    if args.out:
        print("count=1")
    return EXIT_OK


def _build_alphabet(args) -> alph.Alphabet:
    if args.alphabet:
        return _load_alphabet(args.alphabet)
    if args.mode in ("nested", "ensembled") and args.q & (args.q - 1) == 0:
        return alph.nesting_chain(args.q, rng_seed=args.seed)[-1]
    return alph.standard_alphabet(args.q)


def cmd_build(args) -> int:
    if args.precision % args.q:
        raise InputError(f"precision {args.precision} is not a multiple of q={args.q}")
    mode = args.mode
    if mode == "raw":
        g = szgen.build_sz_generators(_build_alphabet(args), args.precision)
    elif mode == "nested":
        if args.q % 2:
            raise InputError("nested sets need an even block size")
        chain = alph.nesting_chain(args.q, rng_seed=args.seed) if args.q & (args.q - 1) == 0 else None
        if chain is None or len(chain) < 2:
            raise InputError("nested sets need q a power of two >= 2")
        g = szgen.build_nested_generators(chain[-2], chain[-1], args.precision)
    else:
        a = _build_alphabet(args)
        if not alph.is_nest_sorted(a):
            a = alph.nest_sort(a)
        g = szgen.build_ensembled_generators(a, args.precision, args.shuffle_seed, args.shuffle)
    if args.tezuka_seed:
        g = szgen.tezuka_scramble(g, args.tezuka_seed)
    with _text_out(args.out) as fh:
        fh.write(szgen.format_generator_set(g, args.style))
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.compact_alpha is not None:
        word = int(args.compact_alpha, 0)
        spec = sampler.ScrambleSpec(args.scramble, args.seed)
        try:
            words = sampler.compact_alpha_points(word, spec)
        except ValueError as e:
            raise InputError(str(e)) from None
        words = words[: args.count]
        precision = 8
    else:
        if not args.set:
            raise InputError("generate needs a generator-set file or --compact-alpha")
        g = _load_set(args.set)
        if args.count > (1 << g.precision):
            raise InputError(f"count exceeds 2^{g.precision}")
        dims = list(range(args.dims if args.dims else g.s))
        if len(dims) > g.s:
            raise InputError(f"set has only {g.s} dimensions")
        spec = sampler.ScrambleSpec(args.scramble, args.seed)
        idx = np.arange(args.start, args.start + args.count, dtype=np.uint64)
        try:
            words = sampler.generate_words(g, idx, spec, args.method, dims)
        except ValueError as e:
            raise InputError(str(e)) from None
        precision = g.precision
    if args.format == "binary":
        with _binary_out(args.out) as fh:
            sampler.write_binary(fh, words, precision)
    else:
        with _text_out(args.out) as fh:
            sampler.write_csv(fh, words, precision)
    return EXIT_OK


def cmd_validate(args) -> int:
    g = _load_set(args.set)
    max_m = args.max_m if args.max_m else g.precision // g.q
    dims = [int(x) for x in args.dims.split(",")] if args.dims else None
    base = args.base_bits if args.base_bits else g.q
    print(f"# s={g.s if dims is None else len(dims)} q={g.q} base_bits={base} max_m={max_m} budget={args.budget:g}")
    try:
        rep = netcheck.check_sequence(g, max_m, dims=dims, base_bits=base, budget=args.budget)
    except alph.BudgetExceeded as e:
        # partial report: as many levels as fit the budget
        print(f"# budget exceeded: {e}")
        done = 0
        s = g.s if dims is None else len(dims)
        spent = 0.0
        fails = []
        for m in range(1, max_m + 1):
            spent += netcheck.composition_count(m, s) * (base * m) ** 2
            if spent > args.budget:
                break
            sub = netcheck.check_net(g, m, dims=dims, base_bits=base)
            fails.extend(sub.failures)
            done = m
        partial = netcheck.NetReport(done, base, fails)
        for ln in partial.lines():
            print(ln)
        print(f"# PARTIAL checked m=1..{done} of {max_m}")
        return EXIT_BUDGET
    for ln in rep.lines():
        print(ln)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_discrepancy(args) -> int:
    from .quality.discrepancy import star_discrepancy

    g = _load_set(args.set)
    dims = [int(x) for x in args.dims.split(",")] if args.dims else list(range(min(g.s, 4)))
    print("realization,N,dstar")
    for r in range(args.realizations):
        spec = sampler.ScrambleSpec(args.scramble, args.seed + r if args.scramble != "none" else 0)
        words = sampler.generate_words(g, np.arange(args.count, dtype=np.uint64), spec, dims=dims)
        pts = sampler.words_to_floats(words, g.precision)
        n = 1
        while n <= args.count:
            try:
                d = star_discrepancy(pts[:n], budget=args.budget)
            except alph.BudgetExceeded as e:
                print(f"# {e}", file=sys.stderr)
                return EXIT_BUDGET
            print(f"{r},{n},{d:.17g}")
            n *= 2
    return EXIT_OK


def cmd_bench(args) -> int:
    from .quality import bench
    from .quality.functions import FORMS, KINDS, all_test_functions

    kinds = args.functions.split(",") if args.functions else list(KINDS)
    forms = args.forms.split(",") if args.forms else list(FORMS)
    samplers = args.samplers.split(",") if args.samplers else list(bench.SAMPLERS)
    bad = [k for k in kinds if k not in KINDS] + [f for f in forms if f not in FORMS]
    if bad:
        raise InputError(f"unknown function kind/form: {', '.join(bad)}")
    if args.joe_kuo and not os.path.exists(args.joe_kuo):
        raise InputError(f"direction-number file not found: {args.joe_kuo}")
    funcs = all_test_functions(0, kinds, forms)
    try:
        res = bench.mrse_benchmark(
            samplers, funcs, args.trials, args.max_log2_n, args.seed, args.joe_kuo, workers=threads()
        )
    except ValueError as e:
        raise InputError(str(e)) from None
    with _text_out(args.out) as fh:
        fh.write(bench.results_to_csv(res))
    return EXIT_OK


def cmd_import_joekuo(args) -> int:
    from .quality.baselines import read_joe_kuo

    try:
        dirs = read_joe_kuo(args.path)
    except (FileNotFoundError, ValueError) as e:
        raise InputError(str(e)) from None
    dirs = dirs[: args.dims - 1] if args.dims else dirs
    with _text_out(args.out) as fh:
        fh.write("d       s       a       m_i\n")
        for d in dirs:
            fh.write(f"{d.d}\t{d.s}\t{d.a}\t{' '.join(map(str, d.m))}\n")
    print(f"# imported {len(dirs) + 1} dimensions", file=sys.stderr)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="szseq", description="SZ low-discrepancy sequences")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("alphabets", help="search, enumerate, or nest alphabets")
    a.add_argument("--q", type=int, required=True)
    g = a.add_mutually_exclusive_group()
    g.add_argument("--search", action="store_true", help="random alpha search")
    g.add_argument("--enumerate", action="store_true", help="enumerate all alphabets and print the count")
    g.add_argument("--nest", metavar="FILE", help="build a nesting alphabet of the alphabet in FILE")
    a.add_argument("--nest-sort", action="store_true")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--timeout", type=int, default=alph.DEFAULT_ATTEMPTS, help="search attempts")
    a.add_argument("--out")
    a.set_defaults(func=cmd_alphabets)

    b = sub.add_parser("build", help="build a generator-set file")
    b.add_argument("--q", type=int, required=True)
    b.add_argument("--precision", type=int, default=szgen.DEFAULT_PRECISION)
    m = b.add_mutually_exclusive_group()
    m.add_argument("--raw", dest="mode", action="store_const", const="raw")
    m.add_argument("--nested", dest="mode", action="store_const", const="nested")
    m.add_argument("--ensembled", dest="mode", action="store_const", const="ensembled")
    b.set_defaults(mode="raw")
    b.add_argument("--alphabet", help="alphabet file (default: standard or nesting chain)")
    b.add_argument("--seed", type=int, default=0, help="nesting search seed")
    b.add_argument("--shuffle-seed", type=int, default=0)
    b.add_argument("--shuffle", choices=("tezuka", "symbol"), default="tezuka")
    b.add_argument("--tezuka-seed", type=int, default=0)
    b.add_argument("--style", choices=("hex", "dots"), default="dots")
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    gp = sub.add_parser("generate", help="generate points")
    gp.add_argument("set", nargs="?")
    gp.add_argument("--compact-alpha", metavar="WORD")
    gp.add_argument("--count", type=int, default=256)
    gp.add_argument("--start", type=int, default=0)
    gp.add_argument("--dims", type=int)
    gp.add_argument("--scramble", choices=("none", "owen", "xor"), default="none")
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--method", choices=("auto", "naive", "spz"), default="auto")
    gp.add_argument("--format", choices=("csv", "binary"), default="csv")
    gp.add_argument("--out")
    gp.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check the net property level by level")
    v.add_argument("set")
    v.add_argument("--max-m", type=int)
    v.add_argument("--dims", help="comma-separated dimension subset")
    v.add_argument("--base-bits", type=int, help="digit size in bits (default q)")
    v.add_argument("--budget", type=float, default=netcheck.DEFAULT_BUDGET)
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("discrepancy", help="exact star discrepancy at powers of two")
    d.add_argument("set")
    d.add_argument("--dims", help="comma-separated dimensions (at most 4)")
    d.add_argument("--count", type=int, default=256)
    d.add_argument("--realizations", type=int, default=1)
    d.add_argument("--scramble", choices=("none", "owen"), default="owen")
    d.add_argument("--seed", type=int, default=1)
    d.add_argument("--budget", type=float, default=4e10)
    d.set_defaults(func=cmd_discrepancy)

    be = sub.add_parser("bench", help="MRSE integration benchmark (CSV)")
    be.add_argument("--functions", help="comma-separated kinds: g0,g1,ginf")
    be.add_argument("--forms", help="comma-separated forms")
    be.add_argument("--samplers", help="comma-separated sampler ids")
    be.add_argument("--trials", type=int, default=128)
    be.add_argument("--max-log2-n", type=int, default=14)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--joe-kuo", help="new-joe-kuo-6 direction-number file (default: packaged excerpt)")
    be.add_argument("--out")
    be.set_defaults(func=cmd_bench)

    j = sub.add_parser("import-joekuo", help="read and re-emit a Joe-Kuo direction-number file")
    j.add_argument("path")
    j.add_argument("--dims", type=int)
    j.add_argument("--out")
    j.set_defaults(func=cmd_import_joekuo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (alph.SearchTimeout, alph.BudgetExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
