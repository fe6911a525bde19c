from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szseq.alphabet import embed, enumerate_alphabets, nest_sort, nesting_chain, standard_alphabet
from szseq.gf2 import BitMatrix, block_get, mat_mul, mat_pow
from szseq.netcheck import check_net, check_sequence
from szseq.szgen import (
    GeneratorSet,
    build_ensembled_generators,
    build_nested_generators,
    build_sz_generators,
    format_generator_set,
    nested_chain,
    nesting_factor,
    parse_generator_set,
    pascal_matrix,
    random_unit_lower,
    read_generator_set,
    tezuka_scramble,
    write_generator_set,
    xor_vector,
)

ALPH4 = standard_alphabet(4)


def test_q2_template_bit_exact(q2_template):
    g = build_sz_generators(standard_alphabet(2), 32)
    assert list(g.matrices) == q2_template


def test_q1_is_identity_and_binary_pascal(sobol_pair):
    g = build_sz_generators(standard_alphabet(1), 32)
    assert list(g.matrices) == sobol_pair


def test_pascal_entries_follow_lucas():
    # q = 1: entry (i, j) is C(j, i) mod 2
    p = pascal_matrix(BitMatrix.identity(1), 1, 24)
    for i in range(24):
        for j in range(24):
            assert p[i, j] == math.comb(j, i) % 2


def test_pascal_blocks():
    a = ALPH4.alpha_symbol
    p = pascal_matrix(a, 4, 32)
    for i in range(8):
        for j in range(8):
            want = mat_pow(a, j - i) if j >= i and math.comb(j, i) % 2 else BitMatrix.zero(4)
            assert block_get(p, i, j, 4) == want


@given(st.integers(0, 15), st.integers(0, 15))
@settings(max_examples=60, deadline=None)
def test_pascal_sum_to_product(i, j):
    a, x = ALPH4[i], ALPH4[j]
    assert pascal_matrix(a + x, 4, 32) == mat_mul(pascal_matrix(a, 4, 32), pascal_matrix(x, 4, 32))


@given(st.integers(0, 15), st.integers(0, 15))
@settings(max_examples=40, deadline=None)
def test_pascal_matrices_commute(i, j):
    p, r = pascal_matrix(ALPH4[i], 4, 32), pascal_matrix(ALPH4[j], 4, 32)
    assert mat_mul(p, r) == mat_mul(r, p)


def test_pascal_zero_symbol_is_identity():
    assert pascal_matrix(BitMatrix.zero(3), 3, 30).is_identity()


def test_pascal_precision_must_divide():
    with pytest.raises(ValueError):
        pascal_matrix(ALPH4[2], 4, 30)


@pytest.mark.parametrize("q", [2, 4])
def test_nesting_factor_identity(q):
    # N(a) P(e(a)) = P(a) over the nesting block size
    small = nesting_chain(q)[-2]
    for a in small.symbols:
        lhs = mat_mul(nesting_factor(a, q // 2, 32), pascal_matrix(embed(a), q, 32))
        assert lhs == pascal_matrix(a, q // 2, 32)


def test_nested_q1_gives_sobol_pair(sobol_pair):
    chain = nesting_chain(2)
    g = build_nested_generators(chain[0], chain[1], 32)
    assert g.s == 4
    assert [g[0], g[1]] == sobol_pair
    assert check_sequence(g, 16, base_bits=2).passed
    assert check_sequence(g, 32, dims=[0, 1], base_bits=1).passed


def test_nested_rejects_wrong_sizes():
    with pytest.raises(ValueError):
        build_nested_generators(standard_alphabet(1), standard_alphabet(4), 32)


def test_nested_chain_recovers_levels():
    chain = nesting_chain(4)
    got = nested_chain(chain[-1])
    assert [a.q for a in got] == [1, 2, 4]
    for lo, hi in zip(got, got[1:]):
        assert all(hi[i] == embed(x) for i, x in enumerate(lo.symbols))


def _bands_ok(g, width, base_bits, max_m):
    return all(
        check_sequence(g, max_m, dims=list(range(k, k + width)), base_bits=base_bits).passed
        for k in range(0, g.s, width)
    )


@pytest.mark.parametrize("shuffle_seed", [0, 7])
def test_ensembled_q2_pairs(shuffle_seed):
    g = build_ensembled_generators(nesting_chain(2)[-1], 32, shuffle_seed=shuffle_seed)
    assert _bands_ok(g, 2, 1, 32)
    assert check_sequence(g, 16, base_bits=2).passed


@pytest.mark.parametrize("shuffle_seed", [0, 11])
def test_ensembled_q4_pairs_and_quads(shuffle_seed):
    g = build_ensembled_generators(nesting_chain(4)[-1], 16, shuffle_seed=shuffle_seed)
    assert g.s == 16
    assert _bands_ok(g, 2, 1, 16)
    assert _bands_ok(g, 4, 2, 8)
    assert check_sequence(g, 3, base_bits=4).passed


def test_ensembled_bands_are_reorderings():
    # each aligned quad is the first quad times a Pascal factor on the right
    chain = nesting_chain(4)
    g = build_ensembled_generators(chain[-1], 16)
    for h in range(1, 4):
        p = pascal_matrix(chain[-1][4 * h], 4, 16)
        for l in range(4):
            assert g[4 * h + l] == mat_mul(g[l], p)


def test_unaligned_pair_fails():
    g = build_ensembled_generators(nesting_chain(4)[-1], 16)
    assert not check_sequence(g, 16, dims=[1, 2], base_bits=1).passed


def test_symbol_shuffle_keeps_full_set_only():
    g = build_ensembled_generators(nesting_chain(4)[-1], 16, shuffle_seed=3, shuffle="symbol")
    assert check_sequence(g, 3, base_bits=4).passed
    assert not _bands_ok(g, 2, 1, 16)


def test_ensembled_needs_nest_sorted():
    a = standard_alphabet(4)
    with pytest.raises(ValueError):
        build_ensembled_generators(a, 32)


def test_q3_nest_sorted_set_has_no_embedded_chain():
    # odd block sizes contain no subfield of half the size, so no band levels exist
    a = nest_sort(standard_alphabet(3))
    assert [x.q for x in nested_chain(a)] == [3]
    g = build_ensembled_generators(a, 30)
    assert check_sequence(g, 3, base_bits=3).passed


def test_random_unit_lower():
    m = random_unit_lower(20, np.random.default_rng(1))
    for i, r in enumerate(m.rows):
        assert r >> i == 1


def test_tezuka_preserves_net_reports():
    g = build_sz_generators(standard_alphabet(2), 16)
    t = tezuka_scramble(g, 5)
    assert t.matrices != g.matrices
    for m in range(1, 9):
        assert check_net(t, m).failures == check_net(g, m).failures == []
    assert tezuka_scramble(g, None) is g
    assert tezuka_scramble(g, [1, 2, 3, 4]) == tezuka_scramble(g, [1, 2, 3, 4])
    with pytest.raises(ValueError):
        tezuka_scramble(g, [1, 2])


def test_tezuka_preserves_failures_too():
    g = GeneratorSet(1, 8, (BitMatrix.identity(8), BitMatrix.identity(8)), "test")
    t = tezuka_scramble(g, 9)
    assert [f[:2] for f in check_net(t, 2).failures] == [f[:2] for f in check_net(g, 2).failures]


def test_xor_vector():
    assert all(v.bits == 0 for v in xor_vector(0, 3, 32))
    a = xor_vector(5, 3, 32)
    assert a == xor_vector(5, 3, 32)
    assert any(v.bits for v in a)
    assert all(v.bits >> 32 == 0 for v in a)


@pytest.mark.parametrize("style", ["hex", "dots"])
def test_file_round_trip(tmp_path, style):
    g = build_sz_generators(standard_alphabet(3), 30)
    text = format_generator_set(g, style)
    back = parse_generator_set(text)
    assert back == g
    assert back.alphabet.symbols == g.alphabet.symbols
    p = tmp_path / "g.txt"
    write_generator_set(p, g, style)
    assert read_generator_set(p) == g


def test_parse_missing_header():
    with pytest.raises(ValueError):
        parse_generator_set("q=2\nsize=2\n1.\n.1\n")


def test_select_and_truncate():
    g = build_sz_generators(standard_alphabet(2), 32)
    sub = g.select([1, 3])
    assert sub.matrices == (g[1], g[3])
    t = g.truncate(16)
    assert t.precision == 16
    assert t[2] == pascal_matrix(g.alphabet[2], 2, 16)


def test_every_q3_alphabet_gives_a_valid_set():
    for a in enumerate_alphabets(3):
        g = build_sz_generators(a, 9)
        assert check_sequence(g, 3, base_bits=3).passed
