from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from szseq.alphabet import BudgetExceeded, standard_alphabet
from szseq.gf2 import BitMatrix
from szseq.netcheck import (
    REDUCED_BLOCKS,
    NetReport,
    check_net,
    check_sequence,
    composition_count,
    compositions,
    extend_once,
    extension_search,
    hybrid_matrix,
    initial_triples,
    oracle_check_net,
    stratification_oracle,
)
from szseq.sampler import naive_words
from szseq.szgen import GeneratorSet, build_sz_generators, tezuka_scramble


@given(st.integers(0, 8), st.integers(1, 5))
def test_composition_count(m, s):
    comps = list(compositions(m, s))
    assert len(comps) == composition_count(m, s) == math.comb(m + s - 1, s - 1)
    assert len(set(comps)) == len(comps)
    assert all(sum(c) == m and len(c) == s and min(c) >= 0 for c in comps)


def test_compositions_colex_order():
    assert list(compositions(2, 2)) == [(2, 0), (1, 1), (0, 2)]
    assert list(compositions(1, 3)) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_q2_set_passes():
    g = build_sz_generators(standard_alphabet(2), 16)
    rep = check_sequence(g, 8)
    assert rep.passed
    assert rep.lines() == [f"PASS m={m}" for m in range(1, 9)]


def test_duplicate_identity_fails():
    i = BitMatrix.identity(8)
    g = GeneratorSet(1, 8, (i, i), "test")
    rep = check_net(g, 2)
    assert not rep.passed
    assert (2, (1, 1), 1, 2) in rep.failures
    assert "FAIL m=2 comp=1,1 rank=1/2" in rep.lines()


def test_corrupted_bit_fails():
    g = build_sz_generators(standard_alphabet(2), 16)
    m = g[3]
    rows = list(m.rows)
    rows[1] = rows[0]  # top-left block becomes singular
    bad = GeneratorSet(2, 16, g.matrices[:3] + (BitMatrix(16, tuple(rows)),), "test")
    rep = check_sequence(bad, 8)
    assert not rep.passed
    assert rep.failures[0][:2] == (1, (0, 0, 0, 1))


def test_budget():
    g = build_sz_generators(standard_alphabet(4), 32)
    with pytest.raises(BudgetExceeded):
        check_sequence(g, 8, budget=1000)


def test_report_partial_not_passed():
    assert not NetReport(3, 2, partial=True).passed


def test_hybrid_matrix_shape():
    g = build_sz_generators(standard_alphabet(2), 16)
    h = hybrid_matrix(g, (1, 0, 2, 0))
    assert h.size == 6
    assert h.rows[:2] == tuple(r & 0x3F for r in g[0].rows[:2])
    with pytest.raises(ValueError):
        hybrid_matrix(g, (1, 1))


def test_stratification_oracle_known_cases():
    # 4 points of the 2D binary Sobol net
    w = np.array([[0, 0], [2, 2], [3, 1], [1, 3]], dtype=np.uint64)
    for comp in compositions(2, 2):
        assert stratification_oracle(w, comp, 1, 2)
    bad = np.array([[0, 0], [1, 1], [2, 2], [3, 3]], dtype=np.uint64)
    assert not stratification_oracle(bad, (1, 1), 1, 2)
    with pytest.raises(ValueError):
        stratification_oracle(w[:3], (1, 1), 1, 2)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_oracle_agrees_with_rank(seed):
    # random binary 2D sets: the two validators must agree composition by composition
    rng = np.random.default_rng(seed)
    prec = 8
    for _ in range(10):
        mats = []
        for _ in range(2):
            rows = [int(rng.integers(0, 1 << prec)) for _ in range(prec)]
            mats.append(BitMatrix(prec, tuple(rows)))
        g = GeneratorSet(1, prec, tuple(mats), "random")
        for m in range(1, 6):
            words = naive_words(g, np.arange(1 << m))
            rank_fail = {c for _, c, _, _ in check_net(g, m, max_failures=10**6).failures}
            for c in compositions(m, 2):
                assert stratification_oracle(words, c, 1, prec) == (c not in rank_fail)


def test_oracle_agrees_on_q2_set():
    g = tezuka_scramble(build_sz_generators(standard_alphabet(2), 16), 4)
    for m in range(1, 5):
        words = naive_words(g, np.arange(1 << (2 * m)))
        assert oracle_check_net(words, m, 2, 16)
        assert check_net(g, m).passed


def test_reduced_blocks_are_invertible():
    assert len(REDUCED_BLOCKS) == 4
    assert len(initial_triples()) == 64


def test_extension_counts_first_step():
    # every combination of initial blocks extends the same number of ways
    for t in initial_triples():
        assert extend_once(t).count == 768
        assert extend_once(t, REDUCED_BLOCKS[:1]).count == 12


def test_extension_counts_later_steps():
    for step in (2, 3):
        assert extension_search(step).count == 384
        assert extension_search(step, identity_corners=True).count == 6


def test_extension_sets_are_valid():
    res = extension_search(1, identity_corners=True)
    for x, y, z in res.sets:
        n = len(x)
        mats = [BitMatrix.identity(n)] + [BitMatrix(n, r) for r in (x, y, z)]
        assert check_sequence(GeneratorSet(2, n, tuple(mats), "search"), n // 2).passed


def test_extension_rejects_bad_branch():
    ident4 = BitMatrix.identity(4).rows
    bad = (ident4, ident4, ident4)
    with pytest.raises(ValueError):
        extension_search(2, branch=bad)
