from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from szseq.gf2 import (
    BitMatrix,
    BitVector,
    NotInvertible,
    block_diag,
    block_get,
    block_set,
    format_matrix,
    is_invertible,
    mat_inverse,
    mat_mul,
    mat_pow,
    mat_rank,
    mat_vec,
    parse_matrix,
    rank_of_rows,
    top_left,
)


def matrices(n_max=12):
    return st.integers(1, n_max).flatmap(
        lambda n: st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n).map(
            lambda rows: BitMatrix(n, tuple(rows))
        )
    )


def same_size_pair(n_max=10):
    return st.integers(1, n_max).flatmap(
        lambda n: st.tuples(
            *[st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n) for _ in range(3)]
        ).map(lambda t: tuple(BitMatrix(n, tuple(r)) for r in t))
    )


def _np_mul(a: BitMatrix, b: BitMatrix) -> np.ndarray:
    return (a.to_array().astype(int) @ b.to_array().astype(int)) % 2


def _np_rank(a: np.ndarray) -> int:
    # plain Gaussian elimination on a dense 0/1 array
    a = a.copy() % 2
    r = 0
    for c in range(a.shape[1]):
        piv = [i for i in range(r, a.shape[0]) if a[i, c]]
        if not piv:
            continue
        a[[r, piv[0]]] = a[[piv[0], r]]
        for i in range(a.shape[0]):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
    return r


def test_identity_and_zero():
    i = BitMatrix.identity(5)
    assert i.is_identity()
    assert BitMatrix.zero(5).is_zero()
    assert mat_rank(i) == 5
    assert mat_rank(BitMatrix.zero(5)) == 0


def test_size_limits():
    with pytest.raises(ValueError):
        BitMatrix(0, ())
    with pytest.raises(ValueError):
        BitMatrix(65, (0,) * 65)
    with pytest.raises(ValueError):
        BitMatrix(2, (4, 0))


def test_size_mismatch_rejected():
    with pytest.raises(ValueError):
        mat_mul(BitMatrix.identity(2), BitMatrix.identity(3))
    with pytest.raises(ValueError):
        mat_vec(BitMatrix.identity(2), BitVector(3, 1))


def test_singular_inverse_raises():
    with pytest.raises(NotInvertible):
        mat_inverse(BitMatrix.from_rows([[1, 1], [1, 1]]))


def test_64_bit_matrix():
    rng = np.random.default_rng(3)
    while True:
        a = BitMatrix(64, tuple(int(x) for x in rng.integers(0, 1 << 63, 64, dtype=np.uint64) * 2 + 1))
        if is_invertible(a):
            break
    assert mat_mul(a, mat_inverse(a)).is_identity()


def test_known_product():
    a = BitMatrix.from_rows([[1, 1], [0, 1]])
    assert mat_mul(a, a).is_identity()
    assert mat_pow(a, 3) == a
    assert mat_pow(a, -1) == a


@given(same_size_pair())
def test_mul_matches_dense(abc):
    a, b, _ = abc
    assert np.array_equal(mat_mul(a, b).to_array(), _np_mul(a, b))


@given(same_size_pair())
def test_mul_associative_and_distributive(abc):
    a, b, c = abc
    assert mat_mul(mat_mul(a, b), c) == mat_mul(a, mat_mul(b, c))
    assert mat_mul(a, b + c) == mat_mul(a, b) + mat_mul(a, c)


@given(matrices())
def test_rank_matches_dense(a):
    assert mat_rank(a) == _np_rank(a.to_array().astype(np.int64))
    assert mat_rank(a) == mat_rank(a.T)


@given(matrices())
def test_inverse_round_trip(a):
    if is_invertible(a):
        inv = mat_inverse(a)
        assert mat_mul(a, inv).is_identity()
        assert mat_mul(inv, a).is_identity()
    else:
        with pytest.raises(NotInvertible):
            mat_inverse(a)


@given(matrices(), st.integers(0, 1 << 20))
def test_mat_vec_matches_dense(a, x):
    x &= (1 << a.size) - 1
    v = BitVector(a.size, x)
    dense = a.to_array().astype(int) @ np.array([(x >> j) & 1 for j in range(a.size)]) % 2
    got = mat_vec(a, v)
    assert [got[i] for i in range(a.size)] == dense.tolist()


@given(matrices())
def test_transpose_involution(a):
    assert a.T.T == a
    assert np.array_equal(a.T.to_array(), a.to_array().T)


@given(matrices(8), st.sampled_from(["row", "col"]))
def test_word_round_trip(a, layout):
    assert BitMatrix.from_word(a.to_word(), a.size) == a
    w = (a if layout == "row" else a.T).to_word()
    assert BitMatrix.from_word(w, a.size, layout) == a


def test_rank_of_rows_rectangular():
    assert rank_of_rows([0b011, 0b110, 0b101]) == 2
    assert rank_of_rows([1 << 40, 1 << 3, (1 << 40) | (1 << 3)]) == 2
    assert rank_of_rows([]) == 0


def test_blocks():
    b = BitMatrix.from_rows([[0, 1], [1, 1]])
    d = block_diag(b, 6)
    for i in range(3):
        for j in range(3):
            assert block_get(d, i, j, 2) == (b if i == j else BitMatrix.zero(2))
    e = block_set(d, 0, 2, b)
    assert block_get(e, 0, 2, 2) == b
    assert block_get(e, 0, 0, 2) == b
    with pytest.raises(ValueError):
        block_diag(b, 5)
    with pytest.raises(IndexError):
        block_get(d, 3, 0, 2)


def test_top_left():
    a = BitMatrix.from_rows([[1, 1, 1], [0, 1, 1], [0, 0, 1]])
    assert top_left(a, 2) == BitMatrix.from_rows([[1, 1], [0, 1]])


@given(matrices(16), st.sampled_from(["dots", "hex"]))
def test_text_round_trip(a, style):
    lines = format_matrix(a, style).splitlines()
    b, used = parse_matrix(lines)
    assert b == a
    assert used == len(lines)


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_matrix(["rows=1,2"])
    with pytest.raises(ValueError):
        parse_matrix([])
