import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catamatch.errors import FieldTooSmall, InvalidInput
from catamatch.ffield import UniPoly
from catamatch.matrix import (
    DenseMatrix,
    SkewMatrix,
    batch_pfaffian,
    batch_rank,
    deficiency,
    det_of,
    format_matrix,
    parse_matrix_text,
    pfaffian,
    pfaffian_poly,
    rank_of,
)

from conftest import brute_det, brute_pfaffian

P = 101


def skew_strategy(max_half=4):
    @st.composite
    def build(draw):
        n = 2 * draw(st.integers(1, max_half))
        upper = {(i, j): draw(st.integers(0, P - 1)) for i in range(n) for j in range(i + 1, n)}
        return SkewMatrix.from_upper(n, upper, P)

    return build()


def test_rank_examples():
    assert rank_of(DenseMatrix.zeros(3, 3, P)) == 0
    assert rank_of(DenseMatrix.identity(4, P)) == 4
    p3 = SkewMatrix.from_upper(3, {(0, 1): 1, (1, 2): 1}, P)
    assert rank_of(p3) == 2


def test_det_examples():
    assert int(det_of(DenseMatrix(((0, 5), (-5, 0)), P))) == 25
    assert int(det_of(DenseMatrix.identity(6, P))) == 1
    with pytest.raises(InvalidInput):
        det_of(DenseMatrix(((1, 2, 3),), P))


def test_det_matches_permutation_sum():
    rows = ((79, 32, 94, 45, 88), (94, 83, 67, 3, 59), (99, 31, 83, 6, 20), (14, 47, 60, 31, 48), (69, 13, 73, 31, 1))
    assert brute_det(rows, P) == 61
    assert int(det_of(DenseMatrix(rows, P))) == 61


def test_pfaffian_examples():
    assert int(pfaffian(SkewMatrix.from_upper(2, {(0, 1): 7}, P))) == 7
    a = {(0, 1): 2, (0, 2): 3, (0, 3): 5, (1, 2): 7, (1, 3): 11, (2, 3): 13}
    expect = (2 * 13 - 3 * 11 + 5 * 7) % P
    assert int(pfaffian(SkewMatrix.from_upper(4, a, P))) == expect
    assert int(pfaffian(SkewMatrix.from_upper(5, {(0, 1): 3, (2, 4): 9}, P))) == 0


@settings(max_examples=60)
@given(skew_strategy())
def test_pfaffian_squared_is_det(m):
    pf = int(pfaffian(m))
    assert pf * pf % P == int(det_of(m))
    if m.order <= 6:
        assert pf == brute_pfaffian(m.entries, P)


@settings(max_examples=60)
@given(skew_strategy(max_half=4), st.integers(0, 7))
def test_skew_rank_is_even(m, k):
    keep = list(range(min(k + 1, m.order)))
    sub = m.principal_minor(keep)
    assert rank_of(sub) % 2 == 0


def test_batch_kernels_match_scalar():
    rng = np.random.default_rng(4)
    stack = []
    for _ in range(30):
        u = np.triu(rng.integers(0, P, size=(6, 6)), 1)
        stack.append((u - u.T) % P)
    stack = np.array(stack, dtype=np.int64)
    pfs = batch_pfaffian(stack, P)
    ranks = batch_rank(stack, P)
    for mat, pf, r in zip(stack, pfs, ranks):
        sm = SkewMatrix(tuple(map(tuple, mat.tolist())), P)
        assert int(pf) == int(pfaffian(sm))
        assert int(r) == rank_of(sm)


def c4(weights):
    """C4 with unit values; weights in cycle order e12, e23, e34, e41."""
    z = lambda w: UniPoly.monomial(1, w, P)
    zero = UniPoly.zero(P)
    grid = [[zero] * 4 for _ in range(4)]
    for (i, j), w in zip(((0, 1), (1, 2), (2, 3), (0, 3)), weights):
        grid[i][j] = z(w)
        grid[j][i] = UniPoly.zero(P) - z(w)
    return grid


def test_pfaffian_poly_examples():
    k2 = [[UniPoly.zero(P), UniPoly.monomial(7, 4, P)], [UniPoly.monomial(P - 7, 4, P), UniPoly.zero(P)]]
    assert pfaffian_poly(k2, 4, P) == UniPoly.monomial(7, 4, P)
    # matching sum: {12,34} weight 2, {14,23} weight 5, both with sign +1
    assert pfaffian_poly(c4((1, 2, 1, 3)), 8, P) == UniPoly((0, 0, 1, 0, 0, 1), P)
    z = UniPoly.zero(P)
    star = [[z] * 4 for _ in range(4)]
    for j in (1, 2, 3):
        star[0][j] = UniPoly.monomial(1, 1, P)
        star[j][0] = UniPoly.monomial(P - 1, 1, P)
    assert pfaffian_poly(star, 4, P).is_zero()


def test_pfaffian_poly_field_too_small():
    with pytest.raises(FieldTooSmall):
        pfaffian_poly(c4((60, 60, 60, 60)), 120, P)


def test_pfaffian_poly_at_one_matches_scalar():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.choice([2, 4, 6]))
        grid = [[UniPoly.zero(P)] * n for _ in range(n)]
        scalar = {}
        for i in range(n):
            for j in range(i + 1, n):
                c, w = int(rng.integers(0, P)), int(rng.integers(0, 4))
                grid[i][j] = UniPoly.monomial(c, w, P)
                grid[j][i] = UniPoly.monomial(-c, w, P)
                scalar[(i, j)] = c
        f = pfaffian_poly(grid, 4 * n, P)
        assert f(1) == int(pfaffian(SkewMatrix.from_upper(n, scalar, P)))


def test_deficiency_examples():
    full = SkewMatrix.from_upper(2, {(0, 1): 3}, P)
    assert set(deficiency(full)) == set()
    p3 = SkewMatrix.from_upper(3, {(0, 1): 4, (1, 2): 9}, P)
    assert set(deficiency(p3)) == {1, 3}
    assert set(deficiency(p3, method="kernel", verify=True)) == {1, 3}
    zero = DenseMatrix.zeros(2, 3, P)
    assert set(deficiency(zero)) == {"R1", "R2", "C1", "C2", "C3"}


@settings(max_examples=60)
@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_deficiency_methods_agree(r, c, data):
    rows = tuple(tuple(data.draw(st.sampled_from([0, 0, 1, 2, 50])) for _ in range(c)) for _ in range(r))
    m = DenseMatrix(rows, P)
    assert set(deficiency(m, "kernel", verify=True)) == set(deficiency(m, "rank"))


def test_matrix_text_round_trip():
    text = "2 3 101\n1 0 ?\n4 5 6\n"
    r, c, p, rows = parse_matrix_text(text, allow_vars=True)
    assert (r, c, p) == (2, 3, 101) and rows[0][2] is None
    m = DenseMatrix(((1, 2), (3, 4)), P)
    assert parse_matrix_text(format_matrix(m))[3] == [[1, 2], [3, 4]]
    with pytest.raises(InvalidInput):
        parse_matrix_text(text)


def test_skew_validation():
    with pytest.raises(InvalidInput):
        SkewMatrix(((0, 1), (1, 0)), P)
