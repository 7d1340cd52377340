import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catamatch.errors import DivisionByZero, InvalidInput
from catamatch.ffield import FieldElement, FieldSpec, UniPoly, field_ops, interpolate, min_degree_term

P = 101
elements = st.integers(min_value=0, max_value=P - 1)


def el(x):
    return FieldElement(x, P)


def test_field_ops_examples():
    assert field_ops(el(50), el(60))["add"] == el(9)
    assert el(2).inv() == el(51)
    with pytest.raises(DivisionByZero):
        el(0).inv()
    assert "div" not in field_ops(el(3), el(0))


@settings(max_examples=300)
@given(elements, elements, elements)
def test_field_axioms(a, b, c):
    x, y, z = el(a), el(b), el(c)
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x - x == el(0)
    if a:
        assert x * x.inv() == el(1)
        assert (y / x) * x == y


def test_fieldspec_bits_and_validation():
    assert FieldSpec(101, 8).bits == 3
    assert FieldSpec(101, 9).bits == 4
    assert FieldSpec(101, 2).bits == 1
    with pytest.raises(InvalidInput):
        FieldSpec(100, 4)
    with pytest.raises(InvalidInput):
        FieldSpec(101, 102)


def test_size_based_spec_picks_a_large_enough_prime():
    spec = FieldSpec.for_size(8)
    assert spec.s == 8**10 and spec.p > spec.s


def test_interpolate_constant():
    f = interpolate([(0, 3), (1, 3), (2, 3)], 2, P)
    assert f.coeffs == (3,)


def test_interpolate_round_trip_z2_plus_1():
    f = UniPoly((1, 0, 1), P)
    g = interpolate([(x, f(x)) for x in (4, 9, 17, 30)], 3, P)
    assert g == f
    assert tuple(g.coeff(i) for i in range(4)) == (1, 0, 1, 0)


def test_interpolate_errors():
    with pytest.raises(InvalidInput):
        interpolate([(1, 2), (1, 3)], 1, P)
    with pytest.raises(InvalidInput):
        interpolate([(1, 2)], 1, P)
    with pytest.raises(InvalidInput):
        interpolate([(0, 0), (1, 1), (2, 4)], 1, P)


@settings(max_examples=500)
@given(st.lists(elements, min_size=1, max_size=9), st.integers(0, 4), st.randoms(use_true_random=False))
def test_interpolate_inverts_evaluation(coeffs, extra, rnd):
    f = UniPoly(tuple(coeffs), P)
    d_max = len(coeffs) - 1 + extra
    xs = rnd.sample(range(P), d_max + 1)
    assert interpolate([(x, f(x)) for x in xs], d_max, P) == f


def test_min_degree_term_examples():
    assert min_degree_term(UniPoly.zero(P)) is None
    f = UniPoly.monomial(5, 3, P) + UniPoly.monomial(2, 7, P)
    assert min_degree_term(f) == (3, 5)


@given(st.lists(elements, min_size=1, max_size=8), st.integers(0, 6))
def test_min_degree_term_shifts(coeffs, k):
    f = UniPoly(tuple(coeffs), P)
    lead = min_degree_term(f)
    shifted = min_degree_term(f.shift(k))
    if lead is None:
        assert shifted is None
    else:
        assert shifted == (lead[0] + k, lead[1])


def test_unipoly_normal_form_and_arithmetic():
    f = UniPoly((1, 2, 0, 0), P)
    assert f.coeffs == (1, 2) and f.degree == 1
    assert UniPoly.zero(P).degree == -1
    g = UniPoly((0, 1), P)
    assert (f * g).coeffs == (0, 1, 2)
    assert (f - f).is_zero()
    assert (f + g)(3) == (1 + 3 * 3) % P
