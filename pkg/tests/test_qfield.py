from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pamarkov.qfield import QuadFieldError, QuadNum, qf_floor, qf_sign, stretch_factor


def Q(a, b, D=5):
    return QuadNum.make(Fraction(a), Fraction(b), D)


rationals = st.fractions(min_value=-50, max_value=50, max_denominator=60)
fields = st.sampled_from([2, 3, 5, 6, 7, 21, 77])


@st.composite
def quadnums(draw, D=None):
    d = D if D is not None else draw(fields)
    return QuadNum.make(draw(rationals), draw(rationals), d)


def test_identity_product():
    x = Q(Fraction(3, 7), Fraction(-2, 9))
    assert Q(1, 0) * x == x


def test_lambda_square():
    lam = Q(Fraction(3, 2), Fraction(1, 2))
    assert lam * lam == Q(Fraction(7, 2), Fraction(3, 2))
    assert lam * lam == 3 * lam - 1


def test_golden_inverse():
    phi = Q(Fraction(1, 2), Fraction(1, 2))
    assert phi.inverse() == Q(Fraction(-1, 2), Fraction(1, 2))


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        Q(1, 1) / Q(0, 0)


def test_mixed_fields_rejected():
    with pytest.raises(QuadFieldError):
        Q(1, 1, 5) + Q(1, 1, 2)


def test_sign_examples():
    assert qf_sign(Q(0, 0)) == 0
    assert qf_sign(Q(1, Fraction(-1, 2))) == -1
    assert qf_sign(Q(Fraction(3, 2), Fraction(1, 2)) - 2) == 1


def test_floor_examples():
    assert qf_floor(Q(Fraction(7, 2), 0)) == 3
    assert qf_floor(Q(Fraction(3, 2), Fraction(1, 2))) == 2
    assert qf_floor(Q(Fraction(-1, 2), Fraction(-1, 2))) == -2


def test_non_squarefree_rejected():
    with pytest.raises(QuadFieldError):
        QuadNum.make(1, 1, 8)


@pytest.mark.parametrize("t", [3, 4, 5, 6, 7, 10, -3, -6])
def test_stretch_factor_root(t):
    lam = stretch_factor(t)
    assert lam > 1
    # lambda is the root of x^2 - |t| x + 1
    assert lam * lam - abs(t) * lam + 1 == 0


def test_stretch_factor_d2():
    lam = stretch_factor(6)
    assert (lam.a, lam.b, lam.D) == (3, 2, 2)


def test_string_roundtrip_examples():
    x = Q(Fraction(-3, 4), Fraction(5, 6))
    assert str(x) == "-3/4+5/6*sqrt(5)"
    assert QuadNum.parse(str(x)) == x
    assert QuadNum.parse("2", D=5) == Q(2, 0)
    assert QuadNum.parse("1/2-1/2*sqrt(5)") == Q(Fraction(1, 2), Fraction(-1, 2))


@settings(max_examples=300)
@given(quadnums())
def test_serialization_roundtrip(x):
    assert QuadNum.parse(str(x)) == x
    assert QuadNum.from_json(x.to_json()) == x
    assert str(QuadNum.parse(str(x))) == str(x)


@settings(max_examples=300)
@given(st.data())
def test_field_axioms(data):
    D = data.draw(fields)
    x, y, z = (data.draw(quadnums(D)) for _ in range(3))
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    if x:
        assert x * x.inverse() == 1


def _interval(x: QuadNum):
    with mpmath.workprec(256):
        s = mpmath.iv.sqrt(mpmath.iv.mpf(x.D))
        return (mpmath.iv.mpf(x.p) + mpmath.iv.mpf(x.q) * s) / mpmath.iv.mpf(x.r)


@settings(max_examples=500)
@given(quadnums())
def test_sign_against_intervals(x):
    with mpmath.workprec(256):
        iv = _interval(x)
        if iv.a > 0:
            assert x.sign() == 1
        elif iv.b < 0:
            assert x.sign() == -1


@settings(max_examples=500)
@given(quadnums())
def test_floor_brackets(x):
    k = qf_floor(x)
    assert (x - k).sign() >= 0
    assert (x - (k + 1)).sign() < 0
