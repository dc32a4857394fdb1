from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from padelab.bigseries import (
    GermAtInfinity,
    PrecisionMismatchError,
    SeriesError,
    constant_germ,
    germ,
    series_add,
    series_cpow,
    series_eval,
    series_inv,
    series_mul,
    series_sqrt,
    to_big,
)

P = 512
TOL = mpmath.mpf(2) ** (-P + 8)


def coeffs_close(a, b, tol=TOL, scale=1):
    # rounding error tracks the size of the intermediate coefficients, not of the result
    assert a.order == b.order
    return all(abs(x - y) <= tol * max(scale, abs(y)) for x, y in zip(a.coeffs, b.coeffs))


small = st.fractions(min_value=-3, max_value=3, max_denominator=50)


@st.composite
def germs(draw, N=8, unit=False):
    cs = draw(st.lists(small, min_size=N + 1, max_size=N + 1))
    if unit:
        cs[0] = draw(st.sampled_from([Fraction(1), Fraction(-2), Fraction(3, 2)]))
    return germ(cs, P)


def test_mul_difference_of_squares():
    out = series_mul(germ([1, 1, 0], P), germ([1, -1, 0], P))
    assert out.coeffs == germ([1, 0, -1], P).coeffs


def test_mul_identity():
    g = germ([3, "1/3", -2, "2/7"], P)
    assert series_mul(constant_germ(1, 3, P), g).coeffs == g.coeffs


def test_geometric_times_one_minus_telescopes():
    geo = germ([1] * 21, P)
    out = series_mul(geo, germ([1, -1] + [0] * 19, P))
    assert out[0] == 1
    assert all(c == 0 for c in out.coeffs[1:])


def test_mul_truncates_to_shorter():
    out = series_mul(germ([1] * 6, P), germ([1] * 4, P))
    assert out.order == 3


def test_precision_mismatch():
    with pytest.raises(PrecisionMismatchError):
        series_mul(germ([1, 2], P), germ([1, 2], 256))


def test_empty_germ_rejected():
    with pytest.raises(SeriesError):
        GermAtInfinity((), P)


def test_cpow_inverse_is_geometric():
    out = series_cpow(germ([1, -1] + [0] * 10, P), -1, 1)
    assert all(abs(c - 1) <= TOL for c in out.coeffs)


def test_cpow_identity_exponent():
    a = germ([2, "1/3", -1, 5], P)
    assert coeffs_close(series_cpow(a, 1, a[0]), a)


def test_cpow_half_binomial():
    out = series_cpow(germ([1, 0, -1] + [0] * 6, P), Fraction(1, 2), 1)
    # (1 - u)^(1/2) = 1 - u/2 - u^2/8 - u^3/16 - 5u^4/128 with u = z^-2
    expect = [1, 0, Fraction(-1, 2), 0, Fraction(-1, 8), 0, Fraction(-1, 16), 0, Fraction(-5, 128)]
    assert coeffs_close(out, germ(expect, P))


def test_cpow_rejects_vanishing_leading_coefficient():
    with pytest.raises(SeriesError):
        series_cpow(germ([0, 1, 2], P), "1/2", 1)


def test_sqrt_branch_selection():
    out = series_sqrt(constant_germ(4, 3, P), -2)
    assert out.coeffs == constant_germ(-2, 3, P).coeffs


def test_sqrt_matches_cpow():
    a = germ([1, 0, -1] + [0] * 8, P)
    assert series_sqrt(a, 1).coeffs == series_cpow(a, Fraction(1, 2), 1).coeffs


def test_sqrt_rejects_wrong_branch():
    with pytest.raises(SeriesError):
        series_sqrt(constant_germ(4, 3, P), 3)


@given(germs(unit=True))
def test_sqrt_squares_back(a):
    with mpmath.workprec(P):
        b0 = mpmath.sqrt(a[0])
    s = series_sqrt(a, b0)
    assert coeffs_close(series_mul(s, s), a, scale=s.order * s.norm() ** 2)


@given(germs(unit=True), st.fractions(min_value=-3, max_value=3, max_denominator=7))
def test_cpow_times_inverse_power_is_one(a, alpha):
    with mpmath.workprec(P):
        b = mpmath.power(a[0], to_big(alpha, P))
        binv = 1 / b
    u, v = series_cpow(a, alpha, b), series_cpow(a, -alpha, binv)
    prod = series_mul(u, v)
    assert coeffs_close(prod, constant_germ(1, a.order, P), scale=a.order * u.norm() * v.norm())


@given(germs(unit=True), st.integers(min_value=1, max_value=4))
def test_integer_power_is_repeated_product(a, m):
    rep = a
    for _ in range(m - 1):
        rep = series_mul(rep, a)
    with mpmath.workprec(P):
        branch = a[0] ** m
    assert coeffs_close(series_cpow(a, m, branch), rep, scale=(a.order * a.norm()) ** (m + 1))


@given(germs(), germs(), germs())
def test_ring_axioms(a, b, c):
    scale = 100 * (a.norm() + 1) * (b.norm() + 1) * (c.norm() + 1)
    assert coeffs_close(series_mul(a, b), series_mul(b, a), scale=scale)
    assert coeffs_close(series_mul(series_mul(a, b), c), series_mul(a, series_mul(b, c)), scale=scale)
    lhs = series_mul(a, series_add(b, c))
    rhs = series_add(series_mul(a, b), series_mul(a, c))
    assert coeffs_close(lhs, rhs, scale=scale)


def test_precision_raise_changes_little():
    lo = series_sqrt(germ([1, "1/3", "-2/7", "1/11"] + [0] * 8, 256), 1)
    hi = series_sqrt(germ([1, "1/3", "-2/7", "1/11"] + [0] * 8, 512), 1)
    for x, y in zip(lo.coeffs, hi.coeffs):
        assert abs(x - y) <= mpmath.mpf(2) ** (-256 + 8) * max(1, abs(y))


def test_eval_inverse_phi_at_ten():
    # 1/phi(z) = z - sqrt(z^2 - 1), expanded at infinity
    from padelab.testfn import Segment, inverse_phi_germ

    g = inverse_phi_germ(Segment(-1, 1), 60, P)
    val, tail = series_eval(g, 10)
    with mpmath.workprec(P):
        exact = 10 - mpmath.sqrt(99)
    assert abs(val - exact) <= tail + mpmath.mpf(2) ** (-P // 2)
    assert mpmath.nstr(val.real, 6) == "0.0501256"


def test_eval_constant_and_linear():
    val, tail = series_eval(constant_germ("7/3", 5, P), 4)
    assert val == to_big("7/3", P) and tail == 0
    val, _ = series_eval(germ([1, -1], P), 2)
    assert val == 0.5


def test_eval_at_zero_fails():
    with pytest.raises(SeriesError):
        series_eval(germ([1, 1], P), 0)


def test_inv_roundtrip():
    a = germ([2, 1, "1/2", "-1/3"], P)
    assert coeffs_close(series_mul(a, series_inv(a)), constant_germ(1, 3, P))


@pytest.mark.parametrize("s, expect", [("1/3", Fraction(1, 3)), ("-0.25", Fraction(-1, 4)), ("2", Fraction(2))])
def test_to_big_parses_exactly(s, expect):
    with mpmath.workprec(P):
        assert to_big(s, P) == mpmath.mpf(expect.numerator) / expect.denominator
