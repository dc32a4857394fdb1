import cmath
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from padelab.bigseries import series_eval
from padelab.potential import IntervalSystem
from padelab.testfn import (
    CutError,
    Exact,
    FactorSpec,
    NonRealSegmentError,
    Segment,
    SpecError,
    TestFunctionSpec,
    branch_points,
    eval_branch,
    eval_sheet1_closed,
    germ_at_infinity,
    inverse_phi_germ,
    inverse_zhukovskii,
    stahl_compact,
    track_sheet1,
    validate_class,
)

P = 512
UNIT = Segment(-1, 1)


def two_factor_spec():
    return TestFunctionSpec(
        (
            FactorSpec.sqrt_product(2, 3, Segment(-2, -1)),
            FactorSpec.sqrt_product("5/2", 4, Segment(1, 2)),
        )
    )


def thirds_spec():
    third = Fraction(1, 3)
    return TestFunctionSpec((FactorSpec(UNIT, ((2, third), (3, third), ("2.5j", third))),))


# --- inverse Zhukovskii -------------------------------------------------------


def test_zhukovskii_sheet0_value():
    assert inverse_zhukovskii(1.25, UNIT, 0, P) == 2


def test_zhukovskii_sheet1_value():
    assert inverse_zhukovskii(1.25, UNIT, 1, P) == 0.5


@pytest.mark.parametrize("sheet", [0, 1])
def test_zhukovskii_endpoint_fixed(sheet):
    assert inverse_zhukovskii(1, UNIT, sheet, P) == 1


def test_zhukovskii_open_segment_is_cut():
    with pytest.raises(CutError):
        inverse_zhukovskii(0.3, UNIT, 0, P)


off_cut = st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z.imag) > 1e-6 or abs(z.real) > 1 + 1e-6
)


@given(off_cut)
def test_zhukovskii_sheet_product_and_inversion(z):
    seg = Segment(Fraction(-1, 2), 3)
    phi0 = inverse_zhukovskii(z, seg, 0, P)
    phi1 = inverse_zhukovskii(z, seg, 1, P)
    with mpmath.workprec(P):
        assert abs(phi0 * phi1 - 1) <= mpmath.mpf(2) ** (-P + 8)
        psi = (mpmath.mpc(z) - mpmath.mpf(5) / 4) / (mpmath.mpf(7) / 4)
        assert abs((phi0 + 1 / phi0) / 2 - psi) <= mpmath.mpf(2) ** (-P + 8) * max(1, abs(psi))
    assert abs(phi0) >= 1


def test_sheet0_branch_unbounded():
    phi = inverse_zhukovskii(1e6, UNIT, 0, P)
    assert abs(phi / 1e6 - 2) < 1e-6


# --- evaluation ---------------------------------------------------------------


def test_value_at_infinity_is_sqrt6(ref_spec):
    v = eval_branch(ref_spec, 1e8, 0, P)
    assert abs(v - mpmath.sqrt(6)) < 1e-7


def test_sheet1_vanishes_at_second_sheet_branch_point(ref_spec):
    # phi(1.25) = 2 = A, so the factor (A - phi) vanishes on sheet 1
    assert abs(eval_branch(ref_spec, 1.25, 1, P)) < mpmath.mpf(2) ** (-P // 2)


@pytest.mark.parametrize("z", [2, -3, 1 + 1j, 0.1 - 0.5j, 1.0000001])
def test_defining_relation(ref_spec, z):
    v = eval_branch(ref_spec, z, 0, P)
    with mpmath.workprec(P):
        u = inverse_zhukovskii(z, UNIT, 1, P)
        rhs = (2 - u) * (3 - u)
        assert abs(v * v - rhs) <= mpmath.mpf(2) ** (-P + 16) * abs(rhs)


def test_sheet0_on_cut_raises(ref_spec):
    with pytest.raises(CutError):
        eval_branch(ref_spec, 0.5, 0, P)


@pytest.mark.parametrize("z", [0.3 + 0.2j, -0.9 - 0.1j, 1.1 + 0.05j, -1.2 + 0.3j, 0.05j])
def test_sheet1_continuation_matches_closed_form(ref_spec, z):
    # near the segment no second-sheet branch point is encircled, so principal powers apply
    tracked = eval_branch(ref_spec, z, 1, P)
    closed = eval_sheet1_closed(ref_spec, z, prec=P)
    assert abs(tracked - closed) <= mpmath.mpf(2) ** (-P + 32) * max(1, abs(closed))


def test_sheet1_continuation_two_segments():
    spec = two_factor_spec()
    for z in (-1.5 + 0.2j, 1.4 - 0.3j, -0.9 + 0.1j):
        tracked = eval_branch(spec, z, 1, P)
        closed = eval_sheet1_closed(spec, z, prec=P)
        assert abs(tracked - closed) <= 1e-100


def test_sheet1_tracking_is_deterministic(ref_spec):
    assert track_sheet1(ref_spec, 0.4 + 0.7j) == track_sheet1(ref_spec, 0.4 + 0.7j)


def test_sheets_differ(ref_spec):
    rng = np.random.default_rng(7)
    zs = rng.uniform(-1.5, 1.5, 100) + 1j * rng.uniform(0.05, 0.8, 100)
    diffs = [abs(eval_branch(ref_spec, z, 0, 64) - eval_branch(ref_spec, z, 1, 64)) for z in zs]
    assert max(diffs) > 1e-10


# --- germs ------------------------------------------------------------------


def test_inverse_phi_germ_coefficients():
    g = inverse_phi_germ(UNIT, 8, P)
    assert g[0] == 0
    assert g[1] == mpmath.mpf(1) / 2
    assert g[2] == 0
    assert g[3] == mpmath.mpf(1) / 8
    assert g[5] == mpmath.mpf(1) / 16


def test_germ_constant_term(ref_germ):
    with mpmath.workprec(P):
        assert abs(ref_germ[0] - mpmath.sqrt(6)) <= mpmath.mpf(2) ** (-P + 8)


@pytest.mark.parametrize("make", [TestFunctionSpec.sqrt_product, two_factor_spec, thirds_spec])
def test_germ_agrees_with_closed_form(make):
    spec = make()
    g = germ_at_infinity(spec, 120, P)
    S = stahl_compact(spec)
    for z in (10, S.center + 3 * S.diameter * 1j, -3 * S.diameter + S.center):
        val, tail = series_eval(g, z)
        ref = eval_branch(spec, z, 0, P)
        assert abs(val - ref) <= tail + mpmath.mpf(2) ** (-P // 2)


@given(st.floats(min_value=0, max_value=2 * np.pi), st.floats(min_value=3, max_value=8))
def test_germ_matches_eval_on_far_circles(ref_germ, ref_spec, angle, r):
    z = r * cmath.exp(1j * angle)
    val, tail = series_eval(ref_germ, z)
    ref = eval_branch(ref_spec, z, 0, P)
    assert abs(val - ref) <= tail + mpmath.mpf(2) ** (-P // 2)


def test_germ_with_rational_multiplier():
    spec = TestFunctionSpec((FactorSpec.sqrt_product(2, 3),), (("1", "1"), ("-4", "0", "1")))
    g = germ_at_infinity(spec, 100, P)
    assert g[0] == 0  # deg num < deg den
    val, tail = series_eval(g, 12)
    assert abs(val - eval_branch(spec, 12, 0, P)) <= tail + mpmath.mpf(2) ** (-P // 2)


def test_germ_order_too_small(ref_spec):
    with pytest.raises(Exception):
        germ_at_infinity(ref_spec, 1, P)


# --- spec validation and compacts -------------------------------------------


def test_stahl_compact_single():
    assert stahl_compact(TestFunctionSpec.sqrt_product()) == IntervalSystem((-1.0, 1.0))


def test_stahl_compact_sorted():
    spec = TestFunctionSpec((FactorSpec.sqrt_product(2, 3, Segment(1, 2)), FactorSpec.sqrt_product(2, 3, Segment(-2, -1))))
    assert stahl_compact(spec).endpoints == (-2.0, -1.0, 1.0, 2.0)


def test_overlapping_segments_rejected():
    with pytest.raises(SpecError):
        stahl_compact(TestFunctionSpec((FactorSpec.sqrt_product(2, 3, Segment(0, 2)), FactorSpec.sqrt_product(2, 3, Segment(1, 3)))))


def test_non_real_segment_rejected():
    with pytest.raises(NonRealSegmentError):
        Segment("-1+1j", 1)


def test_small_constant_rejected():
    with pytest.raises(SpecError):
        FactorSpec(UNIT, (("0.5", "1/2"),))


def test_denominator_on_segment_rejected():
    with pytest.raises(SpecError):
        TestFunctionSpec((FactorSpec.sqrt_product(2, 3),), (("1",), ("-0.5", "1")))


def test_class_reference_in_F(ref_spec):
    rep = validate_class(ref_spec)
    assert rep.in_F and rep.mode == "F"


def test_class_thirds_extension():
    rep = validate_class(thirds_spec())
    assert not rep.in_F and rep.in_thirds_extension


def test_class_two_thirds_unsupported():
    third = Fraction(1, 3)
    spec = TestFunctionSpec((FactorSpec(UNIT, ((2, third), (3, third))),))
    rep = validate_class(spec)
    assert rep.unsupported and not rep.in_F


def test_branch_points_reference(ref_spec):
    pts = sorted(complex(p).real for p in branch_points(ref_spec))
    assert pts == pytest.approx([-1, 1, 1.25, 5 / 3])


def test_spec_text_roundtrip():
    spec = two_factor_spec()
    again = TestFunctionSpec.from_text(spec.to_text())
    assert again == spec and again.hash() == spec.hash()


def test_spec_hash_changes_with_constants():
    assert TestFunctionSpec.sqrt_product(2, 3).hash() != TestFunctionSpec.sqrt_product(2, "3.5").hash()


@pytest.mark.parametrize(
    "s, re, im",
    [("1+2j", 1, 2), ("-1/2-1/3j", Fraction(-1, 2), Fraction(-1, 3)), ("2.5e-1", Fraction(1, 4), 0), ("j", 0, 1)],
)
def test_exact_parse(s, re, im):
    assert Exact.parse(s) == Exact(Fraction(re), Fraction(im))
