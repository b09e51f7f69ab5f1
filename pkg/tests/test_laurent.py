import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import convolve2d

from mqsp.laurent import (
    EXACT,
    FLOAT,
    Axis,
    BackendMismatch,
    BiLaurent,
    DegreeBox,
    ExactComplex,
    FormatError,
    Parity,
    Transform,
    UniLaurent,
    add,
    evaluate,
    make_poly,
    mul,
    parity_of,
    poly_from_json,
    poly_to_json,
    slice_poly,
    star,
    transform,
)

H = Fraction(1, 2)
COS_A = make_poly([((1, 0), H), ((-1, 0), H)])
SIN_A = make_poly([((1, 0), H), ((-1, 0), -H)])


# -- strategies ---------------------------------------------------------------

small_fraction = st.fractions(min_value=-5, max_value=5, max_denominator=7)
exact_scalar = st.builds(ExactComplex, small_fraction, small_fraction)
exponent = st.tuples(st.integers(-3, 3), st.integers(-3, 3))
exact_poly = st.lists(st.tuples(exponent, exact_scalar), max_size=6).map(make_poly)

float_scalar = st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False)
float_poly = st.lists(st.tuples(exponent, float_scalar), max_size=6).map(lambda e: make_poly(e, FLOAT))
angle = st.floats(-math.pi, math.pi)


def dense(p: BiLaurent, r: int = 6) -> np.ndarray:
    """Coefficient array indexed by (j + r, k + r)."""
    out = np.zeros((2 * r + 1, 2 * r + 1), complex)
    for (j, k), c in p.terms.items():
        out[j + r, k + r] = complex(c)
    return out


# -- construction -------------------------------------------------------------


def test_make_poly_constant():
    p = make_poly([((0, 0), 1)])
    assert p.backend == EXACT
    assert dict(p.terms) == {(0, 0): ExactComplex(1)}


def test_make_poly_cancels_to_empty_map():
    p = make_poly([((1, 0), H), ((1, 0), -H)])
    assert p.is_zero() and len(p) == 0


def test_make_poly_cos_a_entry():
    assert dict(COS_A.terms) == {(1, 0): ExactComplex(H), (-1, 0): ExactComplex(H)}
    assert COS_A.degree() == DegreeBox(1, 0)


def test_make_poly_rejects_mixed_backends():
    with pytest.raises(BackendMismatch):
        make_poly([((0, 0), Fraction(1, 2)), ((1, 0), 0.5)])


def test_exact_and_float_do_not_combine():
    with pytest.raises(BackendMismatch):
        COS_A + COS_A.to_float()


def test_zero_polynomial_degree():
    assert BiLaurent.zero().degree() == DegreeBox(0, 0)


# -- arithmetic examples --------------------------------------------------------


def test_mul_identity():
    one = make_poly([((0, 0), 1)])
    assert mul(one, SIN_A) == SIN_A


def test_mul_cos_sin():
    expected = make_poly([((2, 0), Fraction(1, 4)), ((-2, 0), Fraction(-1, 4))])
    assert mul(COS_A, SIN_A) == expected


def test_add_cos_sin():
    assert add(COS_A, SIN_A) == make_poly([((1, 0), 1)])


def test_star_examples():
    assert star(COS_A) == COS_A
    assert star(SIN_A) == -SIN_A
    iab = make_poly([((1, 1), ExactComplex(0, 1))])
    assert star(iab) == make_poly([((-1, -1), ExactComplex(0, -1))])


def test_transform_examples():
    assert transform(COS_A, Transform.INVERT_BOTH) == COS_A
    assert transform(SIN_A, Transform.NEGATE_A) == -SIN_A
    ab = make_poly([((1, -1), 1)])
    assert transform(ab, Transform.INVERT_BOTH) == make_poly([((-1, 1), 1)])


def test_parity_examples():
    assert parity_of(COS_A, Transform.INVERT_BOTH) is Parity.EVEN
    assert parity_of(SIN_A, Transform.INVERT_BOTH) is Parity.ODD
    assert parity_of(make_poly([((0, 0), 1), ((1, 0), 1)]), Transform.NEGATE_A) is Parity.NONE


def test_slice_examples():
    assert slice_poly(COS_A, Axis.A, 1) == UniLaurent({0: ExactComplex(H)}, EXACT)
    assert slice_poly(COS_A, Axis.A, 0).is_zero()
    p = make_poly([((1, 1), 1), ((1, -1), 1)])
    assert slice_poly(p, Axis.A, 1) == UniLaurent({1: ExactComplex(1), -1: ExactComplex(1)}, EXACT)
    assert slice_poly(p, Axis.B, 1) == UniLaurent({1: ExactComplex(1)}, EXACT)


def test_evaluate_examples():
    assert evaluate(COS_A, 0, 0) == pytest.approx(1)
    assert evaluate(COS_A, math.pi / 3, 0) == pytest.approx(0.5)
    assert evaluate(SIN_A, math.pi / 2, 0) == pytest.approx(1j)


def test_evaluate_grid_matches_pointwise():
    p = make_poly([((2, -1), Fraction(1, 3)), ((0, 1), ExactComplex(0, 2)), ((-1, 0), 1)])
    th = np.linspace(0, 2 * np.pi, 5)
    grid = p.evaluate_grid(th, th)
    for r, ta in enumerate(th):
        for c, tb in enumerate(th):
            assert grid[r, c] == pytest.approx(evaluate(p, ta, tb))


# -- properties -----------------------------------------------------------------


@given(exact_poly, exact_poly)
def test_exact_mul_matches_dense_convolution(p, q):
    assert np.allclose(dense(p * q, 12), convolve2d(dense(p), dense(q)), atol=1e-12)


@given(float_poly, float_poly)
def test_float_mul_matches_dense_convolution(p, q):
    assert np.allclose(dense(p * q, 12), convolve2d(dense(p), dense(q)), atol=1e-9)


@given(exact_poly, exact_poly, exact_poly)
@settings(max_examples=50)
def test_exact_ring_laws(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p * q == q * p
    assert p - p == BiLaurent.zero()


@given(exact_poly, exact_poly)
def test_star_is_antimultiplicative_involution(p, q):
    assert star(star(p)) == p
    assert star(p * q) == star(p) * star(q)


@given(exact_poly, st.sampled_from(list(Transform)))
def test_transforms_are_involutions(p, kind):
    assert transform(transform(p, kind), kind) == p


@given(exact_poly, exact_poly, angle, angle)
@settings(max_examples=50)
def test_evaluation_is_a_ring_map(p, q, ta, tb):
    assert evaluate(p * q, ta, tb) == pytest.approx(evaluate(p, ta, tb) * evaluate(q, ta, tb), abs=1e-9)
    assert evaluate(star(p), ta, tb) == pytest.approx(evaluate(p, ta, tb).conjugate(), abs=1e-9)


@given(exact_poly, angle, angle)
@settings(max_examples=50)
def test_negate_a_matches_evaluation_at_shifted_angle(p, ta, tb):
    shifted = evaluate(p, ta + math.pi, tb)
    assert evaluate(transform(p, Transform.NEGATE_A), ta, tb) == pytest.approx(shifted, abs=1e-9)


@given(exact_poly)
def test_no_stored_zero_coefficients(p):
    assert all(c for c in (p * p - p).terms.values())


@given(exact_poly)
def test_exact_json_round_trip(p):
    assert poly_from_json(poly_to_json(p)) == p


@given(float_poly)
def test_float_json_round_trip_is_bit_exact(p):
    assert poly_from_json(poly_to_json(p)) == p


def test_exact_arithmetic_is_closed():
    third = make_poly([((0, 0), Fraction(1, 3))])
    p = third * third * make_poly([((0, 0), 9)])
    assert p[(0, 0)] == ExactComplex(1)


def test_exact_complex_division():
    z = ExactComplex(Fraction(3, 5), Fraction(4, 5))
    assert z * z.conjugate() == 1
    assert z / z == 1
    assert complex(z / ExactComplex(0, 1)) == pytest.approx(cmath.exp(-1j * math.pi / 2) * complex(z))


@pytest.mark.parametrize(
    "obj, field",
    [
        ([], "$"),
        ({"backend": "fp16", "entries": []}, "$.backend"),
        ({"backend": "exact"}, "$.entries"),
        ({"backend": "exact", "entries": [{"j": 0, "k": 0, "re": "1/0", "im": "0"}]}, "$.entries[0].re"),
        ({"backend": "float", "entries": [{"j": 0, "k": 0, "re": 1.0, "im": "nan"}]}, "$.entries[0].im"),
    ],
)
def test_malformed_json_points_at_field(obj, field):
    with pytest.raises(FormatError) as info:
        poly_from_json(obj)
    assert info.value.field == field
