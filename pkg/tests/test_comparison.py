import math

import numpy as np
import pytest

from spaceform_widths.comparison import (ComparisonMap, case1_radius, case2_curvature,
                                         case3_curvature, comparison_case, inverse_f, solve_f,
                                         verify_contraction)
from spaceform_widths.spaceform import WarpedProfile, max_radius


def test_identity_map_when_curvatures_agree():
    fmap = solve_f(2, 0.5, 0.5, 1.0)
    assert np.array_equal(fmap.f, fmap.r)
    assert np.all(fmap.fp == 1.0)
    assert fmap.identity_residual() == 0.0


def test_k1_map_is_identity():
    fmap = solve_f(1, -1.0, 2.0, 1.0)
    r = np.linspace(0, 1, 17)
    assert np.max(np.abs(fmap(r) - r)) < 1e-15


def test_flat_to_sphere_k2_closed_form():
    # r^2/2 = 1 - cos f
    fmap = solve_f(2, 0.0, 1.0, math.sqrt(2.0))
    r = np.linspace(0.0, math.sqrt(2.0), 57)
    exact = np.arccos(1 - r**2 / 2)
    assert np.max(np.abs(fmap(r) - exact)) < 1e-8


def test_hyperbolic_to_flat_k2_closed_form():
    # cosh r - 1 = f^2/2
    fmap = solve_f(2, -1.0, 0.0, 1.5)
    r = np.linspace(0.0, 1.5, 31)
    assert np.max(np.abs(fmap(r) - np.sqrt(2 * (np.cosh(r) - 1)))) < 1e-8


def test_case1_radius_values():
    assert case1_radius(1) == pytest.approx(math.pi / 2)
    assert case1_radius(2) == pytest.approx(math.sqrt(2.0))


@pytest.mark.parametrize("alpha,k,expected", [
    (math.pi / 4, 1, 0.25),
    (math.pi / 3, 2, 0.5),
])
def test_case2_curvature(alpha, k, expected):
    assert case2_curvature(alpha, k) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("R,k,expected", [
    (1.0, 2, 1 / (math.cosh(1.0) - 1)),
    (math.pi / 2, 1, 1.0),
    (2.0, 2, 1 / (math.cosh(2.0) - 1)),
])
def test_case3_curvature(R, k, expected):
    assert case3_curvature(R, k) == pytest.approx(expected, rel=1e-12)


def test_case3_reference_value():
    assert case3_curvature(1.0, 2) == pytest.approx(1.84135, abs=1e-5)


@pytest.mark.parametrize("case", [1, 2, 3])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_contraction_holds(case, k):
    c = comparison_case(case, k)
    fmap = solve_f(k, c.K, c.K1, c.R0)
    rep = verify_contraction(*c.profiles(), fmap)
    assert rep.passed, rep
    assert abs(fmap.R1 - max_radius(c.K1)) < 1e-7


def test_forbidden_direction_violates_fprime():
    K, K1, R0 = 1.0, 0.0, 1.0
    fmap = solve_f(2, K, K1, R0, strict=False)
    h0 = WarpedProfile.space_form(K, R0)
    h1 = WarpedProfile.space_form(K1, fmap.R1)
    rep = verify_contraction(h0, h1, fmap)
    assert rep.fprime_violation > 0
    assert not rep.passed


def test_strict_rejects_forbidden_direction():
    with pytest.raises(ValueError):
        solve_f(2, 1.0, 0.0, 1.0)


def test_r_below_f():
    for case in (1, 2, 3):
        c = comparison_case(case, 3)
        fmap = solve_f(3, c.K, c.K1, c.R0)
        assert np.all(fmap.r <= fmap.f + 1e-12)


def test_grid_refinement_is_stable():
    c = comparison_case(3, 3)
    coarse = solve_f(3, c.K, c.K1, c.R0, n_grid=101)
    fine = solve_f(3, c.K, c.K1, c.R0, n_grid=401)
    r = np.linspace(0, c.R0, 50)
    assert np.max(np.abs(coarse(r) - fine(r))) < 1e-9


def test_json_roundtrip():
    c = comparison_case(2, 2)
    fmap = solve_f(2, c.K, c.K1, c.R0, n_grid=41)
    back = ComparisonMap.from_json(fmap.to_json())
    assert back.k == fmap.k and back.K1 == fmap.K1
    r = np.linspace(0, c.R0, 23)
    assert np.array_equal(back(r), fmap(r))


def test_inverse_f():
    fmap = solve_f(2, 0.0, 1.0, math.sqrt(2.0))
    assert inverse_f(fmap, math.pi / 3) == pytest.approx(math.sqrt(2 * (1 - math.cos(math.pi / 3))),
                                                         abs=1e-8)
