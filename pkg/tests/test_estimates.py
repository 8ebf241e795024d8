import math

import numpy as np
import pytest

from spaceform_widths.estimates import (ConvergenceError, ball_mass, density, excess,
                                        extrapolate_to_zero, fb_estimate_pipeline,
                                        flat_boundary_ratio, monotonicity_check, richardson)
from spaceform_widths.stability import catenoid_mesh
from spaceform_widths.varifold_fixtures import (critical_catenoid, critical_catenoid_parameters,
                                                doubled_disk, equatorial_disk, offcenter_disk,
                                                planar_disk)


@pytest.fixture(scope="module")
def disk():
    return equatorial_disk(100)


def test_richardson_exact_for_lines():
    r = np.array([0.4, 0.2, 0.1])
    assert np.allclose(richardson(r, 3 - 2 * r), 3.0)
    assert extrapolate_to_zero(r, 1 + r + r**2, 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        extrapolate_to_zero([0.1], [1.0], 1)


def test_ball_mass_of_disk(disk):
    assert ball_mass(disk, [0, 0, 0], 0.5) == pytest.approx(0.25 * math.pi, abs=5e-3)


@pytest.mark.parametrize("x,expected", [
    ([0.2, 0.1, 0.0], 1.0),
    ([1.0, 0.0, 0.0], 0.5),
    ([0.0, 0.0, 0.0], 1.0),
])
def test_density_values(disk, x, expected):
    rep = density(disk, x)
    assert rep.density == pytest.approx(expected, abs=0.05)
    if rep.boundary:
        assert rep.modified == pytest.approx(2 * rep.density)


def test_doubled_density():
    assert density(doubled_disk(200), [0.1, 0.0, 0.0]).density == pytest.approx(2.0, abs=0.05)


def test_density_flags_unresolved_extrapolation():
    with pytest.raises(ConvergenceError):
        density(doubled_disk(80), [0.1, 0.0, 0.0])


def test_density_off_support_is_zero(disk):
    assert density(disk, [0.0, 0.0, 0.5]).density == 0.0


def test_flat_boundary_ratio_matches_atoms(disk):
    t = np.array([0.3, 0.6, 1.0])
    y = np.array([1.0, 0.0, 0.0])
    sampled = np.array([ball_mass(disk, y, ti) / ti**2 for ti in t])
    assert np.max(np.abs(sampled - flat_boundary_ratio(t))) < 0.02
    # the disk is cut by the lens, ratio -> pi/2 as t -> 0
    assert float(flat_boundary_ratio(1e-4)) == pytest.approx(math.pi / 2, abs=1e-3)


def test_weighted_monotonicity_flat(disk):
    rep = monotonicity_check(disk, [1.0, 0, 0], np.linspace(0.1, 1.0, 10), weighted=True)
    assert rep.passed


def test_plain_ratio_decreases_for_flat_disk():
    # the lens ratio falls from pi/2, so the unweighted ratio is not monotone increasing
    r = flat_boundary_ratio(np.linspace(0.1, 1.0, 10))
    assert np.all(np.diff(r) < 0)


def test_pipeline_disk(disk):
    # N = 100 here; the 2 % target is reached at N = 200
    rep = fb_estimate_pipeline(disk, [1.0, 0.0, 0.0])
    assert rep.mass_bound >= 0.95 * math.pi
    assert rep.slack >= -0.05 * math.pi
    assert rep.density == pytest.approx(0.5, abs=0.05)
    d = rep.to_dict()
    assert d["mass"] == pytest.approx(math.pi)


def test_pipeline_requires_sphere_point(disk):
    with pytest.raises(ValueError):
        fb_estimate_pipeline(disk, [0.5, 0.0, 0.0])


def test_pipeline_catenoid_strict():
    C = critical_catenoid(64)
    p = critical_catenoid_parameters()
    y = np.array([p.boundary_radius, 0.0, p.height])
    rep = fb_estimate_pipeline(C, y)
    assert rep.slack > 0.1


def test_excess_flat_is_zero():
    assert excess(planar_disk(60), [0.1, 0.2, 0.0]) < 1e-12


def test_excess_union_of_planes():
    # from the origin only the plane z = h contributes: 2 pi h^2 int rho/(rho^2 + h^2)^2 = pi (1 - h^2)
    V = equatorial_disk(200) + offcenter_disk(200)
    assert excess(V, [0.0, 0.0, 0.0]) == pytest.approx(0.75 * math.pi, rel=1e-4)


def test_excess_catenoid_neck():
    p = critical_catenoid_parameters()
    y = np.array([p.a, 0.0, 0.0])
    ex_v = excess(critical_catenoid(128), y)
    ex_m = excess(catenoid_mesh(32), y)
    assert 0 < ex_v <= p.area - math.pi
    assert ex_m == pytest.approx(ex_v, rel=0.05)
