import math

import numpy as np
import pytest

from spaceform_widths.spaceform import SpaceFormBall, WarpedProfile, ball_area
from spaceform_widths.sweepout import (DiskChart, PolylineSweepout, arc_family, chord_family,
                                       covers, equatorial_family, perturbed_chord_family,
                                       tighten_1sweepout, width_upper_bound)


def test_flat_family_area_formula():
    ball = SpaceFormBall(3, 2, 1.0, 0.0)
    t = np.linspace(-1, 1, 21)
    fam = equatorial_family(ball, t)
    assert np.max(np.abs(fam.area - math.pi * (1 - t**2))) < 1e-12


def test_flat_family_area_monte_carlo(rng):
    # area of {z = t} inside the unit ball, sampled on the square [-1, 1]^2
    t = 0.6
    p = rng.uniform(-1, 1, (200_000, 2))
    est = 4 * np.mean(np.sum(p * p, axis=1) + t * t <= 1)
    fam = equatorial_family(SpaceFormBall(3, 2, 1.0, 0.0), np.array([t]))
    assert fam.area[0] == pytest.approx(est, abs=0.02)


def test_family_symmetric_and_vanishing_at_ends():
    ball = SpaceFormBall(4, 3, 1.2, -1.0)
    t = np.linspace(-1.2, 1.2, 25)
    fam = equatorial_family(ball, t)
    assert np.allclose(fam.area, fam.area[::-1], atol=1e-12)
    assert fam.area[0] == 0.0 and fam.area[-1] == 0.0
    assert fam.argmax == 0.0


@pytest.mark.parametrize("ball,expected", [
    (SpaceFormBall(3, 2, 1.0, 0.0), math.pi),
    (SpaceFormBall(3, 2, 1.0, -1.0), 2 * math.pi * (math.cosh(1.0) - 1)),
    (SpaceFormBall(3, 2, math.pi / 2, 1.0), 2 * math.pi),
    (SpaceFormBall(2, 1, 0.8, -2.0), 1.6),
    (SpaceFormBall(5, 1, 0.3, 1.0), 0.6),
])
def test_width_upper_bound(ball, expected):
    assert width_upper_bound(ball) == pytest.approx(expected, rel=1e-12)


def test_upper_bound_same_code_path():
    ball = SpaceFormBall(5, 3, 0.9, 0.7)
    assert width_upper_bound(ball) == ball_area(3, WarpedProfile.space_form(0.7, 0.9))


@pytest.mark.parametrize("K", [-1.0, 0.0, 0.5])
def test_chart_distance_of_diameter(K):
    chart = DiskChart(K, 1.0)
    rho = chart.radius
    assert float(chart.distance(np.array([[-rho, 0.0]]), np.array([[rho, 0.0]]))[0]) == pytest.approx(2.0)


def test_chords_stay_optimal():
    fam = chord_family(0.0, 1.0)
    assert fam.max_length == pytest.approx(2.0, abs=1e-12)
    res = tighten_1sweepout(SpaceFormBall(2, 1, 1.0, 0.0), fam, steps=200)
    assert np.all(np.abs(res.trace - 2.0) <= 1e-6)


def test_short_tightening_is_monotone_and_covering():
    fam = arc_family(0.0, 1.0)
    assert fam.max_length == pytest.approx(2.4, abs=1e-9)
    res = tighten_1sweepout(SpaceFormBall(2, 1, 1.0, 0.0), fam, steps=100)
    assert np.all(np.diff(res.trace) <= 1e-12)
    assert res.trace[-1] < res.trace[0]
    assert res.covering_ok and covers(res.family)
    assert res.family.endpoint_error() <= 1e-10


def test_perturbed_hyperbolic_family_tightens():
    fam = perturbed_chord_family(-1.0, 1.0)
    assert fam.max_length > 2.0
    res = tighten_1sweepout(SpaceFormBall(2, 1, 1.0, -1.0), fam, steps=300)
    assert np.all(np.diff(res.trace) <= 1e-12)
    assert res.trace[-1] < fam.max_length


def test_curves_degenerate_at_family_ends():
    fam = chord_family(-1.0, 1.0)
    assert fam.lengths[0] < 1e-12 and fam.lengths[-1] < 1e-12


def test_rejects_non_covering_family():
    fam = chord_family(0.0, 1.0)
    half = PolylineSweepout(fam.chart, fam.s[:10], fam.curves[:10])
    with pytest.raises(ValueError, match="cover"):
        tighten_1sweepout(SpaceFormBall(2, 1, 1.0, 0.0), half, steps=5)


def test_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        tighten_1sweepout(SpaceFormBall(3, 2, 1.0, 0.0), chord_family(0.0, 1.0), steps=1)


def test_csv_roundtrip(tmp_path):
    fam = arc_family(0.5, 1.0, n_curves=7, n_vertices=9)
    p = tmp_path / "family.csv"
    fam.to_csv(p)
    back = PolylineSweepout.from_csv(p, fam.chart)
    assert np.array_equal(back.curves, fam.curves)
    assert np.array_equal(back.s, fam.s)


def test_trace_csv(tmp_path):
    res = tighten_1sweepout(SpaceFormBall(2, 1, 1.0, 0.0), arc_family(0.0, 1.0), steps=3)
    p = tmp_path / "trace.csv"
    res.trace_to_csv(p)
    assert len(p.read_text().splitlines()) == 5
