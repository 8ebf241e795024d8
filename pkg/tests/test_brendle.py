import math

import numpy as np
import pytest
from scipy.integrate import quad_vec

from spaceform_widths.brendle import (SingularPointError, brendle_divergence, brendle_field,
                                      brendle_jacobian, brendle_Y, check_lemma_properties,
                                      interior_field, interior_jacobian, lemma_rhs, lemma_samples,
                                      segment_integral, tangency_defect)
from spaceform_widths.varifold import divergence_on_planes, random_frames


def _ball_points(rng, m, n, y, min_dist=0.05):
    g = rng.standard_normal((4 * m, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    x = g * rng.random(4 * m)[:, None] ** (1 / n)
    x = x[np.linalg.norm(x - y, axis=1) > min_dist]
    return x[:m]


def _I1(x, y):
    # int_0^1 (t x - y)/|t x - y| dt with q(t) = a^2 t^2 - 2 b t + 1
    a = np.linalg.norm(x)
    b = x @ y
    d = np.linalg.norm(x - y)
    L = (math.log(a * d + a * a - b) - math.log(a - b)) / a
    return x * ((d - 1) / a**2 + b / a**2 * L) - y * L


def _I3(x, y):
    d = np.linalg.norm(x - y)
    b = x @ y
    return -y / d + (x - b * y) / (d * (d + 1 - b))


@pytest.fixture
def pole():
    return np.array([1.0, 0.0, 0.0])


@pytest.mark.parametrize("k,closed", [(1, _I1), (3, _I3)])
def test_segment_integral_closed_forms(rng, pole, k, closed):
    x = _ball_points(rng, 25, 3, pole, min_dist=1e-3)
    I, _, _ = segment_integral(x, pole, k)
    ref = np.array([closed(xi, pole) for xi in x])
    assert np.max(np.abs(I - ref) / (1 + np.abs(ref))) < 1e-9


def test_segment_integral_against_adaptive_quadrature(rng):
    y = np.array([0.0, 0.6, 0.8, 0.0])
    x = _ball_points(rng, 5, 4, y)
    I, _, _ = segment_integral(x, y, 4)
    for xi, Ii in zip(x, I):
        ref = quad_vec(lambda t: (t * xi - y) / np.linalg.norm(t * xi - y) ** 4, 0, 1,
                       epsabs=1e-13, epsrel=1e-13)[0]
        assert np.max(np.abs(Ii - ref)) < 1e-9 * (1 + np.max(np.abs(ref)))


def test_k2_field_closed_form(rng, pole):
    x = _ball_points(rng, 30, 3, pole)
    d = x - pole
    Y = x / 2 - d / np.sum(d * d, axis=1)[:, None]
    assert np.max(np.abs(brendle_Y(pole, 2, x) - Y)) < 1e-14


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_field_tangent_to_sphere(n, k):
    y = np.zeros(n)
    y[0] = 1.0
    assert tangency_defect(y, k, samples=200) < 1e-9


def test_singular_point_rejected(pole):
    with pytest.raises(SingularPointError):
        brendle_Y(pole, 3, pole)
    with pytest.raises(ValueError):
        brendle_Y(np.array([0.5, 0.0, 0.0]), 3, np.zeros(3))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_jacobian_matches_differences(rng, pole, k):
    x = _ball_points(rng, 10, 3, pole, min_dist=0.2)
    J = brendle_jacobian(pole, k, x)
    h = 1e-5
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        fd = (brendle_Y(pole, k, x + e) - brendle_Y(pole, k, x - e)) / (2 * h)
        assert np.max(np.abs(J[:, :, b] - fd)) < 1e-6


@pytest.mark.parametrize("k", [1, 2, 3])
def test_divergence_matches_jacobian_trace(rng, pole, k):
    x = _ball_points(rng, 200, 3, pole, min_dist=1e-3)
    F = random_frames(rng, len(x), 3, k)
    div = brendle_divergence(pole, k, x, F)
    ref = divergence_on_planes(brendle_jacobian(pole, k, x), F)
    r = np.linalg.norm(x - pole, axis=1)
    assert np.max(np.abs(div - ref) / (1 + k * r ** (-k))) < 1e-8


@pytest.mark.parametrize("k", [2, 3])
def test_lemma_inequality_sampled(k):
    y = np.array([1.0, 0.0, 0.0])
    x, F = lemma_samples(np.random.default_rng(k), y, k, 3000)
    rep = check_lemma_properties(y, k, x, F, jacobian_samples=200)
    assert rep.inequality_ok, rep.min_slack
    assert rep.decay_ok


def test_lemma_rhs_on_tangent_plane(pole):
    # S containing x - y: perpendicular part vanishes
    x = np.array([[0.2, 0.3, 0.0]])
    d = x[0] - pole
    e1 = d / np.linalg.norm(d)
    F = np.array([[e1, [0.0, 0.0, 1.0]]])
    assert lemma_rhs(pole, 2, x, F)[0] == pytest.approx(1.0, abs=1e-14)


def test_field_wrapper(pole):
    X = brendle_field(pole, 3)
    x = np.array([[0.1, 0.2, 0.3]])
    assert np.array_equal(X(x), brendle_Y(pole, 3, x))
    assert X.tangent


@pytest.mark.parametrize("k", [1, 2, 3])
def test_interior_field_tangent_with_kelvin_weight(k):
    y = np.array([0.3, 0.2, -0.1])
    rng = np.random.default_rng(7)
    p = rng.standard_normal((100, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    W = interior_field(y, k, p)
    assert np.max(np.abs(np.sum(W * p, axis=1))) < 1e-9


def test_interior_field_without_kelvin_is_not_tangent():
    y = np.array([0.5, 0.0, 0.0])
    p = np.array([[0.0, 1.0, 0.0], [0.6, 0.8, 0.0]])
    W = interior_field(y, 3, p, kelvin=False)
    assert np.max(np.abs(np.sum(W * p, axis=1))) > 1e-3


@pytest.mark.parametrize("k", [1, 3])
def test_interior_field_tends_to_boundary_field(k, pole):
    x = np.array([[0.1, 0.4, -0.2], [-0.5, 0.1, 0.3]])
    errs = [np.max(np.abs(interior_field((1 - eps) * pole, k, x) - brendle_Y(pole, k, x)))
            for eps in (1e-2, 1e-3, 1e-4)]
    assert errs[-1] < 1e-3
    assert errs[0] > errs[1] > errs[2]


def test_interior_jacobian_matches_differences():
    y = np.array([0.3, 0.2, -0.1])
    x = np.array([[0.5, -0.4, 0.1]])
    J = interior_jacobian(y, 3, x)
    h = 1e-5
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        fd = (interior_field(y, 3, x + e) - interior_field(y, 3, x - e)) / (2 * h)
        assert np.max(np.abs(J[:, :, b] - fd)) < 1e-6


def test_divergence_rejects_wrong_plane_dimension(rng, pole):
    x = np.array([[0.1, 0.2, 0.3]])
    with pytest.raises(ValueError):
        brendle_divergence(pole, 3, x, random_frames(rng, 1, 3, 2))
