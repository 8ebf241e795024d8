"""Brendle's vector field for boundary points of the unit ball and its interior analogue.

For ``|y| = 1`` the field is

    Y(x) = x/2 - (x - y)/|x - y|^k - (k - 2)/2 * int_0^1 (t x - y)/|t x - y|^k dt.

The ``t``-integral is evaluated with composite Gauss-Legendre rules on panels
graded geometrically towards ``t = 1``, where the integrand is nearly singular
when ``x`` approaches ``y``.  Panel widths track the distance to the complex
singularity, so each panel converges geometrically; a 16- versus 24-point
comparison serves as the error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .varifold import AnalyticVectorField, divergence_on_planes

QUAD_TOL = 1e-10
LEMMA_TOL = 1e-8
SINGULAR_RADIUS = 1e-6
DECAY_SCHEDULE = (2.0, 1.0, 0.5, 0.25, 0.1, 0.05, 0.025, 0.01)
_CHUNK = 4096

_GL_LO = np.polynomial.legendre.leggauss(16)
_GL_HI = np.polynomial.legendre.leggauss(24)


class SingularPointError(ValueError):
    """Evaluation requested at (or too near) a pole of the field."""


def _panels(L: np.ndarray, delta: np.ndarray):
    """Graded panels on ``[0, L_i]`` refined towards ``L_i`` at scale ``delta_i``.

    Breakpoints are ``0, L - delta 2^(J-1), ..., L - 2 delta, L - delta, L``
    with ``J = ceil(log2(L/delta))``.
    """
    with np.errstate(divide="ignore"):
        levels = np.where(delta < L, np.ceil(np.log2(L / delta)), 0).astype(int)
    counts = levels + 1
    owner = np.repeat(np.arange(L.size), counts)
    q = np.arange(owner.size) - np.repeat(np.cumsum(counts) - counts, counts)
    lv, Lo, do = levels[owner], L[owner], delta[owner]

    def point(j):
        inner = Lo - do * 2.0 ** (lv - j)
        return np.where(j == 0, 0.0, np.where(j > lv, Lo, inner))

    return point(q), point(q + 1), owner


def _rule(a, b, rule):
    xi, wi = rule
    half = (b - a) / 2
    t = (a + b)[:, None] / 2 + half[:, None] * xi[None, :]
    return t, half[:, None] * wi[None, :]


def graded_quadrature(integrand, L, delta, tol: float = QUAD_TOL, refine: int = 4):
    """Vector-valued ``int_0^{L_i} g_i(t) dt`` for many integrands at once.

    ``integrand(t, idx)`` receives nodes ``t`` of shape ``(P, G)`` and the
    sample index of each panel, and returns values of shape ``(P, G, q)``.
    Panels are refined towards ``L_i`` at scale ``delta_i``; samples whose
    16/24-point discrepancy exceeds ``tol`` (relative to ``max(1, |value|)``)
    are redone with a four times finer grading, up to ``refine`` passes.

    Returns the ``(m, q)`` integrals and the ``(m,)`` relative error estimates.
    """
    L = np.asarray(L, dtype=float)
    delta = np.maximum(np.asarray(delta, dtype=float), 1e-300)
    m = L.size
    out = None
    err = np.zeros(m)
    todo = np.arange(m)
    scale = np.ones(m)
    for _ in range(refine):
        if todo.size == 0:
            break
        for start in range(0, todo.size, _CHUNK):
            idx = todo[start:start + _CHUNK]
            a, b, own = _panels(L[idx], delta[idx] * scale[idx])
            t_hi, w_hi = _rule(a, b, _GL_HI)
            t_lo, w_lo = _rule(a, b, _GL_LO)
            v_hi = np.einsum("pg,pgq->pq", w_hi, integrand(t_hi, idx[own]))
            v_lo = np.einsum("pg,pgq->pq", w_lo, integrand(t_lo, idx[own]))
            starts = np.flatnonzero(np.r_[True, own[1:] != own[:-1]])
            val = np.add.reduceat(v_hi, starts, axis=0)
            e = np.add.reduceat(np.sum(np.abs(v_hi - v_lo), axis=1), starts)
            if out is None:
                out = np.zeros((m, val.shape[1]))
            out[idx] = val
            err[idx] = e / np.maximum(1.0, np.linalg.norm(val, axis=1))
        todo = todo[err[todo] > tol]
        scale[todo] /= 4.0
    return out, err


def segment_integral(x, u, k: int, L=1.0, delta=None, jac: bool = False,
                     tol: float = QUAD_TOL, refine: int = 4):
    """``int_0^L (t x - u)/|t x - u|^k dt`` and optionally its ``x``-Jacobian.

    Parameters
    ----------
    x : (m, n) array
    u : (n,) unit vector
    L : float or (m,) array of upper limits
    delta : (m,) array, optional
        Singular scale; defaults to ``|L x - u|``.

    Returns
    -------
    I : (m, n) array
    DI : (m, n, n) array or None
    err : (m,) array of relative error estimates
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n = x.shape
    L = np.broadcast_to(np.asarray(L, dtype=float), (m,)).copy()
    if delta is None:
        delta = np.linalg.norm(L[:, None] * x - u[None, :], axis=1)

    def integrand(t, idx):
        z = t[:, :, None] * x[idx][:, None, :] - u
        r = np.linalg.norm(z, axis=-1)
        F = z / (r**k)[..., None]
        if not jac:
            return F
        D = (t / r**k)[..., None, None] * np.eye(n) - k * (t / r ** (k + 2))[..., None, None] * (
            z[..., :, None] * z[..., None, :])
        return np.concatenate([F, D.reshape(D.shape[:2] + (n * n,))], axis=-1)

    val, err = graded_quadrature(integrand, L, delta, tol, refine)
    I = val[:, :n]
    DI = val[:, n:].reshape(m, n, n) if jac else None
    return I, DI, err


def perp_integral(x, y, k: int, frames, tol: float = QUAD_TOL) -> np.ndarray:
    """``int_0^1 t |pi_S^perp (t x - y)|^2 / |t x - y|^(k+2) dt`` per sample."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    delta = np.linalg.norm(x - y, axis=1)

    def integrand(t, idx):
        z = t[:, :, None] * x[idx][:, None, :] - y
        E = frames[idx]
        zs = np.einsum("pia,pga->pgi", E, z)
        perp = z - np.einsum("pgi,pia->pga", zs, E)
        r2 = np.sum(z * z, axis=-1)
        return (t * np.sum(perp * perp, axis=-1) / r2 ** ((k + 2) / 2))[..., None]

    val, _ = graded_quadrature(integrand, np.ones(len(x)), delta, tol)
    return val[:, 0]


def _check_inputs(y, x, interior: bool = False):
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if interior:
        if not 0 < np.linalg.norm(y) < 1:
            raise ValueError("interior field needs 0 < |y| < 1")
    elif abs(np.linalg.norm(y) - 1) > 1e-12:
        raise ValueError("y must lie on the unit sphere")
    if x.shape[1] != y.shape[0]:
        raise ValueError("x and y have different dimensions")
    if np.any(np.linalg.norm(x - y, axis=1) == 0):
        raise SingularPointError("field evaluated at its pole x = y")
    return y, x, single


def _pole(x, c, k):
    d = x - c
    r = np.linalg.norm(d, axis=1)
    return d / r[:, None] ** k, d, r


def _pole_jac(d, r, k):
    n = d.shape[1]
    return (np.eye(n)[None] / (r**k)[:, None, None]
            - k * np.einsum("ma,mb->mab", d, d) / (r ** (k + 2))[:, None, None])


def brendle_Y(y, k: int, x, tol: float = QUAD_TOL):
    """Evaluate the boundary field at ``x`` (one point or an ``(m, n)`` array)."""
    y, x, single = _check_inputs(y, x)
    P, _, _ = _pole(x, y, k)
    Y = x / 2 - P
    if k != 2:
        I, _, _ = segment_integral(x, y, k, tol=tol)
        Y = Y - (k - 2) / 2 * I
    return Y[0] if single else Y


def brendle_jacobian(y, k: int, x, tol: float = QUAD_TOL) -> np.ndarray:
    """``DY(x)`` as an ``(m, n, n)`` array."""
    y, x, single = _check_inputs(y, x)
    n = x.shape[1]
    _, d, r = _pole(x, y, k)
    J = np.eye(n)[None] / 2 - _pole_jac(d, r, k)
    if k != 2:
        _, DI, _ = segment_integral(x, y, k, jac=True, tol=tol)
        J = J - (k - 2) / 2 * DI
    return J[0] if single else J


def brendle_field(y, k: int) -> AnalyticVectorField:
    y = np.asarray(y, dtype=float)
    return AnalyticVectorField(lambda x: brendle_Y(y, k, x), lambda x: brendle_jacobian(y, k, x),
                               tangent=True, name=f"Y[k={k}]")


def lemma_rhs(y, k: int, x, frames) -> np.ndarray:
    """``k/2 - k |pi_S^perp (x - y)|^2/|x - y|^(k+2)`` per sample."""
    d = np.atleast_2d(x) - y
    r = np.linalg.norm(d, axis=1)
    along = np.einsum("mia,ma->mi", frames, d)
    perp2 = np.maximum(np.sum(d * d, axis=1) - np.sum(along**2, axis=1), 0.0)
    return k / 2 - k * perp2 / r ** (k + 2)


def tangency_defect(y, k: int, samples: int = 200, seed: int = 0, field=None) -> float:
    """Max ``|<Y(x), x>|`` over random ``x`` on the unit sphere."""
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    p = rng.standard_normal((samples, y.size))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    Y = brendle_Y(y, k, p) if field is None else field(p)
    return float(np.max(np.abs(np.sum(Y * p, axis=1))))


def lemma_samples(rng: np.random.Generator, y, k: int, m: int, near_fraction: float = 0.3,
                  exclusion: float = SINGULAR_RADIUS):
    """Random ``(x, S)`` pairs in the closed ball, a share of them clustered near ``y``.

    Points near ``y`` are drawn with ``log |x - y|`` uniform on
    ``[log 1e-4, log 2]`` so every scale of the decay table is populated.
    """
    from .varifold import random_frames

    y = np.asarray(y, dtype=float)
    n = y.size
    m_near = int(near_fraction * m)
    m_far = m - m_near
    g = rng.standard_normal((m_far, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    far = g * rng.random(m_far)[:, None] ** (1.0 / n)
    # near y: rejection-free draw inside the ball by pulling towards the centre
    dirs = rng.standard_normal((m_near, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.where((dirs @ y)[:, None] > 0, dirs - 2 * (dirs @ y)[:, None] * y, dirs)
    rad = np.exp(rng.uniform(math.log(1e-4), math.log(2.0), m_near))
    near = y + rad[:, None] * dirs
    outside = np.linalg.norm(near, axis=1) > 1
    near[outside] /= np.linalg.norm(near[outside], axis=1, keepdims=True)
    x = np.concatenate([far, near])
    x = x[np.linalg.norm(x - y, axis=1) >= exclusion]
    return x, random_frames(rng, len(x), n, k)


@dataclass
class LemmaReport:
    k: int
    n: int
    samples: int
    min_slack: float  # min over samples of rhs - div_S Y
    weak_min_slack: float  # min over samples of k/2 - div_S Y
    worst_point: list
    decay: dict = field(default_factory=dict)
    decay_ratio: float = float("nan")  # e(0.01)/e(1)
    tol: float = LEMMA_TOL
    jacobian_mismatch: float = 0.0

    @property
    def inequality_ok(self) -> bool:
        return self.min_slack >= -self.tol

    @property
    def decay_ok(self) -> bool:
        e = self.decay
        return e[2.0] >= e[1.0] >= e[0.1] and self.decay_ratio <= 0.05

    def to_dict(self) -> dict:
        return {
            "k": self.k, "n": self.n, "samples": self.samples,
            "min_slack": self.min_slack, "weak_min_slack": self.weak_min_slack,
            "worst_point": self.worst_point,
            "decay": {repr(t): v for t, v in self.decay.items()},
            "decay_ratio": self.decay_ratio, "jacobian_mismatch": self.jacobian_mismatch,
            "inequality_ok": self.inequality_ok, "decay_ok": self.decay_ok,
        }


def brendle_remainder(y, k: int, x, tol: float = QUAD_TOL) -> np.ndarray:
    """``Y(x) + (x - y)/|x - y|^k`` evaluated without the pole term."""
    y, x, single = _check_inputs(y, x)
    R = x / 2
    if k != 2:
        I, _, _ = segment_integral(x, y, k, tol=tol)
        R = R - (k - 2) / 2 * I
    return R[0] if single else R


def brendle_divergence(y, k: int, x, frames, tol: float = QUAD_TOL) -> np.ndarray:
    """``div_S Y`` per sample, assembled term by term.

    The pole term contributes ``k/2 - k |pi_S^perp d|^2/|d|^(k+2)`` and the
    integral term ``-(k-2) k/2 int_0^1 t |pi_S^perp z|^2/|z|^(k+2) dt`` with
    ``z = t x - y``.  Summing these avoids the cancellation between
    ``O(|x - y|^-k)`` entries that the trace of the Jacobian suffers near ``y``.
    """
    y, x, _ = _check_inputs(y, x)
    if np.shape(frames)[1] != k:
        raise ValueError(f"the divergence identity needs {k}-dimensional planes")
    div = lemma_rhs(y, k, x, frames)
    if k != 2:
        div = div - (k - 2) * k / 2 * perp_integral(x, y, k, frames, tol)
    return div


def decay_envelope(y, k: int, x, remainder=None, schedule=DECAY_SCHEDULE) -> dict:
    """``e(t) = max_{|x - y| <= t} |Y(x) + (x - y)/|x - y|^k| |x - y|^(k-1)``."""
    y = np.asarray(y, dtype=float)
    if remainder is None:
        remainder = brendle_remainder(y, k, x)
    r = np.linalg.norm(x - y, axis=1)
    g = np.linalg.norm(remainder, axis=1) * r ** (k - 1)
    return {float(t): float(np.max(g[r <= t], initial=0.0)) for t in schedule}


def check_lemma_properties(y, k: int, x, frames, tol: float = LEMMA_TOL,
                           exclusion: float = SINGULAR_RADIUS,
                           jacobian_samples: int = 2000) -> LemmaReport:
    """Sampled test of the divergence inequality and of the decay of ``Y + D rho/rho^(k-1)``.

    The divergence is taken from :func:`brendle_divergence`; its agreement
    with the trace of :func:`brendle_jacobian` (relative to the size
    ``k |x - y|^-k`` of the pole term) is recorded as ``jacobian_mismatch``
    on the first ``jacobian_samples`` samples.
    """
    y = np.asarray(y, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x - y, axis=1)
    if np.any(r < exclusion):
        raise SingularPointError(f"sample within {exclusion:g} of the pole")
    div = brendle_divergence(y, k, x, frames)
    j = slice(0, jacobian_samples)
    div_jac = divergence_on_planes(brendle_jacobian(y, k, x[j]), frames[j])
    mismatch = float(np.max(np.abs(div[j] - div_jac) / (1.0 + k * r[j] ** (-k))))
    slack = lemma_rhs(y, k, x, frames) - div
    i = int(np.argmin(slack))
    decay = decay_envelope(y, k, x)
    ratio = decay[0.01] / decay[1.0] if decay[1.0] > 0 else float("inf")
    return LemmaReport(k, y.size, len(x), float(slack[i]), float(np.min(k / 2 - div)),
                       x[i].tolist(), decay, ratio, tol, mismatch)


# ---------------------------------------------------------------------------
# interior points


def interior_field(y, k: int, x, kelvin: bool = True, tol: float = QUAD_TOL):
    """Gradient-type field centred at an interior point ``0 < |y| < 1``.

    The image pole ``y* = y/|y|^2`` enters with weight ``|y|^(2-k)`` when
    ``kelvin`` is true, which makes the field tangent to the unit sphere for
    every ``k``; ``kelvin=False`` uses unit weight.
    """
    y, x, single = _check_inputs(y, x, interior=True)
    ny = np.linalg.norm(y)
    ystar = y / ny**2
    if np.any(np.linalg.norm(x - ystar, axis=1) == 0):
        raise SingularPointError("field evaluated at the image pole")
    c = ny ** (2 - k) if kelvin else 1.0
    P1, _, _ = _pole(x, y, k)
    P2, _, _ = _pole(x, ystar, k)
    W = x / 2 - P1 / 2 - c * P2 / 2
    if k != 2:
        I, _, _ = segment_integral(x, y / ny, k, L=ny, tol=tol)
        W = W - (k - 2) / 2 * I
    return W[0] if single else W


def interior_jacobian(y, k: int, x, kelvin: bool = True, tol: float = QUAD_TOL):
    y, x, single = _check_inputs(y, x, interior=True)
    n = x.shape[1]
    ny = np.linalg.norm(y)
    ystar = y / ny**2
    c = ny ** (2 - k) if kelvin else 1.0
    _, d1, r1 = _pole(x, y, k)
    _, d2, r2 = _pole(x, ystar, k)
    J = np.eye(n)[None] / 2 - _pole_jac(d1, r1, k) / 2 - c * _pole_jac(d2, r2, k) / 2
    if k != 2:
        _, DI, _ = segment_integral(x, y / ny, k, L=ny, jac=True, tol=tol)
        J = J - (k - 2) / 2 * DI
    return J[0] if single else J
