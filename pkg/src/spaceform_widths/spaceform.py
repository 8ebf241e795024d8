"""Space-form primitives: ``sn_K``, unit ball/sphere constants, warped profiles.

A geodesic ball of radius ``R`` in the simply connected space form of
curvature ``K`` is the warped product ``[0, R] x_h S^{n-1}`` with
``h = sn_K``.  Everything downstream (comparison maps, sweepouts, stability
fixtures) is built on the helpers here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma as _gamma

QUAD_EPSABS = 1e-10
# below this value of |K| r^2 the closed forms lose digits; use the series
SERIES_CROSSOVER = 1e-6


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, abserr: float):
        super().__init__(f"{message} (achieved error bound {abserr:.3e})")
        self.abserr = abserr


def alpha(k: int) -> float:
    """Volume of the unit Euclidean ``k``-ball."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return math.pi ** (k / 2) / _gamma(k / 2 + 1)


def beta(k: int) -> float:
    """Area of the unit round ``k``-sphere, ``(k + 1) * alpha(k + 1)``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return 2 * math.pi ** ((k + 1) / 2) / _gamma((k + 1) / 2)


def sn(K: float, r):
    """Generalised sine: ``sin(r sqrt K)/sqrt K``, ``r``, or ``sinh(r sqrt|K|)/sqrt|K|``.

    Accepts scalars or arrays.  For ``|K| r^2 < 1e-6`` a three-term Taylor
    series is used, so the three branches join smoothly across ``K = 0``.
    """
    K = float(K)
    if np.ndim(r) == 0:
        # scalar path for quadrature integrands
        r = float(r)
        if r < 0:
            raise ValueError("sn requires r >= 0")
        x = K * r * r
        if K == 0.0:
            return r
        if abs(x) < SERIES_CROSSOVER:
            return r * (1.0 - x / 6.0 + x * x / 120.0)
        s = math.sqrt(abs(K))
        return math.sin(r * s) / s if K > 0 else math.sinh(r * s) / s
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("sn requires r >= 0")
    if K == 0.0:
        out = r_arr.copy()
    else:
        x = K * r_arr**2
        series = r_arr * (1.0 - x / 6.0 + x**2 / 120.0)
        s = math.sqrt(abs(K))
        if K > 0:
            closed = np.sin(r_arr * s) / s
        else:
            closed = np.sinh(r_arr * s) / s
        out = np.where(np.abs(x) < SERIES_CROSSOVER, series, closed)
    if np.ndim(r) == 0:
        return float(out)
    return out


def sn_prime(K: float, r):
    """Derivative of :func:`sn` in ``r`` (the generalised cosine)."""
    r_arr = np.asarray(r, dtype=float)
    K = float(K)
    if K > 0:
        out = np.cos(r_arr * math.sqrt(K))
    elif K < 0:
        out = np.cosh(r_arr * math.sqrt(-K))
    else:
        out = np.ones_like(r_arr)
    if np.ndim(r) == 0:
        return float(out)
    return out


def max_radius(K: float) -> float:
    """Largest admissible ball radius: ``pi/(2 sqrt K)`` for ``K > 0``, else ``inf``."""
    return math.pi / (2 * math.sqrt(K)) if K > 0 else math.inf


@dataclass(frozen=True)
class SpaceFormBall:
    """Geodesic ball ``B^n_{R;K}`` together with the slice dimension ``k``."""

    n: int
    k: int
    R: float
    K: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("ambient dimension n must be >= 2")
        if not 1 <= self.k < self.n:
            raise ValueError("need 1 <= k < n")
        if not self.R > 0 or not math.isfinite(self.R):
            raise ValueError("radius must be positive and finite")
        if not math.isfinite(self.K):
            raise ValueError("curvature must be finite")
        if self.K > 0 and self.R > max_radius(self.K) * (1 + 1e-14):
            raise ValueError("for K > 0 the radius must satisfy R <= pi/(2 sqrt K)")

    def profile(self) -> "WarpedProfile":
        return WarpedProfile.space_form(self.K, self.R)


@dataclass(frozen=True)
class WarpedProfile:
    """Radial profile ``h`` on ``[0, R]`` of a warped product ``dr^2 + h^2 g_S``.

    ``h`` must accept numpy arrays.  ``samples`` holds a tabulation on a
    uniform grid, used for diagnostics and serialisation.
    """

    h: Callable
    R: float
    name: str = "h"
    samples: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("profile radius must be positive")
        if self.samples is None:
            grid = np.linspace(0.0, self.R, 65)
            object.__setattr__(self, "samples", np.column_stack([grid, self(grid)]))

    def __call__(self, r):
        return self.h(r)

    @classmethod
    def space_form(cls, K: float, R: float) -> "WarpedProfile":
        return cls(lambda r, _K=float(K): sn(_K, r), R, name=f"sn[{K:g}]")

    def restrict(self, R: float) -> "WarpedProfile":
        """Same profile on the shorter interval ``[0, R]``."""
        return WarpedProfile(self.h, R, name=self.name)


def ball_area(k: int, profile: WarpedProfile, epsabs: float = QUAD_EPSABS) -> float:
    """``k``-area of the equatorial ball ``M^k_{h,R}``: ``beta(k-1) * int_0^R h^(k-1)``.

    For ``k = 1`` the result is ``2R`` without quadrature.  Raises
    :class:`QuadratureError` if the adaptive rule cannot certify ``epsabs``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return 2.0 * profile.R
    if profile.R == 0:
        return 0.0
    value, abserr = integrate.quad(
        lambda r: float(profile(r)) ** (k - 1), 0.0, profile.R,
        epsabs=epsabs, epsrel=0.0, limit=200,
    )
    if abserr > epsabs:
        raise QuadratureError("ball_area quadrature did not converge", abserr)
    return beta(k - 1) * value


def sn_power_integral(K: float, k: int, s: float, epsabs: float = 1e-13) -> float:
    """``int_0^s sn_K(r)^(k-1) dr`` by adaptive quadrature."""
    if s <= 0:
        return 0.0
    if k == 1:
        return float(s)
    value, abserr = integrate.quad(
        lambda r: sn(K, r) ** (k - 1), 0.0, s, epsabs=epsabs, epsrel=1e-13, limit=200
    )
    if abserr > max(epsabs, 1e-12 * abs(value)):
        raise QuadratureError("sn power integral did not converge", abserr)
    return value


@dataclass
class DaggerReport:
    passed: bool
    h0: float
    min_value: float
    second_derivatives: list
    increments: list
    message: str = ""


def check_dagger(profile: WarpedProfile, levels: int = 4, tol: float = 1e-6) -> DaggerReport:
    """Numerical test of the smoothness condition on a warped profile.

    Checks ``h(0) = 0``, ``h >= 0`` on the sample grid, and that
    ``g(u) = h(sqrt u)/sqrt u`` has a second derivative at ``u -> 0`` that
    settles under grid refinement.  The one-sided stencil
    ``(g(d) - 2 g(2d) + g(3d))/d^2`` is evaluated for ``d`` shrinking by 4
    per level; a ``C^2`` function gives increments contracting by about 4,
    a singular one (``h = r^2`` gives ``g = sqrt u``) makes them grow.
    """
    try:
        h0 = float(profile(np.array([0.0]))[0])
        grid = np.linspace(0.0, profile.R, 257)
        min_value = float(np.min(profile(grid)))
    except Exception as exc:  # noqa: BLE001 - any evaluator failure is a diagnostic
        raise ValueError(f"profile could not be evaluated near 0: {exc}") from exc

    def g(u):
        s = np.sqrt(u)
        return profile(s) / s

    d0 = min(0.1, profile.R**2 / 3.0)
    d2 = []
    for j in range(levels):
        d = d0 * 4.0**-j
        vals = g(np.array([d, 2 * d, 3 * d]))
        d2.append(float((vals[0] - 2 * vals[1] + vals[2]) / d**2))
    inc = [abs(b - a) for a, b in zip(d2, d2[1:])]
    scale = 1.0 + abs(d2[-1])
    contracting = all(
        later <= max(0.5 * earlier, tol * scale) for earlier, later in zip(inc, inc[1:])
    )
    ok_zero = abs(h0) <= 1e-12
    ok_sign = min_value >= -1e-12
    passed = ok_zero and ok_sign and contracting and all(map(math.isfinite, d2))
    msg = []
    if not ok_zero:
        msg.append(f"h(0) = {h0:.3e} != 0")
    if not ok_sign:
        msg.append("h takes negative values")
    if not contracting:
        msg.append("second derivative of h(sqrt u)/sqrt u does not settle as u -> 0")
    return DaggerReport(passed, h0, min_value, d2, inc, "; ".join(msg))


def slice_radius(R: float, K: float, t: float) -> float:
    """Radius of the totally geodesic slice orthogonal to a radius at distance ``t``.

    From the space-form Pythagorean identities
    ``cos(R sqK) = cos(t sqK) cos(rho sqK)`` (``K > 0``), ``R^2 = t^2 + rho^2``
    (``K = 0``) and the ``cosh`` analogue for ``K < 0``.
    """
    t = abs(float(t))
    if t > R * (1 + 1e-14):
        raise ValueError(f"slice offset t={t} exceeds the ball radius R={R}")
    t = min(t, R)
    if t == 0.0:
        return float(R)
    if t == R:
        return 0.0
    if K == 0 or abs(K) * R**2 < SERIES_CROSSOVER:
        return math.sqrt((R - t) * (R + t))
    s = math.sqrt(abs(K))
    if K > 0:
        # acos(cos R'/cos t') near 1 loses digits; use the half-angle form with
        # 1 - cos R'/cos t' = 2 sin((R'+t')/2) sin((R'-t')/2)/cos t'
        one_minus = 2 * math.sin((R + t) * s / 2) * math.sin((R - t) * s / 2) / math.cos(t * s)
        return 2 * math.asin(min(1.0, math.sqrt(max(one_minus, 0.0) / 2))) / s
    # cosh(R')/cosh(t') - 1 = 2 sinh((R'+t')/2) sinh((R'-t')/2)/cosh t'
    minus_one = 2 * math.sinh((R + t) * s / 2) * math.sinh((R - t) * s / 2) / math.cosh(t * s)
    return 2 * math.asinh(math.sqrt(max(minus_one, 0.0) / 2)) / s
