"""Radial comparison maps between space-form balls.

For ``K <= K1`` the map ``r -> f(r)`` is defined by equal equatorial areas,

    int_0^s sn_K(r)^(k-1) dr = int_0^f(s) sn_K1(r)^(k-1) dr,

equivalently ``f' sn_K1(f)^(k-1) = sn_K(r)^(k-1)``, ``f(0) = 0``.  Such a map
contracts ``k``-areas, so widths can be pulled back from the hemisphere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, optimize

from .spaceform import WarpedProfile, ball_area, max_radius, sn, sn_power_integral, sn_prime

ODE_RTOL = 1e-12
IDENTITY_TOL = 1e-8
ENDPOINT_TOL = 1e-7
# length of the series start at the 0/0 singularity for k >= 2
SERIES_LENGTH = 1e-3


def _rhs(k: int, K: float, K1: float, r, f):
    return (sn(K, r) / sn(K1, f)) ** (k - 1)


def _second_derivative(k: int, K: float, K1: float, r, f, fp):
    # d/dr of (sn_K(r)/sn_K1(f))^(k-1)
    a, b = sn(K, r), sn(K1, f)
    ratio = a / b
    dratio = (sn_prime(K, r) * b - a * sn_prime(K1, f) * fp) / b**2
    return (k - 1) * ratio ** (k - 2) * dratio


def series_coefficient(k: int, K: float, K1: float) -> float:
    """Coefficient ``c`` in ``f(r) = r (1 + c r^2 + O(r^4))``."""
    return (k - 1) * (K1 - K) / (6.0 * (k + 2))


@dataclass(frozen=True)
class ComparisonMap:
    """Tabulated comparison map with quintic Hermite interpolation."""

    k: int
    K: float
    K1: float
    R0: float
    r: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    fp: np.ndarray = field(repr=False)

    def __post_init__(self):
        fpp = np.array([
            0.0 if self.k == 1 or self.K == self.K1 or ri == 0.0
            else _second_derivative(self.k, self.K, self.K1, ri, fi, fpi)
            for ri, fi, fpi in zip(self.r, self.f, self.fp)
        ])
        if self.k >= 2 and self.K != self.K1:
            fpp[0] = 0.0  # f is odd in r, so f''(0) = 0
        poly = interpolate.BPoly.from_derivatives(self.r, np.column_stack([self.f, self.fp, fpp]))
        object.__setattr__(self, "_poly", poly)
        object.__setattr__(self, "_dpoly", poly.derivative())

    @property
    def R1(self) -> float:
        return float(self.f[-1])

    def __call__(self, r):
        return self._poly(r)

    def derivative(self, r):
        return self._dpoly(r)

    @classmethod
    def identity(cls, k: int, K: float, R0: float, n_grid: int = 201) -> "ComparisonMap":
        r = np.linspace(0.0, R0, n_grid)
        return cls(k, K, K, R0, r, r.copy(), np.ones_like(r))

    def identity_residual(self) -> float:
        """Max over the grid of ``|int_0^r sn_K^(k-1) - int_0^f(r) sn_K1^(k-1)|``."""
        if self.k == 1:
            return float(np.max(np.abs(self.f - self.r)))
        return max(
            abs(sn_power_integral(self.K, self.k, ri) - sn_power_integral(self.K1, self.k, fi))
            for ri, fi in zip(self.r, self.f)
        )

    def to_json(self) -> str:
        grid = [{"r": float(a), "f": float(b), "fp": float(c)} for a, b, c in zip(self.r, self.f, self.fp)]
        return json.dumps({"k": self.k, "K": self.K, "K1": self.K1, "R0": self.R0,
                           "R1": self.R1, "grid": grid})

    @classmethod
    def from_json(cls, text: str) -> "ComparisonMap":
        d = json.loads(text)
        g = d["grid"]
        return cls(d["k"], d["K"], d["K1"], d["R0"],
                   np.array([p["r"] for p in g]), np.array([p["f"] for p in g]),
                   np.array([p["fp"] for p in g]))


def solve_f(k: int, K: float, K1: float, R0: float, n_grid: int = 201,
            rtol: float = ODE_RTOL, max_step: float = np.inf, strict: bool = True) -> ComparisonMap:
    """Integrate the comparison ODE from ``f(0) = 0`` out to ``R0``.

    ``strict=False`` permits ``K > K1``, which the width argument never
    uses; it exists so that negative tests can build a non-contracting map.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if strict and K > K1:
        raise ValueError(f"comparison requires K <= K1, got K={K}, K1={K1}")
    if not R0 > 0:
        raise ValueError("R0 must be positive")
    if K > 0 and R0 > math.pi / math.sqrt(K):
        raise ValueError("R0 outside the domain of sn_K")
    r_grid = np.linspace(0.0, R0, n_grid)
    if k == 1 or K == K1:
        return ComparisonMap(k, K, K1, R0, r_grid, r_grid.copy(), np.ones_like(r_grid))

    c = series_coefficient(k, K, K1)
    r_s = min(SERIES_LENGTH, R0 / 10.0)
    f_s = r_s * (1.0 + c * r_s**2)
    f_cap = math.pi / math.sqrt(K1) if K1 > 0 else math.inf

    def rhs(r, y):
        return [_rhs(k, K, K1, r, y[0])]

    def hits_cap(r, y):
        return f_cap - y[0] - 1e-12

    hits_cap.terminal = True

    inside = r_grid[r_grid > r_s]
    sol = integrate.solve_ivp(rhs, (r_s, R0), [f_s], method="DOP853", t_eval=inside,
                              rtol=rtol, atol=rtol * 1e-3, max_step=max_step,
                              events=hits_cap if math.isfinite(f_cap) else None)
    if sol.status != 0:
        raise RuntimeError(f"comparison ODE failed: {sol.message}")
    near = r_grid[r_grid <= r_s]
    f_vals = np.concatenate([near * (1.0 + c * near**2), sol.y[0]])
    fp_vals = np.concatenate([1.0 + 3.0 * c * near**2, _rhs(k, K, K1, inside, sol.y[0])])
    return ComparisonMap(k, K, K1, R0, r_grid, f_vals, fp_vals)


def _sin_power_half(k: int) -> float:
    return sn_power_integral(1.0, k, math.pi / 2)


def case1_radius(k: int) -> float:
    """``R0`` with ``f(R0) = pi/2`` for the map from flat space to the unit sphere."""
    return (k * _sin_power_half(k)) ** (1.0 / k)


def case2_curvature(alpha: float, k: int, verify: bool = True) -> float:
    """Curvature ``K`` in (0, 1) for which ``f(alpha/sqrt K) = pi/2`` (comparison with ``K1 = 1``)."""
    if not 0 < alpha < math.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2)")
    K = (sn_power_integral(1.0, k, alpha) / _sin_power_half(k)) ** (2.0 / k)
    if verify:
        fmap = solve_f(k, K, 1.0, alpha / math.sqrt(K))
        err = abs(fmap.R1 - math.pi / 2)
        if err > ENDPOINT_TOL:
            raise AssertionError(f"case 2 endpoint off by {err:.3e}")
    return K


def case3_curvature(R: float, k: int, verify: bool = True) -> float:
    """Curvature ``K1 > 0`` with ``f(R) = pi/(2 sqrt K1)`` for the map out of ``B_{R;-1}``."""
    if not R > 0:
        raise ValueError("R must be positive")
    K1 = (_sin_power_half(k) / sn_power_integral(-1.0, k, R)) ** (2.0 / k)
    if verify:
        fmap = solve_f(k, -1.0, K1, R)
        err = abs(fmap.R1 - max_radius(K1))
        if err > ENDPOINT_TOL:
            raise AssertionError(f"case 3 endpoint off by {err:.3e}")
    return K1


@dataclass(frozen=True)
class ComparisonCase:
    case: int
    k: int
    K: float
    K1: float
    R0: float

    @property
    def R1(self) -> float:
        return max_radius(self.K1)

    def profiles(self) -> tuple[WarpedProfile, WarpedProfile]:
        return WarpedProfile.space_form(self.K, self.R0), WarpedProfile.space_form(self.K1, self.R1)


def comparison_case(case: int, k: int, param: float | None = None) -> ComparisonCase:
    """Parameters for the three curvature regimes.

    ``case=1``: flat source (``param`` unused); ``case=2``: spherical source
    with angle ``param`` in (0, pi/2); ``case=3``: hyperbolic source ``K=-1``
    of radius ``param``.
    """
    if case == 1:
        return ComparisonCase(1, k, 0.0, 1.0, case1_radius(k))
    if case == 2:
        a = math.pi / 3 if param is None else param
        K = case2_curvature(a, k, verify=False)
        return ComparisonCase(2, k, K, 1.0, a / math.sqrt(K))
    if case == 3:
        R = 1.0 if param is None else param
        return ComparisonCase(3, k, -1.0, case3_curvature(R, k, verify=False), R)
    raise ValueError("case must be 1, 2 or 3")


@dataclass
class ContractionReport:
    max_violation_cond1: float
    max_violation_cond2: float
    fprime_violation: float
    area_identity_residual: float
    grid_size: int
    passed: bool
    tolerance: float = IDENTITY_TOL


def verify_contraction(h0: WarpedProfile, h1: WarpedProfile, fmap: ComparisonMap,
                       refine: int = 2, tol: float = IDENTITY_TOL,
                       slack: float = 1e-10) -> ContractionReport:
    """Check the hypotheses under which ``r -> f(r)`` contracts ``k``-areas.

    Condition 1 is the equality ``f' h1(f)^(k-1) = h0^(k-1)``; condition 2 is
    ``h1(f(r)) <= h0(r)``; additionally ``f' >= 1`` and the substitution
    identity ``area(M^k_{h0,R0}) = area(M^k_{h1,R1})``.
    """
    k = fmap.k
    if abs(h0.R - fmap.R0) > 1e-9 * max(1.0, fmap.R0):
        raise ValueError(f"source profile radius {h0.R} does not match map domain {fmap.R0}")
    if abs(h1.R - fmap.R1) > ENDPOINT_TOL * max(1.0, fmap.R1):
        raise ValueError(f"target profile radius {h1.R} does not match f(R0) = {fmap.R1}")
    r = np.linspace(0.0, fmap.R0, refine * (len(fmap.r) - 1) + 1)
    f = np.minimum(fmap(r), h1.R)
    fp = fmap.derivative(r)
    lhs = fp * np.asarray(h1(f)) ** (k - 1)
    rhs = np.asarray(h0(r)) ** (k - 1)
    cond1 = float(np.max(np.abs(lhs - rhs)))
    cond2 = float(max(0.0, np.max(np.asarray(h1(f)) - np.asarray(h0(r)))))
    fprime = float(max(0.0, np.max((1.0 - 1e-12) - fp)))
    area_res = abs(ball_area(k, h0) - ball_area(k, h1.restrict(fmap.R1)))
    passed = cond1 <= tol and cond2 <= slack and fprime == 0.0 and area_res <= tol
    return ContractionReport(cond1, cond2, fprime, area_res, len(r), passed, tol)


def inverse_f(fmap: ComparisonMap, target: float) -> float:
    """Solve ``f(r) = target`` on the tabulated domain."""
    return optimize.brentq(lambda s: float(fmap(s)) - target, 0.0, fmap.R0, xtol=1e-14)
