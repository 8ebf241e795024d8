"""Density, boundary monotonicity, the boundary-point area bound and the excess.

All quantities are atom sums over a :class:`DiscreteVarifold`.  Limits
``r -> 0`` are replaced by polynomial extrapolation over a radius schedule
(Richardson for densities, least squares in the cut-off argument), and
``eps -> 0`` by a linear fit in ``eps``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .brendle import brendle_divergence, brendle_remainder, brendle_Y
from .spaceform import alpha
from .varifold import CutoffProfile, DiscreteVarifold, mass

DENSITY_RADII = (0.4, 0.2, 0.1)
DENSITY_TOL = 0.05
# dense radius grid with a quadratic fit; a Dirac varifold makes every annulus
# sum a step function of r, and least squares over many radii averages that out
PIPELINE_RADII = tuple(np.linspace(0.2, 0.8, 32))
PIPELINE_R_DEGREE = 2
PIPELINE_EPS = (0.5, 0.25, 0.125)


class ConvergenceError(RuntimeError):
    """Extrapolated values do not settle over the supplied schedule."""


def _perp_sq(V: DiscreteVarifold, d: np.ndarray) -> np.ndarray:
    along = np.einsum("mia,ma->mi", V.frames, d)
    perp = d - np.einsum("mi,mia->ma", along, V.frames)
    return np.sum(perp * perp, axis=1)


def ball_mass(V: DiscreteVarifold, y, r: float) -> float:
    """``||V||(B_r(y))`` (open ball)."""
    d = np.linalg.norm(V.x - np.asarray(y, dtype=float), axis=1)
    return float(np.sum(V.w[d < r]))


def richardson(r, f) -> np.ndarray:
    """Linear extrapolation to ``r = 0`` from consecutive pairs of ``(r, f(r))``."""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    return (r[:-1] * f[1:] - r[1:] * f[:-1]) / (r[:-1] - r[1:])


def extrapolate_to_zero(r, f, degree: int = 1) -> float:
    """Value at ``r = 0`` of the least-squares polynomial of ``degree`` through ``(r, f)``.

    With two points and ``degree = 1`` this is Richardson extrapolation.
    """
    r = np.asarray(r, dtype=float)
    if len(r) <= degree:
        raise ValueError("need more radii than the fit degree")
    return float(np.polynomial.polynomial.polyfit(r, np.asarray(f, dtype=float), degree)[0])


@dataclass
class DensityReport:
    y: list
    density: float
    modified: float
    ratios: list
    extrapolants: list
    radii: list
    boundary: bool

    def to_dict(self) -> dict:
        return asdict(self)


def density(V: DiscreteVarifold, x, radii=DENSITY_RADII, tol: float = DENSITY_TOL) -> DensityReport:
    """Extrapolated ``||V||(B_r(x))/(alpha_k r^k)`` as ``r -> 0``.

    The ratio is assumed to be ``Theta + c r + O(r^2)``; consecutive radii are
    combined linearly.  If the last two extrapolants differ by more than
    ``tol`` a :class:`ConvergenceError` is raised.  The modified density
    doubles the value at points of the unit sphere.
    """
    x = np.asarray(x, dtype=float)
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    ak = alpha(V.k)
    ratios = [ball_mass(V, x, r) / (ak * r**V.k) for r in radii]
    ext = richardson(radii, ratios)
    if len(ext) >= 2 and abs(ext[-1] - ext[-2]) > tol:
        raise ConvergenceError(f"density extrapolants {ext[-2]:.4f}, {ext[-1]:.4f} disagree")
    theta = max(float(ext[-1]), 0.0)
    on_sphere = abs(np.linalg.norm(x) - 1) <= 1e-12
    return DensityReport(x.tolist(), theta, 2 * theta if on_sphere else theta, ratios,
                         ext.tolist(), radii, bool(on_sphere))


# ---------------------------------------------------------------------------
# monotonicity


@dataclass
class MonotonicityReport:
    y: list
    gamma: float
    weighted: bool
    t: list
    ratio: list
    lhs: list
    rhs: list
    slack: list  # discretisation allowance per interval
    margin: list  # lhs - rhs + slack
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _ring_error(V: DiscreteVarifold, rho: np.ndarray, t: float) -> float:
    # cells straddling the sphere of radius t are each misassigned by up to
    # half their weight; errors of independent cells add in quadrature
    h = V.w ** (1.0 / V.k)
    return 0.5 * float(np.sqrt(np.sum(V.w[np.abs(rho - t) < h] ** 2)))


def monotonicity_check(V: DiscreteVarifold, y, t_grid, gamma: float = 1.0,
                       weighted: bool = False, slack_factor: float = 1.0) -> MonotonicityReport:
    """Sampled boundary monotonicity for ``y`` on the unit sphere.

    For consecutive ``s < t`` compares ``ratio(t) - ratio(s)`` with
    ``sum w |pi_S^perp D rho|^2/((1 + gamma rho) rho^k)`` over the annulus.
    ``ratio(t) = ||V||(B_t(y))/t^k``, or ``exp(gamma t)`` times that when
    ``weighted``.  The allowance is ``slack_factor`` times the root-sum-square
    of half the weights of atoms within one cell size of either sphere,
    scaled like the ratio.
    """
    y = np.asarray(y, dtype=float)
    t = np.sort(np.asarray(t_grid, dtype=float))
    d = V.x - y
    rho = np.linalg.norm(d, axis=1)
    k = V.k
    safe = np.where(rho > 0, rho, 1.0)
    dperp = np.where(rho > 0, _perp_sq(V, d) / safe**2, 0.0)
    integrand = V.w * dperp / ((1 + gamma * safe) * safe**k)
    weight = np.exp(gamma * t) if weighted else np.ones_like(t)
    ratio = np.array([ball_mass(V, y, ti) / ti**k for ti in t]) * weight
    err = np.array([_ring_error(V, rho, ti) / ti**k for ti in t]) * weight
    lhs, rhs, slack, margin = [], [], [], []
    for i in range(len(t) - 1):
        s_, t_ = t[i], t[i + 1]
        lhs.append(float(ratio[i + 1] - ratio[i]))
        rhs.append(float(np.sum(integrand[(rho >= s_) & (rho < t_)])))
        slack.append(float(slack_factor * (err[i] + err[i + 1])))
        margin.append(lhs[-1] - rhs[-1] + slack[-1])
    return MonotonicityReport(y.tolist(), gamma, weighted, t.tolist(), ratio.tolist(), lhs, rhs,
                              slack, margin, bool(min(margin, default=0.0) >= 0))


def flat_boundary_ratio(t):
    """``A(t)/t^2`` for the unit disk and a disk of radius ``t`` centred on its boundary."""
    t = np.asarray(t, dtype=float)
    A = t**2 * np.arccos(t / 2) + np.arccos(1 - t**2 / 2) - (t / 2) * np.sqrt(4 - t**2)
    return A / t**2


# ---------------------------------------------------------------------------
# boundary-point area bound


@dataclass
class PipelineTerms:
    r: float
    eps: float
    lhs: float
    t1: float  # int eta div_S Y
    t2: float  # int eta' rho^(1-k) |D_S^perp rho|^2
    t3: float  # int eta' rho^(1-k) h(rho)
    stationarity: float  # int div_S(eta Y)


@dataclass
class PipelineReport:
    y: list
    k: int
    mass: float
    density: float
    terms: list = field(default_factory=list)
    lhs_limit: dict = field(default_factory=dict)  # eps -> r-extrapolated lhs
    t2_limit: dict = field(default_factory=dict)
    t3_limit: dict = field(default_factory=dict)
    lhs0: float = float("nan")
    t20: float = float("nan")
    t30: float = float("nan")
    mass_bound: float = float("nan")  # (2/k)(lhs0 - t20 - t30)
    density_bound: float = float("nan")  # 2 alpha_k Theta
    final_inequality: float = float("nan")  # (k/2) M - k alpha_k Theta

    @property
    def slack(self) -> float:
        return self.mass - self.mass_bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slack"] = self.slack
        for key in ("lhs_limit", "t2_limit", "t3_limit"):
            d[key] = {repr(e): v for e, v in d[key].items()}
        return d


def _h_envelope(rho: np.ndarray, g: np.ndarray) -> np.ndarray:
    # non-decreasing envelope h(rho) = max_{rho' <= rho} g(rho')
    order = np.argsort(rho, kind="stable")
    env = np.empty_like(g)
    env[order] = np.maximum.accumulate(g[order])
    return env


def fb_estimate_pipeline(V: DiscreteVarifold, y, r_schedule=PIPELINE_RADII, eps=PIPELINE_EPS,
                         density_radii=DENSITY_RADII,
                         r_degree: int = PIPELINE_R_DEGREE) -> PipelineReport:
    """Cut-off argument at a boundary point ``y`` of a free boundary varifold.

    For each ``(r, eps)`` evaluates the left side and the three terms of

        int eta' rho^(1-k) <= int eta div_S Y + int eta' rho^(1-k) |D_S^perp rho|^2
                               + int eta' rho^(1-k) h(rho),

    with ``eta = eta_{r,eps}(rho)``, ``rho = |x - y|`` and ``h`` the monotone
    envelope of ``|Y + D rho/rho^(k-1)| rho^(k-1)`` over the atoms.  Then
    extrapolates ``r -> 0`` (least-squares polynomial of degree ``r_degree``
    over ``r_schedule``; two radii with degree 1 is Richardson) and
    ``eps -> 0`` (linear fit) and
    returns the implied lower bound ``(2/k)(lhs - t2 - t3)`` for the mass,
    using ``int eta div_S Y <= (k/2) M``.
    """
    y = np.asarray(y, dtype=float)
    if abs(np.linalg.norm(y) - 1) > 1e-12:
        raise ValueError("y must lie on the unit sphere")
    k = V.k
    d = V.x - y
    rho = np.linalg.norm(d, axis=1)
    keep = rho > 0
    Vk = DiscreteVarifold(V.x[keep], V.frames[keep], V.w[keep], None, V.in_ball, V.name)
    d, rho = d[keep], rho[keep]
    dperp = _perp_sq(Vk, d) / rho**2
    div = brendle_divergence(y, k, Vk.x, Vk.frames)
    Y = brendle_Y(y, k, Vk.x)
    Dr = d / rho[:, None]
    tang = np.einsum("mia,ma->mi", Vk.frames, Dr)
    YS = np.einsum("mi,mia,ma->m", tang, Vk.frames, Y)  # <pi_S D rho, Y>
    h = _h_envelope(rho, np.linalg.norm(brendle_remainder(y, k, Vk.x), axis=1) * rho ** (k - 1))
    M = mass(V)
    theta = density(V, y, density_radii).density
    report = PipelineReport(y.tolist(), k, M, theta)

    r_sched = sorted((float(r) for r in r_schedule), reverse=True)
    for e in eps:
        rows = []
        for r in r_sched:
            cut = CutoffProfile(r, e)
            eta, deta = cut(rho), cut.derivative(rho)
            base = Vk.w * deta * rho ** (1 - k)
            row = PipelineTerms(
                r, e, float(np.sum(base)), float(np.sum(Vk.w * eta * div)),
                float(np.sum(base * dperp)), float(np.sum(base * h)),
                float(np.sum(Vk.w * (eta * div + deta * YS))))
            rows.append(row)
            report.terms.append(row)
        rr = [row.r for row in rows]
        report.lhs_limit[e] = extrapolate_to_zero(rr, [row.lhs for row in rows], r_degree)
        report.t2_limit[e] = extrapolate_to_zero(rr, [row.t2 for row in rows], r_degree)
        report.t3_limit[e] = extrapolate_to_zero(rr, [row.t3 for row in rows], r_degree)

    es = np.array(list(eps), dtype=float)

    def at_zero(values: dict) -> float:
        vals = np.array([values[e] for e in eps])
        return extrapolate_to_zero(es, vals, 1)

    report.lhs0 = at_zero(report.lhs_limit)
    report.t20 = at_zero(report.t2_limit)
    report.t30 = at_zero(report.t3_limit)
    report.mass_bound = (2.0 / k) * (report.lhs0 - report.t20 - report.t30)
    ak = alpha(k)
    report.density_bound = 2 * ak * theta
    report.final_inequality = (k / 2) * M - k * ak * theta
    return report


# ---------------------------------------------------------------------------
# excess at interior points


def excess(V, y, refine: int = 3) -> float:
    """``int |(x - y)^perp|^2/|x - y|^(k+2)`` over a varifold or a surface mesh.

    For a :class:`DiscreteVarifold` this is an atom sum (atoms at ``y`` are
    skipped).  Objects with ``vertices``, ``triangles`` and a per-vertex
    ``normals`` array are integrated with a centroid rule after ``refine``
    rounds of 1-to-4 subdivision of the triangles near ``y``.
    """
    y = np.asarray(y, dtype=float)
    if isinstance(V, DiscreteVarifold):
        d = V.x - y
        rho = np.linalg.norm(d, axis=1)
        ok = rho > 0
        return float(np.sum(V.w[ok] * _perp_sq(V, d)[ok] / rho[ok] ** (V.k + 2)))
    return _mesh_excess(V, y, refine)


def _mesh_excess(mesh, y, refine: int) -> float:
    P = np.asarray(mesh.vertices, dtype=float)
    N = np.asarray(mesh.normals, dtype=float)
    tris = [(P[t], N[t]) for t in np.asarray(mesh.triangles)]
    total = 0.0
    h = max(np.linalg.norm(p[1] - p[0]) for p, _ in tris[:50])
    for level in range(refine + 1):
        nxt = []
        for p, nv in tris:
            c = p.mean(axis=0)
            if level < refine and np.linalg.norm(c - y) < 3 * h * 0.5**level:
                m = (p[[0, 1, 2]] + p[[1, 2, 0]]) / 2
                mn = (nv[[0, 1, 2]] + nv[[1, 2, 0]]) / 2
                nxt += [(np.array([p[0], m[0], m[2]]), np.array([nv[0], mn[0], mn[2]])),
                        (np.array([m[0], p[1], m[1]]), np.array([mn[0], nv[1], mn[1]])),
                        (np.array([m[2], m[1], p[2]]), np.array([mn[2], mn[1], nv[2]])),
                        (m.copy(), mn.copy())]
                continue
            area = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
            nu = nv.mean(axis=0)
            nu /= np.linalg.norm(nu)
            dd = c - y
            r = np.linalg.norm(dd)
            if r > 0:
                total += area * (dd @ nu) ** 2 / r**4
        tris = nxt
        if not tris:
            break
    return total
