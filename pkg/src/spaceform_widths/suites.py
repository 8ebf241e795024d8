"""Verification suites run by the command-line tool.

Each suite returns a list of :class:`Check` records.  A check compares a
measured value with an expected value under a relation (``abs``: within
tolerance; ``ge``/``le``: one-sided with tolerance as allowance; ``true``:
boolean).  Checks with ``gate=False`` are diagnostics: they are reported but
never fail a run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

SUITES = ("widths", "comparison", "brendle", "varifold", "stability", "isoperimetric",
          "sweepout-1d")

DEFAULT_RESOLUTION = {
    "widths": 201,  # slice offsets per ball
    "comparison": 201,  # comparison-map grid
    "brendle": 100_000,  # samples per (n, k)
    "varifold": 200,  # disk fixture N
    "stability": 16,  # disk rings
    "isoperimetric": 32,  # disk rings
    "sweepout-1d": 1000,  # tightening steps
}


@dataclass
class RunConfig:
    suite: str = "widths"
    seed: int = 42
    out: str = "reports"
    resolution: int | None = None
    gamma: float = 1.0
    tolerance_scale: float = 1.0
    jobs: int = 1

    def validate(self) -> None:
        suites = [s.strip() for s in self.suite.split(",")]
        for s in suites:
            if s != "all" and s not in SUITES:
                raise ValueError(f"unknown suite {s!r}")
        if not self.tolerance_scale > 0:
            raise ValueError("tolerance-scale must be positive")
        if self.resolution is not None and self.resolution < 1:
            raise ValueError("resolution must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")

    def suites(self) -> list[str]:
        names = [s.strip() for s in self.suite.split(",")]
        return list(SUITES) if "all" in names else names

    def res(self, suite: str) -> int:
        return DEFAULT_RESOLUTION[suite] if self.resolution is None else self.resolution


@dataclass
class Check:
    name: str
    measured: float
    expected: float
    tolerance: float
    relation: str
    provenance: str
    anchor: str
    gate: bool = True
    status: str = field(init=False)

    def __post_init__(self):
        m, e, t = float(self.measured), float(self.expected), float(self.tolerance)
        self.measured, self.expected, self.tolerance = m, e, t
        if self.relation == "abs":
            ok = abs(m - e) <= t
        elif self.relation == "ge":
            ok = m >= e - t
        elif self.relation == "le":
            ok = m <= e + t
        elif self.relation == "gt":
            ok = m > e
        elif self.relation == "lt":
            ok = m < e
        elif self.relation == "true":
            ok = bool(m) == bool(e)
        else:
            raise ValueError(f"unknown relation {self.relation!r}")
        ok = ok and math.isfinite(m)
        self.status = ("pass" if ok else "fail") if self.gate else ("info-pass" if ok else "info-fail")

    @property
    def failed(self) -> bool:
        return self.status == "fail"

    def to_dict(self) -> dict:
        return asdict(self)


def _check(checks: list, name, measured, expected, tol, relation, provenance, anchor, gate=True):
    checks.append(Check(name, measured, expected, tol, relation, provenance, anchor, gate))


# ---------------------------------------------------------------------------


def width_balls(seed: int) -> list:
    """Twelve balls: four fixed edge cases and eight random ones."""
    from .spaceform import SpaceFormBall, max_radius

    balls = [SpaceFormBall(3, 2, math.pi / 2, 1.0), SpaceFormBall(4, 3, math.pi / (2 * math.sqrt(2.0)), 2.0),
             SpaceFormBall(2, 1, 1.0, 0.0), SpaceFormBall(5, 2, 1.5, -1.0)]
    rng = np.random.default_rng(seed)
    while len(balls) < 12:
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n))
        K = float(rng.choice([-2.0, -1.0, -0.25, 0.0, 0.5, 1.0, 3.0]))
        Rmax = max_radius(K) if K > 0 else 3.0
        R = float(rng.uniform(0.1, 1.0) * Rmax)
        balls.append(SpaceFormBall(n, k, R, K))
    return balls


def suite_widths(cfg: RunConfig) -> list[Check]:
    from .spaceform import WarpedProfile, ball_area, beta
    from .sweepout import equatorial_family

    checks: list[Check] = []
    ts = cfg.tolerance_scale
    m = 2 * (cfg.res("widths") // 2) + 1  # odd, so the centre slice is sampled
    anchor = "width upper bound: equatorial slice"
    for ball in width_balls(cfg.seed):
        fam = equatorial_family(ball, np.linspace(-ball.R, ball.R, m))
        target = ball_area(ball.k, WarpedProfile.space_form(ball.K, ball.R))
        tag = f"n={ball.n} k={ball.k} R={ball.R:.6g} K={ball.K:g}"
        _check(checks, f"max slice area [{tag}]", fam.max_area, target, 1e-10 * ts, "abs",
               "same-code-path", anchor)
        # slices tie in a hemisphere, so compare values rather than the argmax
        centre = float(fam.area[len(fam.t) // 2])
        _check(checks, f"centre slice is maximal [{tag}]", fam.max_area - centre, 0.0, 1e-10 * ts,
               "le", "same-code-path", anchor)
    for k in (1, 2, 3, 4):
        _check(checks, f"hemisphere identity [k={k}]",
               ball_area(k, WarpedProfile.space_form(1.0, math.pi / 2)), beta(k) / 2, 1e-8 * ts,
               "abs", "closed-form", "hemisphere: half the unit k-sphere")
    return checks


def suite_comparison(cfg: RunConfig) -> list[Check]:
    from .comparison import comparison_case, solve_f, verify_contraction
    from .spaceform import max_radius

    checks: list[Check] = []
    ts = cfg.tolerance_scale
    for case in (1, 2, 3):
        for k in (1, 2, 3):
            c = comparison_case(case, k)
            fmap = solve_f(k, c.K, c.K1, c.R0, n_grid=cfg.res("comparison"))
            h0, h1 = c.profiles()
            rep = verify_contraction(h0, h1, fmap, tol=1e-8 * ts)
            tag = f"case {case}, k={k}"
            anchor = "comparison map: radial contraction of k-areas"
            _check(checks, f"ODE residual [{tag}]", fmap.identity_residual(), 0.0, 1e-8 * ts, "le",
                   "integrator", anchor)
            _check(checks, f"area-density identity [{tag}]", rep.max_violation_cond1, 0.0,
                   1e-8 * ts, "le", "integrator", anchor)
            _check(checks, f"profile domination [{tag}]", rep.max_violation_cond2, 0.0, 1e-10 * ts,
                   "le", "integrator", anchor)
            _check(checks, f"f' >= 1 [{tag}]", rep.fprime_violation, 0.0, 0.0, "le", "integrator",
                   anchor)
            _check(checks, f"endpoint f(R0) [{tag}]", fmap.R1, max_radius(c.K1), 1e-7 * ts, "abs",
                   "integrator", anchor)
            _check(checks, f"substitution area identity [{tag}]", rep.area_identity_residual, 0.0,
                   1e-8 * ts, "le", "quadrature", anchor)
    return checks


def suite_brendle(cfg: RunConfig) -> list[Check]:
    from .brendle import check_lemma_properties, lemma_samples, tangency_defect

    checks: list[Check] = []
    ts = cfg.tolerance_scale
    m = cfg.res("brendle")
    for n in (3, 4):
        y = np.zeros(n)
        y[0] = 1.0
        for k in (1, 2, 3):
            rng = np.random.default_rng([cfg.seed, n, k])
            x, frames = lemma_samples(rng, y, k, m)
            rep = check_lemma_properties(y, k, x, frames)
            tag = f"n={n} k={k}"
            _check(checks, f"divergence inequality [{tag}]", rep.min_slack, 0.0, 1e-8 * ts, "ge",
                   "sampled", "boundary field: divergence bound")
            _check(checks, f"tangency on sphere [{tag}]",
                   tangency_defect(y, k, samples=200, seed=cfg.seed), 0.0, 1e-9 * ts, "le",
                   "sampled", "boundary field: tangent to the sphere")
            _check(checks, f"decay e(0.01)/e(1) [{tag}]", rep.decay_ratio, 0.05, 0.0, "le",
                   "sampled", "boundary field: remainder decay")
            e = rep.decay
            _check(checks, f"decay table ordered [{tag}]", e[2.0] >= e[1.0] >= e[0.1], True, 0, "true",
                   "sampled", "boundary field: remainder decay")
            _check(checks, f"jacobian trace agrees [{tag}]", rep.jacobian_mismatch, 0.0, 1e-8 * ts,
                   "le", "analytic-jacobian", "plumbing")
    return checks


def suite_varifold(cfg: RunConfig) -> list[Check]:
    from .estimates import density, excess, fb_estimate_pipeline, monotonicity_check
    from .spaceform import alpha
    from .varifold import first_variation, mass, support_in_hull, tangent_test_basis
    from .varifold_fixtures import (catenoid_boundary_point, critical_catenoid,
                                    critical_catenoid_parameters, doubled_disk, equatorial_disk,
                                    offcenter_disk, planar_disk, tilted_disk)

    checks: list[Check] = []
    ts = cfg.tolerance_scale
    N = cfg.res("varifold")
    basis = tangent_test_basis(3)
    a2 = alpha(2)
    V = equatorial_disk(N)
    y = np.array([1.0, 0.0, 0.0])
    _check(checks, "equatorial disk mass", mass(V), math.pi, 3.0 / N * ts, "abs", "closed-form",
           "mass of the flat unit disk")
    fv = max(abs(first_variation(V, X)) for X in basis)
    _check(checks, "equatorial disk stationarity", fv, 0.0, 1.0 / N * ts, "le", "quadrature",
           "free boundary stationarity: tangent test basis")
    fo = max(abs(first_variation(offcenter_disk(N), X)) for X in basis)
    _check(checks, "off-centre disk is not stationary", fo, 0.1, 0.0, "gt", "closed-form",
           "free boundary stationarity: tangent test basis")
    _check(checks, "boundary density", density(V, y).density, 0.5, 0.05 * ts, "abs", "closed-form",
           "density at a boundary point")
    _check(checks, "interior density", density(V, [0.2, 0.1, 0.0]).density, 1.0, 0.05 * ts, "abs",
           "closed-form", "density at an interior point")
    _check(checks, "support in hull", support_in_hull(V, seed=cfg.seed), 0.0, 1e-12, "le",
           "sampled", "convex hull of the boundary trace")

    rep = fb_estimate_pipeline(V, y)
    _check(checks, "disk: pipeline mass bound", rep.mass_bound, a2, 0.02 * a2 * ts, "ge",
           "extrapolated", "boundary area bound: flat equality case")
    _check(checks, "disk: pipeline bound below mass", rep.slack, 0.0, 0.02 * a2 * ts, "ge",
           "extrapolated", "boundary area bound: flat equality case")
    rep2 = fb_estimate_pipeline(doubled_disk(N), y)
    _check(checks, "doubled disk: pipeline mass bound", rep2.mass_bound, 2 * a2, 0.04 * a2 * ts,
           "ge", "extrapolated", "boundary area bound: multiplicity two")
    Nc = max(16, (N * 128) // 200)
    C = critical_catenoid(Nc)
    yc = catenoid_boundary_point()
    rep3 = fb_estimate_pipeline(C, yc)
    _check(checks, "catenoid: strict slack", rep3.slack, 0.1, 0.0, "gt", "extrapolated",
           "boundary area bound: non-flat fixture")
    _check(checks, "catenoid: mass exceeds pi", mass(C), a2, 0.0, "gt", "closed-form",
           "boundary area bound: non-flat fixture")

    g = cfg.gamma
    t_grid = np.linspace(0.1, 1.0, 10)
    for label, W, yy, sf in (("flat disk", V, y, 1.0),
                             ("tilted disk", tilted_disk(N, 1.0, 0.0), None, 1.0),
                             ("catenoid", C, yc, 2.0)):
        if yy is None:
            yy = np.array([0.0, 0.0, 1.0])
            t_grid_ = np.linspace(0.2, 1.0, 17)
        else:
            t_grid_ = t_grid
        plain = monotonicity_check(W, yy, t_grid_, gamma=g, weighted=False, slack_factor=sf)
        wtd = monotonicity_check(W, yy, t_grid_, gamma=g, weighted=True, slack_factor=sf)
        _check(checks, f"{label}: weighted monotonicity (gamma={g:g})", min(wtd.margin), 0.0, 0.0,
               "ge", "sampled", "boundary monotonicity, exponentially weighted ratio")
        _check(checks, f"{label}: plain ratio monotonicity", min(plain.margin), 0.0, 0.0, "ge",
               "sampled", "boundary monotonicity, unweighted ratio", gate=False)

    p = critical_catenoid_parameters()
    yn = np.array([p.a, 0.0, 0.0])
    ex = excess(C, yn)
    _check(checks, "catenoid neck excess positive", ex, 0.0, 0.0, "gt", "quadrature",
           "excess at an interior point")
    _check(checks, "catenoid neck excess bound", ex, mass(C) - a2, 0.0, "le", "quadrature",
           "excess at an interior point")
    flat = planar_disk(N)
    _check(checks, "flat disk excess", excess(flat, np.array([0.1, 0.2, 0.0])), 0.0, 1e-8 * ts,
           "abs", "closed-form", "excess at an interior point")
    return checks


def suite_stability(cfg: RunConfig) -> list[Check]:
    from .stability import (assemble, catenoid_mesh, certificate_field, check_minimality,
                            equatorial_mesh, hemisphere_mesh, hyperbolic_disk_mesh, robin_eigen)

    checks: list[Check] = []
    ts = cfg.tolerance_scale
    rings = cfg.res("stability")
    cases = (("euclidean disk", equatorial_mesh(rings), -2 * math.pi, 0.02),
             ("hemisphere disk", hemisphere_mesh(rings), -4 * math.pi, 0.05),
             ("hyperbolic disk", hyperbolic_disk_mesh(rings), -2 * math.pi * math.cosh(1.0), 0.05))
    anchor = "instability certificate"
    for label, mesh, target, tol in cases:
        mesh.validate()
        check_minimality(mesh)
        data = robin_eigen(mesh, data=assemble(mesh))
        _check(checks, f"{label}: Q(phi, phi)", data.form(certificate_field(mesh)), target,
               tol * ts, "abs", "closed-form", anchor)
        _check(checks, f"{label}: lambda_1 < 0", data.lam1, 0.0, 0.0, "lt", "eigensolver", anchor)
        _check(checks, f"{label}: spectral gap", data.gap, 0.0, 0.0, "gt", "eigensolver",
               "simple lowest eigenvalue")
        _check(checks, f"{label}: phi_1 > 0 inside", data.phi1[mesh.interior_mask].min(), 0.0, 0.0,
               "gt", "eigensolver", "positive first eigenfunction")
    cat = catenoid_mesh(64)
    cat.validate()
    _check(checks, "catenoid N=64: minimality residual", check_minimality(cat, math.inf), 0.0,
           1e-3 * ts, "le", "discrete-geometry", "plumbing")
    cat = catenoid_mesh(max(8, rings * 2))
    data = robin_eigen(cat)
    _check(checks, "catenoid: Q(1, 1) < 0", data.form(certificate_field(cat)), 0.0, 0.0, "lt",
           "finite-element", anchor)
    _check(checks, "catenoid: lambda_1 < 0", data.lam1, 0.0, 0.0, "lt", "eigensolver", anchor)
    return checks


def suite_isoperimetric(cfg: RunConfig) -> list[Check]:
    from .stability import (hess_identity_check, hyperbolic_disk_mesh, hyperbolic_samples,
                            iso_check, iso_closed_form)

    checks: list[Check] = []
    ts = cfg.tolerance_scale
    rep = iso_check(hyperbolic_disk_mesh(cfg.res("isoperimetric")))
    anchor = "hyperbolic isoperimetric calibration"
    _check(checks, "div Phi min", rep.div_min, 1.0, 1e-6 * ts, "abs", "closed-form", anchor)
    _check(checks, "div Phi max", rep.div_max, 1.0, 1e-6 * ts, "abs", "closed-form", anchor)
    _check(checks, "area", rep.area, 2 * math.pi * (math.cosh(1) - 1), 1e-3 * rep.area * ts, "abs",
           "closed-form", anchor)
    _check(checks, "boundary length", rep.boundary, 2 * math.pi * math.sinh(1),
           1e-3 * rep.boundary * ts, "abs", "closed-form", anchor)
    _check(checks, "divergence identity equality", rep.iso1_slack, 0.0, 1e-3 * ts, "abs",
           "finite-element", anchor)
    _check(checks, "ratio at equality", rep.ratio_rel, 0.0, 5e-3 * ts, "abs", "finite-element",
           anchor)
    for n in (3, 4, 5, 6):
        cf = iso_closed_form(n, 1.0)
        _check(checks, f"closed-form ratio n={n}", cf["ratio_rel"], 0.0, 1e-10 * ts, "abs",
               "quadrature", anchor)
    P = hyperbolic_samples(np.random.default_rng(cfg.seed), 1000)
    _check(checks, "Hess cosh r = cosh r g", hess_identity_check(P, seed=cfg.seed), 0.0,
           1e-6 * ts, "le", "finite-difference", "hyperbolic Hessian identity")
    return checks


def suite_sweepout(cfg: RunConfig) -> list[Check]:
    from .spaceform import SpaceFormBall
    from .sweepout import arc_family, tighten_1sweepout

    checks: list[Check] = []
    ts = cfg.tolerance_scale
    for K in (-1.0, 0.0, 0.5):
        res = tighten_1sweepout(SpaceFormBall(2, 1, 1.0, K), arc_family(K, 1.0),
                                steps=cfg.res("sweepout-1d"))
        anchor = "one-dimensional width of a geodesic disk"
        _check(checks, f"K={K:g}: max length -> 2R", res.trace[-1], 2.0, 0.02 * ts, "abs",
               "min-max surrogate", anchor)
        _check(checks, f"K={K:g}: monotone trace", float(np.max(np.diff(res.trace))), 0.0, 0.0,
               "le", "min-max surrogate", anchor)
        _check(checks, f"K={K:g}: still a sweepout", res.covering_ok, True, 0, "true",
               "min-max surrogate", "plumbing")
    return checks


SUITE_FUNCTIONS = {
    "widths": suite_widths,
    "comparison": suite_comparison,
    "brendle": suite_brendle,
    "varifold": suite_varifold,
    "stability": suite_stability,
    "isoperimetric": suite_isoperimetric,
    "sweepout-1d": suite_sweepout,
}
