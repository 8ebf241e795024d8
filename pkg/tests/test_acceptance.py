"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test appends one PASS/FAIL line to the summary printed at the end of
the pytest run (see ``conftest.py``).
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from spaceform_widths.brendle import check_lemma_properties, lemma_samples, tangency_defect
from spaceform_widths.comparison import comparison_case, solve_f, verify_contraction
from spaceform_widths.estimates import density, fb_estimate_pipeline
from spaceform_widths.spaceform import SpaceFormBall, WarpedProfile, alpha, ball_area, beta, max_radius
from spaceform_widths.stability import (assemble, certificate_field, check_minimality,
                                        equatorial_mesh, hemisphere_mesh, hess_identity_check,
                                        hyperbolic_disk_mesh, hyperbolic_samples, iso_check,
                                        robin_eigen)
from spaceform_widths.suites import width_balls
from spaceform_widths.sweepout import arc_family, equatorial_family, tighten_1sweepout
from spaceform_widths.varifold import first_variation, tangent_test_basis
from spaceform_widths.varifold_fixtures import (catenoid_boundary_point, critical_catenoid,
                                                doubled_disk, equatorial_disk, offcenter_disk)


def _record(name, checks, elapsed, budget):
    """Log one summary line and fail with every violated item listed."""
    checks = list(checks) + [(f"runtime {elapsed:.2f}s < {budget:g}s", elapsed < budget)]
    bad = [label for label, ok in checks if not ok]
    ok = not bad
    detail = "; ".join(label for label, _ in checks) if ok else "violated: " + "; ".join(bad)
    ACCEPTANCE_LINES.append((name, ok, detail))
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def test_criterion_1_width_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for ball in width_balls(42):
        fam = equatorial_family(ball, np.linspace(-ball.R, ball.R, 201))
        target = ball_area(ball.k, WarpedProfile.space_form(ball.K, ball.R))
        worst = max(worst, abs(fam.max_area - target))
    hemi = max(abs(ball_area(k, WarpedProfile.space_form(1.0, math.pi / 2)) - beta(k) / 2)
               for k in (1, 2, 3, 4))
    elapsed = time.perf_counter() - t0
    has_cap = any(b.K > 0 and abs(b.R - max_radius(b.K)) < 1e-12 for b in width_balls(42))
    _record("1 width identity", [
        (f"12 balls, max |slice - ball_area| = {worst:.1e} <= 1e-10", worst <= 1e-10),
        (f"hemisphere |area - beta_k/2| = {hemi:.1e} <= 1e-8", hemi <= 1e-8),
        ("sample includes R = pi/(2 sqrt K)", has_cap),
    ], elapsed, 1.0)


def test_criterion_2_comparison():
    t0 = time.perf_counter()
    res = ident = endp = 0.0
    fprime = True
    for case in (1, 2, 3):
        for k in (1, 2, 3):
            c = comparison_case(case, k)
            fmap = solve_f(k, c.K, c.K1, c.R0)
            rep = verify_contraction(*c.profiles(), fmap)
            res = max(res, fmap.identity_residual(), rep.max_violation_cond1)
            fprime = fprime and bool(np.all(fmap.derivative(np.linspace(0, c.R0, 401)) >= 1 - 1e-12))
            endp = max(endp, abs(fmap.R1 - max_radius(c.K1)))
            ident = max(ident, rep.area_identity_residual)
    elapsed = time.perf_counter() - t0
    _record("2 comparison machinery", [
        (f"ODE residual {res:.1e} <= 1e-8", res <= 1e-8),
        ("f' >= 1 - 1e-12", fprime),
        (f"endpoint error {endp:.1e} <= 1e-7", endp <= 1e-7),
        (f"substitution identity {ident:.1e} <= 1e-8", ident <= 1e-8),
    ], elapsed, 10.0)


def test_criterion_3_one_dimensional_minmax():
    t0 = time.perf_counter()
    checks = []
    for K in (-1.0, 0.0, 0.5):
        res = tighten_1sweepout(SpaceFormBall(2, 1, 1.0, K), arc_family(K, 1.0), steps=1000)
        final = res.trace[-1]
        monotone = bool(np.all(np.diff(res.trace) <= 1e-12))
        checks.append((f"K={K:g}: max length {final:.5f} within 1% of 2",
                       abs(final - 2.0) <= 0.02))
        checks.append((f"K={K:g}: trace monotone", monotone))
        checks.append((f"K={K:g}: covering kept", res.covering_ok))
    _record("3 one-dimensional min-max", checks, time.perf_counter() - t0, 120.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_criterion_4_boundary_field(k):
    t0 = time.perf_counter()
    checks = []
    for n in (3, 4):
        y = np.zeros(n)
        y[0] = 1.0
        x, frames = lemma_samples(np.random.default_rng([42, n, k]), y, k, 100_000)
        rep = check_lemma_properties(y, k, x, frames)
        tang = tangency_defect(y, k, samples=200, seed=42)
        checks += [
            (f"n={n}: min slack {rep.min_slack:.2e} >= -1e-8", rep.min_slack >= -1e-8),
            (f"n={n}: tangency {tang:.1e} <= 1e-9", tang <= 1e-9),
            (f"n={n}: e(0.01)/e(1) = {rep.decay_ratio:.2e} <= 0.05", rep.decay_ratio <= 0.05),
        ]
    _record(f"4 boundary field (k={k})", checks, time.perf_counter() - t0, 60.0)


def test_criterion_5_boundary_area_bound():
    t0 = time.perf_counter()
    a2 = alpha(2)
    y = np.array([1.0, 0.0, 0.0])
    slack = {}
    bound = {}
    for N in (50, 100, 200):
        rep = fb_estimate_pipeline(equatorial_disk(N), y)
        slack[N], bound[N] = rep.slack, rep.mass_bound
    theta = density(equatorial_disk(200), y).density
    dbl = fb_estimate_pipeline(doubled_disk(200), y)
    cat = fb_estimate_pipeline(critical_catenoid(128), catenoid_boundary_point())
    decreasing = abs(slack[200]) <= abs(slack[100]) <= abs(slack[50])
    _record("5 boundary area bound", [
        (f"Theta(y) = {theta:.4f} within 0.05 of 1/2", abs(theta - 0.5) <= 0.05),
        (f"disk N=200 bound {bound[200] / a2:.4f} alpha >= 0.98 alpha", bound[200] >= 0.98 * a2),
        ("|slack| decreasing over N=50,100,200: "
         + ", ".join(f"{slack[N]:.3f}" for N in (50, 100, 200)), decreasing),
        (f"doubled disk bound {dbl.mass_bound / a2:.4f} alpha >= 2 alpha - 0.04 alpha",
         dbl.mass_bound >= 2 * a2 - 0.04 * a2),
        (f"catenoid slack {cat.slack:.3f} > 0.1", cat.slack > 0.1),
    ], time.perf_counter() - t0, 300.0)


def test_criterion_6_stationarity():
    t0 = time.perf_counter()
    basis = tangent_test_basis(3)
    checks = []
    for N in (50, 100, 200):
        fv = max(abs(first_variation(equatorial_disk(N), X)) for X in basis)
        checks.append((f"N={N}: max |dV(X)| = {fv:.1e} <= 1/N", fv <= 1.0 / N))
    fo = max(abs(first_variation(offcenter_disk(200), X)) for X in basis)
    checks.append((f"off-centre max |dV(X)| = {fo:.3f} > 0.1", fo > 0.1))
    _record("6 stationarity oracle", checks, time.perf_counter() - t0, 30.0)


def test_criterion_7_stability():
    t0 = time.perf_counter()
    cases = (("euclidean", equatorial_mesh(16), -2 * math.pi, 0.02),
             ("hemisphere", hemisphere_mesh(16), -4 * math.pi, 0.05),
             ("hyperbolic", hyperbolic_disk_mesh(16), -2 * math.pi * math.cosh(1.0), 0.05))
    checks = []
    for label, mesh, target, tol in cases:
        mesh.validate()
        check_minimality(mesh)
        data = robin_eigen(mesh, data=assemble(mesh))
        q = data.form(certificate_field(mesh))
        checks += [
            (f"{label}: Q = {q:.4f} vs {target:.4f} +- {tol}", abs(q - target) <= tol),
            (f"{label}: lambda1 = {data.lam1:.4f} < 0", data.lam1 < 0),
            (f"{label}: gap {data.gap:.3f} > 0", data.gap > 0),
        ]
    _record("7 stability certificates", checks, time.perf_counter() - t0, 120.0)


def test_criterion_8_isoperimetric():
    t0 = time.perf_counter()
    rep = iso_check(hyperbolic_disk_mesh(32))
    div_err = max(abs(rep.div_min - 1), abs(rep.div_max - 1))
    _record("8 isoperimetric calibration", [
        (f"max |div Phi - 1| = {div_err:.1e} <= 1e-6", div_err <= 1e-6),
        (f"divergence identity slack {rep.iso1_slack:.1e} within 1e-3", abs(rep.iso1_slack) <= 1e-3),
        (f"ratio relative error {rep.ratio_rel:.1e} within 0.5%", abs(rep.ratio_rel) <= 5e-3),
    ], time.perf_counter() - t0, 30.0)


def test_criterion_9_hessian_identity():
    t0 = time.perf_counter()
    worst = hess_identity_check(hyperbolic_samples(np.random.default_rng(42), 1000), seed=42)
    _record("9 Hessian identity", [
        (f"max residual {worst:.1e} <= 1e-6 over 1000 samples", worst <= 1e-6),
    ], time.perf_counter() - t0, 10.0)
