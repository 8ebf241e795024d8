"""Explicit sweepouts of space-form balls and a 1-parameter min-max surrogate.

The upper bound for the width comes from slicing the ball by totally geodesic
``k``-planes orthogonal to a fixed geodesic; its largest slice is the
equatorial ball.  For ``k = 1``, ``n = 2`` we also tighten families of
polylines in the geodesic disk by discrete free-boundary curve shortening and
watch the largest length settle at the diameter ``2R``.

Disks are handled in a projective chart centred at the ball's centre
(gnomonic for ``K > 0``, Beltrami-Klein for ``K < 0``, identity for ``K = 0``).
In these charts geodesics are straight lines and the geodesic disk is a round
Euclidean disk, so a polyline with chart-straight edges is a broken geodesic
and its length is computed exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .spaceform import SpaceFormBall, WarpedProfile, ball_area, slice_radius, sn


@dataclass(frozen=True)
class SliceFamily:
    ball: SpaceFormBall
    t: np.ndarray
    radius: np.ndarray
    area: np.ndarray

    @property
    def max_area(self) -> float:
        return float(np.max(self.area))

    @property
    def argmax(self) -> float:
        return float(self.t[int(np.argmax(self.area))])


def equatorial_family(ball: SpaceFormBall, t=None) -> SliceFamily:
    """Slices of ``ball`` by totally geodesic ``k``-planes at signed offset ``t``."""
    if t is None:
        t = np.linspace(-ball.R, ball.R, 201)
    t = np.asarray(t, dtype=float)
    radius = np.array([slice_radius(ball.R, ball.K, ti) for ti in t])
    area = np.array([
        ball_area(ball.k, WarpedProfile.space_form(ball.K, rho)) if rho > 0 else 0.0
        for rho in radius
    ])
    return SliceFamily(ball, t, radius, area)


def width_upper_bound(ball: SpaceFormBall) -> float:
    """Largest slice area of the equatorial sweepout, an upper bound for the ``k``-width."""
    return equatorial_family(ball, np.array([-ball.R, 0.0, ball.R])).max_area


# ---------------------------------------------------------------------------
# disk chart


@dataclass(frozen=True)
class DiskChart:
    """Projective chart of the geodesic disk ``B^2_{R;K}``."""

    K: float
    R: float

    def __post_init__(self):
        if self.K > 0 and self.R * math.sqrt(self.K) >= math.pi / 2 - 1e-6:
            raise ValueError("the gnomonic chart cannot hold a hemisphere; need R sqrt(K) < pi/2")

    @property
    def radius(self) -> float:
        """Euclidean radius of the disk in the chart."""
        if self.K > 0:
            s = math.sqrt(self.K)
            return math.tan(self.R * s) / s
        if self.K < 0:
            s = math.sqrt(-self.K)
            return math.tanh(self.R * s) / s
        return self.R

    def _embed(self, u):
        # points on the model quadric, scaled so that distances are d*sqrt|K|
        s = math.sqrt(abs(self.K))
        q = 1.0 + self.K * np.sum(u * u, axis=-1)
        return np.concatenate([np.ones(u.shape[:-1] + (1,)), s * u], axis=-1) / np.sqrt(q)[..., None]

    def distance(self, u, v):
        """Geodesic distance between chart points (broadcasting over leading axes)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.K == 0:
            return np.linalg.norm(u - v, axis=-1)
        s = math.sqrt(abs(self.K))
        d = self._embed(u) - self._embed(v)
        if self.K > 0:
            chord = np.linalg.norm(d, axis=-1)
            return 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0)) / s
        mink = np.sum(d[..., 1:] ** 2, axis=-1) - d[..., 0] ** 2
        return 2.0 * np.arcsinh(np.sqrt(np.maximum(mink, 0.0)) / 2.0) / s

    def distance_grad(self, u, v):
        """Gradients of ``distance(u, v)`` with respect to ``u`` and ``v``.

        With ``A = 1 + K u.v``, ``B = 1 + K|u|^2``, ``C = 1 + K|v|^2`` one has
        ``dd/du = (A u/B - v)/(sqrt(BC) sn_K(d))`` and symmetrically for ``v``.
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        d = self.distance(u, v)
        A = 1.0 + self.K * np.sum(u * v, axis=-1)
        B = 1.0 + self.K * np.sum(u * u, axis=-1)
        C = 1.0 + self.K * np.sum(v * v, axis=-1)
        denom = np.sqrt(B * C) * sn(self.K, d)
        safe = denom > 0
        denom = np.where(safe, denom, 1.0)
        gu = ((A / B)[..., None] * u - v) / denom[..., None]
        gv = ((A / C)[..., None] * v - u) / denom[..., None]
        gu = np.where(safe[..., None], gu, 0.0)
        gv = np.where(safe[..., None], gv, 0.0)
        return gu, gv

    def polyline_lengths(self, curves):
        return np.sum(self.distance(curves[..., :-1, :], curves[..., 1:, :]), axis=-1)


# ---------------------------------------------------------------------------
# polyline families


@dataclass
class PolylineSweepout:
    """Discretised 1-parameter family of polylines in the chart of a geodesic disk."""

    chart: DiskChart
    s: np.ndarray
    curves: np.ndarray  # (n_curves, n_vertices, 2) chart coordinates
    meta: dict = field(default_factory=dict)

    @property
    def lengths(self) -> np.ndarray:
        return self.chart.polyline_lengths(self.curves)

    @property
    def max_length(self) -> float:
        return float(np.max(self.lengths))

    def endpoint_error(self) -> float:
        ends = self.curves[:, [0, -1], :]
        return float(np.max(np.abs(np.linalg.norm(ends, axis=-1) - self.chart.radius)))

    def copy(self) -> "PolylineSweepout":
        return PolylineSweepout(self.chart, self.s.copy(), self.curves.copy(), dict(self.meta))

    def to_csv(self, path) -> None:
        lengths = self.lengths
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "vertices", "length"])
            for si, curve, L in zip(self.s, self.curves, lengths):
                verts = ";".join(f"{float(x)!r} {float(y)!r}" for x, y in curve)
                w.writerow([repr(float(si)), verts, repr(float(L))])

    @classmethod
    def from_csv(cls, path, chart: DiskChart) -> "PolylineSweepout":
        s, curves = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                s.append(float(row["s"]))
                curves.append([[float(c) for c in p.split()] for p in row["vertices"].split(";")])
        return cls(chart, np.array(s), np.array(curves))


def _chord_endpoints(rho: float, c):
    h = np.sqrt(np.maximum(rho**2 - c**2, 0.0))
    return h


def chord_family(K: float, R: float, n_curves: int = 31, n_vertices: int = 25) -> PolylineSweepout:
    """Parallel geodesic chords ``x = c`` of the disk; the middle one is a diameter."""
    chart = DiskChart(K, R)
    rho = chart.radius
    s = np.linspace(0.0, 1.0, n_curves)
    c = rho * (2 * s - 1)
    h = _chord_endpoints(rho, c)
    tau = np.linspace(-1.0, 1.0, n_vertices)
    curves = np.stack([np.broadcast_to(c[:, None], (n_curves, n_vertices)),
                       h[:, None] * tau[None, :]], axis=-1).copy()
    return PolylineSweepout(chart, s, curves, {"kind": "chords"})


def _arc_curves(rho, c, sag, n_vertices):
    h = _chord_endpoints(rho, c)
    out = np.empty((len(c), n_vertices, 2))
    tau = np.linspace(-1.0, 1.0, n_vertices)
    for i, (ci, hi, si) in enumerate(zip(c, h, sag)):
        if hi == 0.0 or si <= 1e-12 * rho:
            out[i, :, 0] = ci
            out[i, :, 1] = hi * tau
            continue
        ra = (hi**2 + si**2) / (2 * si)
        phi0 = math.atan2(hi, ra - si)
        phi = phi0 * tau
        out[i, :, 0] = ci + si - ra + ra * np.cos(phi)
        out[i, :, 1] = ra * np.sin(phi)
        out[i, [0, -1], 0] = ci
        out[i, 0, 1], out[i, -1, 1] = -hi, hi
    return out


def arc_family(K: float, R: float, max_length: float | None = 2.4,
               n_curves: int = 31, n_vertices: int = 25, sagitta: float | None = None) -> PolylineSweepout:
    """Circular arcs over the chords ``x = c``, all bulging towards ``+x``.

    The sagitta over the chord at ``c`` is ``sagitta * (1 - c/rho) sqrt(1 - (c/rho)^2) * rho``,
    which keeps every arc inside the disk.  If ``sagitta`` is omitted it is
    chosen so that the longest curve has length ``max_length``.
    """
    chart = DiskChart(K, R)
    rho = chart.radius
    s = np.linspace(0.0, 1.0, n_curves)
    c = rho * (2 * s - 1)
    shape = (1 - c / rho) * np.sqrt(np.maximum(1 - (c / rho) ** 2, 0.0)) * rho

    def build(a):
        return _arc_curves(rho, c, a * shape, n_vertices)

    if sagitta is None:
        base = chart.polyline_lengths(build(0.0)).max()
        if max_length <= base:
            raise ValueError(f"requested max length {max_length} is below the chord maximum {base}")
        sagitta = optimize.brentq(lambda a: chart.polyline_lengths(build(a)).max() - max_length,
                                  1e-6, 0.999, xtol=1e-12)
    curves = build(sagitta)
    if np.any(np.linalg.norm(curves, axis=-1) > rho * (1 + 1e-12)):
        raise ValueError("arc family leaves the disk")
    return PolylineSweepout(chart, s, curves, {"kind": "arcs", "sagitta": sagitta})


def perturbed_chord_family(K: float, R: float, amplitude: float = 0.15, n_curves: int = 31,
                           n_vertices: int = 25, seed: int = 0) -> PolylineSweepout:
    """Chords ``x = c`` displaced by a smooth random two-mode profile vanishing at the ends."""
    fam = chord_family(K, R, n_curves, n_vertices)
    rho = fam.chart.radius
    rng = np.random.default_rng(seed)
    a1, a2 = rng.uniform(0.5, 1.0), rng.uniform(-0.5, 0.5)
    tau = np.linspace(0.0, 1.0, n_vertices)
    bump = a1 * np.sin(np.pi * tau) + a2 * np.sin(2 * np.pi * tau)
    c = fam.curves[:, 0, 0]
    weight = amplitude * rho * (1 - (c / rho) ** 2)
    curves = fam.curves.copy()
    curves[:, :, 0] += weight[:, None] * bump[None, :]
    # pull any vertex that left the disk back onto it
    r = np.linalg.norm(curves, axis=-1)
    over = r > rho
    curves[over] *= (rho / r[over])[:, None]
    return PolylineSweepout(fam.chart, fam.s, curves, {"kind": "perturbed-chords", "amplitude": amplitude})


# ---------------------------------------------------------------------------
# covering surrogate for the sweepout condition


def covered_cells(family: PolylineSweepout, n_radial: int = 8, n_angular: int = 8) -> np.ndarray:
    """Boolean ``(n_radial, n_angular)`` array of polar chart cells hit by some curve."""
    rho = family.chart.radius
    cell = rho / n_radial
    a = family.curves[:, :-1, :].reshape(-1, 2)
    b = family.curves[:, 1:, :].reshape(-1, 2)
    seg = np.linalg.norm(b - a, axis=-1)
    n_sub = int(max(2, math.ceil(seg.max() / (cell / 8)))) if len(seg) else 2
    t = np.linspace(0.0, 1.0, n_sub)
    pts = (a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
    r = np.linalg.norm(pts, axis=-1) / rho
    th = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
    ir = np.clip((r * n_radial).astype(int), 0, n_radial - 1)
    it = np.clip((th / (2 * math.pi) * n_angular).astype(int), 0, n_angular - 1)
    hit = np.zeros((n_radial, n_angular), dtype=bool)
    hit[ir, it] = True
    return hit


def covers(family: PolylineSweepout, n_radial: int = 8, n_angular: int = 8) -> bool:
    return bool(covered_cells(family, n_radial, n_angular).all())


# ---------------------------------------------------------------------------
# tightening


def _resample(curves: np.ndarray, ratio: float = 0.1) -> np.ndarray:
    """Redistribute vertices uniformly by chart arclength on degenerate curves.

    A curve is resampled when its shortest edge falls below ``ratio`` times
    its mean edge.  New vertices lie on the old polyline, whose chart edges
    are geodesic segments, so the length never increases.  Endpoints are kept.
    """
    edges = np.linalg.norm(np.diff(curves, axis=1), axis=-1)
    mean = edges.mean(axis=1)
    bad = np.flatnonzero((edges.min(axis=1) < ratio * mean) & (mean > 0))
    if bad.size == 0:
        return curves
    out = curves.copy()
    nv = curves.shape[1]
    for i in bad:
        cum = np.concatenate([[0.0], np.cumsum(edges[i])])
        target = np.linspace(0.0, cum[-1], nv)
        out[i, :, 0] = np.interp(target, cum, curves[i, :, 0])
        out[i, :, 1] = np.interp(target, cum, curves[i, :, 1])
        out[i, [0, -1]] = curves[i, [0, -1]]
    return out


def _descent_direction(chart: DiskChart, curves: np.ndarray, mobility: float) -> np.ndarray:
    a, b = curves[:, :-1, :], curves[:, 1:, :]
    ga, gb = chart.distance_grad(a, b)
    grad = np.zeros_like(curves)
    grad[:, :-1, :] += ga
    grad[:, 1:, :] += gb
    seg = chart.distance(a, b)
    mass = np.zeros(curves.shape[:2])
    mass[:, :-1] += seg / 2
    mass[:, 1:] += seg / 2
    mass = np.maximum(mass, 1e-300)
    vel = -grad / mass[..., None]
    # endpoints slide along the boundary circle
    for j in (0, -1):
        p = curves[:, j, :]
        nrm = p / np.maximum(np.linalg.norm(p, axis=-1, keepdims=True), 1e-300)
        vt = vel[:, j, :] - np.sum(vel[:, j, :] * nrm, axis=-1, keepdims=True) * nrm
        vel[:, j, :] = mobility * vt
    return vel


def _project_ends(curves: np.ndarray, rho: float) -> np.ndarray:
    for j in (0, -1):
        p = curves[:, j, :]
        r = np.linalg.norm(p, axis=-1, keepdims=True)
        curves[:, j, :] = np.where(r > 0, p * (rho / np.maximum(r, 1e-300)), p)
    return curves


@dataclass
class TighteningResult:
    family: PolylineSweepout
    trace: np.ndarray  # max length after each step, trace[0] = initial
    accepted: np.ndarray  # per step: 2 free-boundary step, 1 fixed-endpoint step, 0 rejected
    covering_ok: bool

    def trace_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "max_length"])
            for i, v in enumerate(self.trace):
                w.writerow([i, repr(float(v))])


def tighten_1sweepout(disk: SpaceFormBall, init: PolylineSweepout, steps: int = 2000,
                      cfl: float = 0.2, mobility: float = 1.0, cover_grid: tuple = (8, 8),
                      min_length: float = 1e-9) -> TighteningResult:
    """Shorten every curve of a polyline sweepout while keeping it a sweepout.

    One step moves interior vertices by explicit Euler on the discrete length
    gradient (lumped-mass curvature flow) and slides endpoints along the
    boundary circle, then redistributes vertices.  A curve whose length would
    increase keeps its previous state, so the family maximum never increases.
    If the stepped family no longer covers the polar covering grid the step is
    retried with fixed endpoints and then with half the time step; a step that
    still breaks covering is rejected.
    """
    if disk.n != 2 or disk.k != 1:
        raise ValueError("tightening is implemented for k = 1 families in a 2-disk")
    chart = init.chart
    if abs(chart.K - disk.K) > 0 or abs(chart.R - disk.R) > 1e-12:
        raise ValueError("family chart does not match the disk")
    rho = chart.radius
    if init.endpoint_error() > 1e-10:
        raise ValueError("initial curves must end on the boundary circle")
    if not covers(init, *cover_grid):
        raise ValueError("initial family does not cover the disk")

    fam = init.copy()
    curves = _resample(fam.curves)
    lengths = chart.polyline_lengths(curves)
    trace = [float(lengths.max())]
    accepted = []

    def attempt(curves, lengths, mob, scale):
        h = np.maximum(lengths / (curves.shape[1] - 1), 1e-12)
        tau = scale * cfl * h**2
        vel = _descent_direction(chart, curves, mob)
        new = curves.copy()
        keep = lengths <= min_length
        current = tau.copy()
        pending = ~keep
        for _ in range(6):
            if not pending.any():
                break
            trial = curves[pending] + current[pending, None, None] * vel[pending]
            trial = _resample(_project_ends(trial, rho))
            trial_len = chart.polyline_lengths(trial)
            ok = trial_len <= lengths[pending]
            idx = np.flatnonzero(pending)
            new[idx[ok]] = trial[ok]
            pending[idx[ok]] = False
            current[pending] /= 2
        new_len = chart.polyline_lengths(new)
        worse = new_len > lengths
        new[worse] = curves[worse]
        new_len[worse] = lengths[worse]
        return new, new_len

    covering_ok = True
    for _ in range(steps):
        status = 0
        for mob, scale, code in ((mobility, 1.0, 2), (0.0, 1.0, 1), (0.0, 0.5, 1)):
            new, new_len = attempt(curves, lengths, mob, scale)
            cand = PolylineSweepout(chart, fam.s, new)
            if covers(cand, *cover_grid):
                curves, lengths, status = new, new_len, code
                break
        accepted.append(status)
        if status == 0:
            covering_ok = covers(PolylineSweepout(chart, fam.s, curves), *cover_grid)
        trace.append(float(lengths.max()))

    fam.curves = curves
    return TighteningResult(fam, np.array(trace), np.array(accepted), covering_ok)
