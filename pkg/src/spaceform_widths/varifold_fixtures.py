"""Varifold fixtures in the unit ball: planar disks and the critical catenoid.

Planar disks use a quasi-uniform polar grid (ring ``i`` of ``N`` carries
about ``2 pi (i + 1/2)`` cells), one atom per cell at the cell centroid with
the exact cell area as weight.  The catenoid uses a tensor grid in its
parameters with exact cell areas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .varifold import DiscreteVarifold


def _plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    nu = np.asarray(normal, dtype=float)
    nu = nu / np.linalg.norm(nu)
    # Householder-free completion: orthonormalise the standard basis against nu
    basis = []
    for e in np.eye(nu.size)[np.argsort(np.abs(nu))]:
        v = e - (e @ nu) * nu - sum((e @ b) * b for b in basis)
        if np.linalg.norm(v) > 1e-8:
            basis.append(v / np.linalg.norm(v))
        if len(basis) == nu.size - 1:
            break
    return nu, np.array(basis)


def polar_cells(N: int):
    """Quasi-uniform polar grid of the unit disk.

    Returns centroid radii, centroid angles and areas of the cells.
    """
    if N < 1:
        raise ValueError("N must be positive")
    rad, ang, area = [], [], []
    for i in range(N):
        r1, r2 = i / N, (i + 1) / N
        m = max(3, round(2 * math.pi * (i + 0.5)))
        dth = 2 * math.pi / m
        rc = (2.0 / 3.0) * (r2**3 - r1**3) / (r2**2 - r1**2) * math.sin(dth / 2) / (dth / 2)
        # stagger alternate rings so cell edges do not line up radially
        th = (np.arange(m) + 0.5 + 0.25 * (i % 2)) * dth
        rad.append(np.full(m, rc))
        ang.append(th)
        area.append(np.full(m, 0.5 * (r2**2 - r1**2) * dth))
    return np.concatenate(rad), np.concatenate(ang), np.concatenate(area)


def planar_disk(N: int, normal=(0.0, 0.0, 1.0), offset: float = 0.0, weight: float = 1.0,
                radius_scale: float = 1.0, name: str = "planar-disk") -> DiscreteVarifold:
    """Flat 2-disk ``{x . nu = offset}`` intersected with the unit 3-ball.

    ``radius_scale < 1`` shrinks the disk about its centre (it then no longer
    reaches the sphere).
    """
    nu, (e1, e2) = _plane_basis(normal)
    if nu.size != 3:
        raise ValueError("planar_disk builds 2-disks in B^3")
    if not -1 < offset < 1:
        raise ValueError("offset must lie in (-1, 1)")
    R = math.sqrt(1 - offset**2) * radius_scale
    rc, th, A = polar_cells(N)
    x = offset * nu + R * (np.outer(rc * np.cos(th), e1) + np.outer(rc * np.sin(th), e2))
    frames = np.broadcast_to(np.stack([e1, e2]), (len(rc), 2, 3)).copy()
    phi = np.linspace(0, 2 * math.pi, 4 * N, endpoint=False)
    bdry = offset * nu + R * (np.outer(np.cos(phi), e1) + np.outer(np.sin(phi), e2))
    return DiscreteVarifold(x, frames, weight * R**2 * A, bdry if radius_scale == 1 else None,
                            True, name)


def equatorial_disk(N: int, n: int = 3, k: int = 2, weight: float = 1.0) -> DiscreteVarifold:
    """Equatorial ``k``-disk through the centre of ``B^n`` (``k = 1`` or ``k = 2``)."""
    if k == 2:
        if n != 3:
            raise ValueError("2-disks are built in B^3")
        return planar_disk(N, weight=weight, name="equatorial-disk")
    if k == 1:
        s = -1 + (np.arange(N) + 0.5) * 2 / N
        x = np.zeros((N, n))
        x[:, 1] = s
        frames = np.zeros((N, 1, n))
        frames[:, 0, 1] = 1.0
        bdry = np.zeros((2, n))
        bdry[:, 1] = [-1.0, 1.0]
        return DiscreteVarifold(x, frames, np.full(N, weight * 2.0 / N), bdry, True,
                                "equatorial-segment")
    raise ValueError("equatorial fixtures exist for k = 1, 2")


def offcenter_disk(N: int, height: float = 0.5) -> DiscreteVarifold:
    return planar_disk(N, offset=height, name="offcenter-disk")


def doubled_disk(N: int) -> DiscreteVarifold:
    """Two coincident copies of the equatorial disk."""
    V = equatorial_disk(N)
    D = V + V
    D.name = "doubled-disk"
    return D


def tilted_disk(N: int, angle: float, offset: float = 0.0) -> DiscreteVarifold:
    """Disk whose normal makes ``angle`` with ``e3``, tilted about the ``e1`` axis."""
    return planar_disk(N, normal=(0.0, math.sin(angle), math.cos(angle)), offset=offset,
                       name="tilted-disk")


# ---------------------------------------------------------------------------
# critical catenoid


@dataclass(frozen=True)
class CatenoidParameters:
    """``r(z) = a cosh(z/a)`` for ``|z| <= T = a s`` meets the unit sphere orthogonally."""

    a: float
    s: float
    residual: float

    @property
    def height(self) -> float:
        return self.a * self.s

    @property
    def area(self) -> float:
        return 2 * math.pi * self.a**2 * (self.s + math.sinh(self.s) * math.cosh(self.s))

    @property
    def boundary_radius(self) -> float:
        return self.a * math.cosh(self.s)


def critical_catenoid_parameters(tol: float = 1e-10) -> CatenoidParameters:
    """Solve the orthogonality condition ``s tanh s = 1`` and ``a^2 (cosh^2 s + s^2) = 1``.

    At a boundary point the position vector ``(a cosh s, a s)`` is parallel to
    the meridian conormal ``(sinh s, 1)/cosh s``, which is ``s sinh s = cosh s``.
    """
    s = optimize.brentq(lambda t: t * math.tanh(t) - 1.0, 0.5, 2.0, xtol=1e-15)
    a = 1.0 / math.sqrt(math.cosh(s) ** 2 + s**2)
    residual = max(abs(s * math.sinh(s) - math.cosh(s)), abs(a**2 * (math.cosh(s) ** 2 + s**2) - 1))
    if residual > tol:
        raise RuntimeError(f"catenoid orthogonality residual {residual:.2e}")
    return CatenoidParameters(a, s, residual)


def catenoid_point(p: CatenoidParameters, u, theta) -> np.ndarray:
    """Point at parameters ``u = z/a`` in ``[-s, s]`` and angle ``theta``."""
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    rr = p.a * np.cosh(u)
    return np.stack([rr * np.cos(theta), rr * np.sin(theta), p.a * u], axis=-1)


def critical_catenoid(N: int) -> DiscreteVarifold:
    """Catenoid varifold with ``N`` cells along the axis and about square cells."""
    p = critical_catenoid_parameters()
    Nt = max(8, round(math.pi * N / p.s))
    ue = np.linspace(-p.s, p.s, N + 1)
    um = (ue[:-1] + ue[1:]) / 2
    th = (np.arange(Nt) + 0.5) * 2 * math.pi / Nt
    # exact area of a cell: a^2 dtheta int cosh^2 u du
    prim = ue / 2 + np.sinh(2 * ue) / 4
    cell = p.a**2 * (2 * math.pi / Nt) * np.diff(prim)
    U, TH = np.meshgrid(um, th, indexing="ij")
    x = catenoid_point(p, U, TH).reshape(-1, 3)
    e_th = np.stack([-np.sin(TH), np.cos(TH), np.zeros_like(TH)], axis=-1).reshape(-1, 3)
    e_u = (np.stack([np.sinh(U) * np.cos(TH), np.sinh(U) * np.sin(TH), np.ones_like(U)], axis=-1)
           / np.cosh(U)[..., None]).reshape(-1, 3)
    w = np.repeat(cell, Nt)
    phi = np.linspace(0, 2 * math.pi, 4 * N, endpoint=False)
    bdry = np.concatenate([catenoid_point(p, np.full_like(phi, sgn * p.s), phi) for sgn in (-1, 1)])
    return DiscreteVarifold(x, np.stack([e_u, e_th], axis=1), w, bdry, True, "critical-catenoid")


def catenoid_boundary_point(theta: float = 0.0, upper: bool = True) -> np.ndarray:
    p = critical_catenoid_parameters()
    y = catenoid_point(p, p.s if upper else -p.s, theta)
    return y / np.linalg.norm(y)


VARIFOLD_FIXTURES = {
    "equatorial-disk": equatorial_disk,
    "offcenter-disk": offcenter_disk,
    "doubled-disk": doubled_disk,
    "critical-catenoid": critical_catenoid,
}
