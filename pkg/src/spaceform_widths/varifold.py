"""Discrete varifolds: weighted atoms on the Grassmann bundle of ``R^n``.

A :class:`DiscreteVarifold` stores ``m`` atoms ``(x_i, S_i, w_i)`` where
``S_i`` is a ``k``-plane given by an orthonormal frame.  Every integral
against ``V`` is a weighted sum over atoms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FRAME_TOL = 1e-12
FD_STEP = 1e-5


@dataclass
class DiscreteVarifold:
    """Weighted atoms ``(x, S, w)``.

    Parameters
    ----------
    x : (m, n) array
        Atom positions.
    frames : (m, k, n) array
        Orthonormal frames of the tangent planes.
    w : (m,) array
        Non-negative weights (units of ``k``-area).
    boundary : (p, n) array, optional
        Sample of the boundary trace ``supp V`` meets on the unit sphere.
    in_ball : bool
        Tag for a varifold in ``(B^n, dB^n)``; support must lie in the closed ball.
    """

    x: np.ndarray
    frames: np.ndarray
    w: np.ndarray
    boundary: np.ndarray | None = None
    in_ball: bool = True
    name: str = "varifold"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.frames = np.asarray(self.frames, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if self.x.ndim != 2 or self.frames.ndim != 3:
            raise ValueError("x must be (m, n) and frames (m, k, n)")
        m, n = self.x.shape
        if self.frames.shape[0] != m or self.frames.shape[2] != n or self.w.shape != (m,):
            raise ValueError("atom arrays have inconsistent shapes")
        if np.any(self.w < 0):
            raise ValueError("weights must be non-negative")
        if m:
            gram = np.einsum("mia,mja->mij", self.frames, self.frames)
            err = np.max(np.abs(gram - np.eye(self.k)))
            if err > FRAME_TOL:
                raise ValueError(f"frames are not orthonormal (error {err:.2e})")
            if self.in_ball and np.max(np.linalg.norm(self.x, axis=1)) > 1 + 1e-12:
                raise ValueError("atoms lie outside the closed unit ball")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def k(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.x.shape[0]

    @classmethod
    def empty(cls, n: int, k: int) -> "DiscreteVarifold":
        return cls(np.zeros((0, n)), np.zeros((0, k, n)), np.zeros(0))

    def scaled(self, factor: float) -> "DiscreteVarifold":
        """Same atoms with all weights multiplied by ``factor``."""
        b = None if self.boundary is None else self.boundary.copy()
        return DiscreteVarifold(self.x.copy(), self.frames.copy(), factor * self.w, b,
                                self.in_ball, self.name)

    def transformed(self, Q: np.ndarray) -> "DiscreteVarifold":
        """Push-forward under the orthogonal map ``x -> Q x``."""
        Q = np.asarray(Q, dtype=float)
        b = None if self.boundary is None else self.boundary @ Q.T
        return DiscreteVarifold(self.x @ Q.T, self.frames @ Q.T, self.w.copy(), b,
                                self.in_ball, self.name)

    def __add__(self, other: "DiscreteVarifold") -> "DiscreteVarifold":
        if (self.n, self.k) != (other.n, other.k):
            raise ValueError("cannot add varifolds of different (n, k)")
        bs = [b for b in (self.boundary, other.boundary) if b is not None]
        return DiscreteVarifold(
            np.concatenate([self.x, other.x]), np.concatenate([self.frames, other.frames]),
            np.concatenate([self.w, other.w]), np.concatenate(bs) if bs else None,
            self.in_ball and other.in_ball, f"{self.name}+{other.name}")

    def projectors(self) -> np.ndarray:
        """Orthogonal projections ``pi_S`` as an ``(m, n, n)`` array."""
        return np.einsum("mia,mib->mab", self.frames, self.frames)

    # JSON lines: one atom per line, {"x": [...], "frame": [[...]], "w": ...}
    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for xi, fi, wi in zip(self.x, self.frames, self.w):
                fh.write(json.dumps({"x": xi.tolist(), "frame": fi.tolist(), "w": float(wi)}))
                fh.write("\n")

    @classmethod
    def from_jsonl(cls, path, n: int | None = None, k: int | None = None,
                   name: str = "varifold") -> "DiscreteVarifold":
        xs, fs, ws = [], [], []
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                atom = json.loads(line)
                xs.append(atom["x"])
                fs.append(atom["frame"])
                ws.append(atom["w"])
        if not xs:
            if n is None or k is None:
                raise ValueError("empty varifold file: pass n and k")
            return cls.empty(n, k)
        return cls(np.array(xs), np.array(fs), np.array(ws), name=name)


def mass(V: DiscreteVarifold) -> float:
    """Total weight ``||V||(R^n)``."""
    return float(np.sum(V.w))


@dataclass(frozen=True)
class AnalyticVectorField:
    """Vector field with an optional analytic Jacobian.

    ``value`` maps ``(m, n)`` points to ``(m, n)`` vectors, ``jacobian`` maps
    them to ``(m, n, n)`` with ``J[i, a, b] = dX_a/dx_b``.  Without a Jacobian,
    central differences with step ``1e-5`` are used.
    """

    value: Callable
    jacobian: Callable | None = None
    tangent: bool = False
    name: str = "X"

    def __call__(self, x):
        return self.value(np.atleast_2d(np.asarray(x, dtype=float)))

    def jac(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.jacobian is not None:
            return self.jacobian(x)
        n = x.shape[1]
        J = np.empty((x.shape[0], n, n))
        for b in range(n):
            e = np.zeros(n)
            e[b] = FD_STEP
            J[:, :, b] = (self.value(x + e) - self.value(x - e)) / (2 * FD_STEP)
        return J

    def tangency_defect(self, n: int, samples: int = 200, seed: int = 0) -> float:
        """Max of ``|<X(x), x>|`` over random points of the unit sphere."""
        rng = np.random.default_rng(seed)
        p = rng.standard_normal((samples, n))
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        return float(np.max(np.abs(np.sum(self(p) * p, axis=1))))


def divergence_on_planes(J: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """``div_S X = sum_i <e_i, DX e_i>`` for each atom."""
    return np.einsum("mia,mab,mib->m", frames, J, frames)


def first_variation(V: DiscreteVarifold, X: AnalyticVectorField) -> float:
    """``delta V(X) = sum_i w_i div_{S_i} X(x_i)``."""
    if len(V) == 0:
        return 0.0
    div = divergence_on_planes(X.jac(V.x), V.frames)
    return float(np.sum(V.w * div))


# ---------------------------------------------------------------------------
# test fields tangent to the unit sphere


def _rotation(i: int, j: int, n: int) -> AnalyticVectorField:
    A = np.zeros((n, n))
    A[i, j], A[j, i] = -1.0, 1.0
    return AnalyticVectorField(lambda x: x @ A.T, lambda x: np.broadcast_to(A, (len(x), n, n)),
                               tangent=True, name=f"rot[{i}{j}]")


def _projected_translation(a: np.ndarray) -> AnalyticVectorField:
    # X = a - (a.x) x
    def value(x):
        return a - (x @ a)[:, None] * x

    def jac(x):
        n = x.shape[1]
        return -(x[:, :, None] * a[None, None, :]) - (x @ a)[:, None, None] * np.eye(n)

    return AnalyticVectorField(value, jac, tangent=True, name=f"proj[{int(np.argmax(a))}]")


def _projected_shear(i: int, n: int) -> AnalyticVectorField:
    # v = x_{i+1}^2 e_i, X = v - (v.x) x
    j = (i + 1) % n

    def parts(x):
        v = np.zeros_like(x)
        v[:, i] = x[:, j] ** 2
        Dv = np.zeros((len(x), n, n))
        Dv[:, i, j] = 2 * x[:, j]
        return v, Dv

    def value(x):
        v, _ = parts(x)
        return v - np.sum(v * x, axis=1)[:, None] * x

    def jac(x):
        v, Dv = parts(x)
        grad_vx = np.einsum("mcb,mc->mb", Dv, x) + v
        return Dv - x[:, :, None] * grad_vx[:, None, :] - np.sum(v * x, axis=1)[:, None, None] * np.eye(n)

    return AnalyticVectorField(value, jac, tangent=True, name=f"shear[{i}]")


def _bump(i: int, n: int) -> AnalyticVectorField:
    # X = (1 - |x|^2) e_i vanishes on the sphere
    e = np.zeros(n)
    e[i] = 1.0

    def value(x):
        return (1 - np.sum(x * x, axis=1))[:, None] * e

    def jac(x):
        return -2 * e[None, :, None] * x[:, None, :]

    return AnalyticVectorField(value, jac, tangent=True, name=f"bump[{i}]")


def tangent_test_basis(n: int = 3) -> list[AnalyticVectorField]:
    """Finite family of fields tangent along the unit sphere.

    Rotations, projections of constant fields, projected quadratic shears and
    fields vanishing on the sphere; twelve fields for ``n = 3``.
    """
    fields = [_rotation(i, j, n) for i in range(n) for j in range(i + 1, n)]
    fields += [_projected_translation(np.eye(n)[i]) for i in range(n)]
    fields += [_projected_shear(i, n) for i in range(n)]
    fields += [_bump(i, n) for i in range(n)]
    return fields


def radial_plane_field(normal) -> AnalyticVectorField:
    """``x - <x, nu> nu`` projected tangent to the unit sphere."""
    nu = np.asarray(normal, dtype=float)
    nu = nu / np.linalg.norm(nu)

    def value(x):
        v = x - (x @ nu)[:, None] * nu
        return v - np.sum(v * x, axis=1)[:, None] * x

    def jac(x):
        n = x.shape[1]
        P = np.eye(n) - np.outer(nu, nu)
        v = x @ P
        # grad of (v.x) = 2 P x
        return (P[None] - x[:, :, None] * (2 * v)[:, None, :]
                - np.sum(v * x, axis=1)[:, None, None] * np.eye(n))

    return AnalyticVectorField(value, jac, tangent=True, name="radial-plane")


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffProfile:
    """Piecewise-linear ``eta``: 0 on ``[0, r]``, 1 beyond ``(1 + eps) r``."""

    r: float
    eps: float

    def __post_init__(self):
        if not (self.r > 0 and self.eps > 0):
            raise ValueError("r and eps must be positive")

    def __call__(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.r) / (self.eps * self.r), 0.0, 1.0)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t > self.r) & (t < (1 + self.eps) * self.r), 1.0 / (self.eps * self.r), 0.0)


def random_frames(rng: np.random.Generator, m: int, n: int, k: int) -> np.ndarray:
    """``m`` uniformly distributed orthonormal ``k``-frames in ``R^n``."""
    G = rng.standard_normal((m, n, k))
    Q, _ = np.linalg.qr(G)
    return np.transpose(Q, (0, 2, 1)).copy()


def support_in_hull(V: DiscreteVarifold, directions: int = 400, seed: int = 0,
                    tol: float = 1e-9) -> float:
    """Largest excess of ``<u, x>`` over ``max_b <u, b>`` across sampled directions.

    Non-positive means every atom passes the supporting half-space test
    against the convex hull of ``V.boundary``.
    """
    if V.boundary is None or len(V.boundary) == 0:
        raise ValueError("varifold carries no boundary trace")
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((directions, V.n))
    U = np.concatenate([U / np.linalg.norm(U, axis=1, keepdims=True), np.eye(V.n), -np.eye(V.n)])
    hull = np.max(V.boundary @ U.T, axis=0)
    return float(np.max(V.x @ U.T - hull[None, :]) - tol)


def plane_spread(V: DiscreteVarifold) -> float:
    """Max operator-norm distance of the atom projections from their weighted mean plane."""
    P = V.projectors()
    mean = np.einsum("m,mab->ab", V.w, P) / np.sum(V.w)
    vals, vecs = np.linalg.eigh(mean)
    E = vecs[:, -V.k:]
    P0 = E @ E.T
    return float(np.max(np.linalg.norm(P - P0, ord=2, axis=(1, 2))))
