"""Second variation of free boundary minimal surfaces in space-form 3-balls.

Surfaces are triangulated in one of three ambient models:

* ``euclidean``: points of the chart ``R^3`` (``K = 0``);
* ``sphere``: points of ``{X in R^4 : |X|^2 = 1/K}`` (``K > 0``);
* ``hyperboloid``: points of ``{X in R^{3,1} : <X, X> = 1/K, X_0 > 0}`` with
  the Minkowski product ``-X_0 Y_0 + X_1 Y_1 + X_2 Y_2 + X_3 Y_3`` (``K < 0``).

The ball ``B_{R;K}`` is centred at ``o = 0`` or ``o = e_0 / sqrt|K|``.  All
finite-element quantities are intrinsic: edge lengths are ambient geodesic
distances, and second fundamental forms come from quadratic fits in the
ambient normal coordinates (the Riemannian log map) at each vertex.

The quadratic form is

    Q(phi, phi) = int |grad phi|^2 - (Ric(nu, nu) + |A|^2) phi^2 - k_bd int_bd phi^2

with ``Ric(nu, nu) = 2K`` and ``k_bd`` the principal curvature of the sphere
``dB_{R;K}`` (see :func:`boundary_curvature`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, sparse
from scipy.sparse import linalg as splinalg

from .spaceform import beta

BOUNDARY_TOL = 1e-8
MIN_ANGLE_DEG = 1.0
MINIMALITY_TOL = 1e-3
DENSE_LIMIT = 1500
FD_STEP = 1e-4
HESS_TOL = 1e-6

MODELS = ("euclidean", "sphere", "hyperboloid")


class MeshError(ValueError):
    """A mesh violates a structural invariant."""


class FitError(ValueError):
    """A quadratic fit stencil is too small or degenerate."""


class NonMinimalError(ValueError):
    """A mesh fails the discrete mean-curvature gate."""


class EigenError(RuntimeError):
    """The eigensolver did not produce a usable pair."""


class StepSizeError(ValueError):
    """A finite-difference step is too small for the requested accuracy."""


# ---------------------------------------------------------------------------
# ambient models


def model_for(K: float) -> str:
    return "euclidean" if K == 0 else ("sphere" if K > 0 else "hyperboloid")


def _signature(model: str, dim: int) -> np.ndarray:
    g = np.ones(dim)
    if model == "hyperboloid":
        g[0] = -1.0
    return g


def inner(model: str, u, v) -> np.ndarray:
    """Ambient inner product along the last axis."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sum(u * v * _signature(model, u.shape[-1]), axis=-1)


def centre(K: float) -> np.ndarray:
    if K == 0:
        return np.zeros(3)
    o = np.zeros(4)
    o[0] = 1.0 / math.sqrt(abs(K))
    return o


def distance(K: float, X, Y) -> np.ndarray:
    """Geodesic distance between model points (broadcasting)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if K == 0:
        return np.linalg.norm(X - Y, axis=-1)
    s = math.sqrt(abs(K))
    d = X - Y
    chord = np.sqrt(np.maximum(inner(model_for(K), d, d), 0.0))
    # chord-based forms stay accurate for nearby points
    if K > 0:
        return 2.0 / s * np.arcsin(np.minimum(0.5 * s * chord, 1.0))
    return 2.0 / s * np.arcsinh(0.5 * s * chord)


def tangent_part(K: float, p, v) -> np.ndarray:
    """Project ``v`` onto the tangent space of the model at ``p``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if K == 0:
        return v
    return v - K * inner(model_for(K), v, p)[..., None] * p


def log_map(K: float, p, Q) -> np.ndarray:
    """Riemannian logarithm ``log_p(q)`` for each row ``q`` of ``Q``."""
    p = np.asarray(p, dtype=float)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if K == 0:
        return Q - p
    model = model_for(K)
    v = tangent_part(K, p, Q)
    nv = np.sqrt(np.maximum(inner(model, v, v), 0.0))
    d = distance(K, p, Q)
    scale = np.divide(d, nv, out=np.ones_like(d), where=nv > 0)
    return v * scale[:, None]


def exp_map(K: float, p, v) -> np.ndarray:
    """Riemannian exponential at ``p`` of tangent vectors ``v`` (rows)."""
    p = np.asarray(p, dtype=float)
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if K == 0:
        return p + v
    s = math.sqrt(abs(K))
    t = np.sqrt(np.maximum(inner(model_for(K), v, v), 0.0)) * s
    if K > 0:
        c, sn_t = np.cos(t), np.sin(t)
    else:
        c, sn_t = np.cosh(t), np.sinh(t)
    ratio = np.divide(sn_t, t, out=np.ones_like(t), where=t > 0)
    return c[:, None] * p + ratio[:, None] * v


def polar_point(K: float, r, direction) -> np.ndarray:
    """Point at geodesic distance ``r`` from the centre along a unit chart direction."""
    r = np.asarray(r, dtype=float)
    d = np.asarray(direction, dtype=float)
    if K == 0:
        return r[..., None] * d
    s = math.sqrt(abs(K))
    if K > 0:
        c, sn_r = np.cos(s * r), np.sin(s * r)
    else:
        c, sn_r = np.cosh(s * r), np.sinh(s * r)
    return np.concatenate([(c / s)[..., None], (sn_r / s)[..., None] * d], axis=-1)


def radial_distance(K: float, X) -> np.ndarray:
    return distance(K, centre(K), X)


def boundary_curvature(K: float, R: float) -> float:
    """Principal curvature of the geodesic sphere of radius ``R`` in ``M_K``."""
    if R <= 0:
        raise ValueError("R must be positive")
    if K > 0:
        if R * math.sqrt(K) > math.pi:
            raise ValueError("R exceeds pi / sqrt(K)")
        s = math.sqrt(K)
        return s * math.cos(R * s) / math.sin(R * s)
    if K == 0:
        return 1.0 / R
    s = math.sqrt(-K)
    return s / math.tanh(R * s)


# ---------------------------------------------------------------------------
# meshes


@dataclass
class SurfaceMesh:
    """Triangulated surface in a space-form 3-ball.

    Parameters
    ----------
    vertices : (V, 3) or (V, 4) array
        Points in the ambient model of ``K``.
    triangles : (F, 3) int array
        Consistently oriented triangles.
    normals : array like ``vertices``
        Unit normals, tangent to the model.
    K, R : float
        Ambient curvature and ball radius.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray
    K: float
    R: float
    name: str = "surface"
    fields: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.normals = np.asarray(self.normals, dtype=float)
        self.K = float(self.K)
        self.R = float(self.R)
        dim = 3 if self.K == 0 else 4
        if self.vertices.ndim != 2 or self.vertices.shape[1] != dim:
            raise MeshError(f"{self.model} vertices must have {dim} coordinates")
        if self.normals.shape != self.vertices.shape:
            raise MeshError("normals must match vertices")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (F, 3) array")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise MeshError("triangle index out of range")
        self.boundary_edges = _boundary_edges(self.triangles)

    @property
    def model(self) -> str:
        return model_for(self.K)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(len(self.vertices), dtype=bool)
        mask[self.boundary_vertices] = False
        return mask

    def radii(self) -> np.ndarray:
        return radial_distance(self.K, self.vertices)

    def edge_lengths(self) -> np.ndarray:
        """Geodesic lengths ``(F, 3)``; column ``i`` is opposite vertex ``i``."""
        P = self.vertices[self.triangles]
        return np.stack([distance(self.K, P[:, 1], P[:, 2]),
                         distance(self.K, P[:, 2], P[:, 0]),
                         distance(self.K, P[:, 0], P[:, 1])], axis=1)

    def validate(self) -> None:
        """Raise :class:`MeshError` unless every structural invariant holds."""
        model = self.model
        if self.K != 0:
            norm = inner(model, self.vertices, self.vertices) * self.K
            if np.max(np.abs(norm - 1)) > 1e-10:
                raise MeshError("vertices leave the model")
            if np.max(np.abs(inner(model, self.vertices, self.normals))) > 1e-10:
                raise MeshError("normals are not tangent to the model")
        if np.max(np.abs(inner(model, self.normals, self.normals) - 1)) > 1e-10:
            raise MeshError("normals are not unit")
        off = np.abs(self.radii()[self.boundary_vertices] - self.R)
        if off.size == 0 or off.max() > BOUNDARY_TOL:
            raise MeshError(f"boundary vertices off the sphere by {off.max() if off.size else 'n/a'}")
        if min_angle(self) <= math.radians(MIN_ANGLE_DEG):
            raise MeshError("degenerate triangle")
        _check_orientation(self)

    # -- I/O ------------------------------------------------------------

    def to_off(self, path) -> None:
        """Write the OFF-like text format: a header line, counts, vertices with normals, faces."""
        dim = self.vertices.shape[1]
        with open(path, "w") as fh:
            fh.write(f"SFOFF model={self.model} K={self.K!r} R={self.R!r} dim={dim} "
                     f"name={self.name}\n")
            fh.write(f"{len(self.vertices)} {len(self.triangles)} {len(self.boundary_edges)}\n")
            for x, nu in zip(self.vertices, self.normals):
                fh.write(" ".join(repr(float(c)) for c in np.concatenate([x, nu])) + "\n")
            for t in self.triangles:
                fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
            for e in self.boundary_edges:
                fh.write(f"2 {e[0]} {e[1]}\n")

    @classmethod
    def from_off(cls, path) -> "SurfaceMesh":
        with open(path) as fh:
            header = fh.readline().split()
            if not header or header[0] != "SFOFF":
                raise MeshError("missing SFOFF header")
            meta = dict(item.split("=", 1) for item in header[1:])
            nv, nf, _ = (int(c) for c in fh.readline().split())
            dim = int(meta["dim"])
            data = np.array([[float(c) for c in fh.readline().split()] for _ in range(nv)])
            tri = np.array([[int(c) for c in fh.readline().split()[1:]] for _ in range(nf)])
        mesh = cls(data[:, :dim], tri, data[:, dim:], float(meta["K"]), float(meta["R"]),
                   meta.get("name", "surface"))
        if mesh.model != meta["model"]:
            raise MeshError("header model does not match K")
        return mesh


def _boundary_edges(tri: np.ndarray) -> np.ndarray:
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    if counts.max() > 2:
        raise MeshError("non-manifold edge")
    return e[counts[inv.ravel()] == 1]


def _check_orientation(mesh: SurfaceMesh) -> None:
    tri = mesh.triangles
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    _, counts = np.unique(e, axis=0, return_counts=True)
    if counts.max() > 1:
        raise MeshError("inconsistent triangle orientation")
    # the oriented frame (log b, log c, nu) must have one sign everywhere
    P = mesh.vertices[tri]
    N = mesh.normals[tri[:, 0]]
    if mesh.K == 0:
        det = np.einsum("ij,ij->i", np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), N)
    else:
        M = np.stack([P[:, 0], P[:, 1] - P[:, 0], P[:, 2] - P[:, 0], N], axis=1)
        det = np.linalg.det(M)
    if not (np.all(det > 0) or np.all(det < 0)):
        raise MeshError("normals disagree with triangle orientation")


def _heron(l: np.ndarray) -> np.ndarray:
    a, b, c = np.sort(l, axis=1)[:, ::-1].T
    # Kahan's stable ordering a >= b >= c
    q = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(q, 0.0))


def corner_cosines(l: np.ndarray) -> np.ndarray:
    """Euclidean corner cosines of triangles with side lengths ``l``."""
    a2 = l**2
    out = np.empty_like(l)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        out[:, i] = (a2[:, j] + a2[:, k] - a2[:, i]) / (2 * l[:, j] * l[:, k])
    return out


def min_angle(mesh: SurfaceMesh) -> float:
    return float(np.arccos(np.clip(corner_cosines(mesh.edge_lengths()), -1, 1)).min())


def geodesic_triangle_areas(mesh: SurfaceMesh) -> np.ndarray:
    """Areas of the geodesic triangles spanned in a totally geodesic plane.

    Uses the angle excess for ``K != 0``; exact for surfaces contained in a
    totally geodesic plane and second-order accurate otherwise.
    """
    l = mesh.edge_lengths()
    if mesh.K == 0:
        return _heron(l)
    s = math.sqrt(abs(mesh.K))
    x = l * s
    if mesh.K > 0:
        c, sn_ = np.cos(x), np.sin(x)
    else:
        c, sn_ = np.cosh(x), np.sinh(x)
    ang = np.empty_like(l)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        if mesh.K > 0:
            cosv = (c[:, i] - c[:, j] * c[:, k]) / (sn_[:, j] * sn_[:, k])
        else:
            cosv = (c[:, j] * c[:, k] - c[:, i]) / (sn_[:, j] * sn_[:, k])
        ang[:, i] = np.arccos(np.clip(cosv, -1, 1))
    excess = ang.sum(axis=1) - math.pi
    return np.abs(excess) / abs(mesh.K)


# ---------------------------------------------------------------------------
# fixtures


def _stitch(inner_idx: np.ndarray, outer_idx: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the annulus between two rings of uniformly spaced vertices."""
    m, n = len(inner_idx), len(outer_idx)
    tris = []
    a = b = 0
    while a < m or b < n:
        ta = (a + 1) / m if a < m else np.inf
        tb = (b + 1) / n if b < n else np.inf
        if ta <= tb:
            tris.append((inner_idx[a % m], outer_idx[b % n], inner_idx[(a + 1) % m]))
            a += 1
        else:
            tris.append((inner_idx[a % m], outer_idx[b % n], outer_idx[(b + 1) % n]))
            b += 1
    return tris


def geodesic_disk(K: float, R: float, rings: int = 16, name: str | None = None) -> SurfaceMesh:
    """Totally geodesic disk through the centre of ``B_{R;K}`` (ring ``i`` has ``6i`` vertices)."""
    if rings < 1:
        raise ValueError("rings must be positive")
    radii = [0.0]
    dirs = [np.array([1.0, 0.0, 0.0])]
    rings_idx = [np.array([0])]
    tris: list[tuple[int, int, int]] = []
    count = 1
    for i in range(1, rings + 1):
        m = 6 * i
        th = 2 * math.pi * np.arange(m) / m
        radii.extend([R * i / rings] * m)
        dirs.extend(np.stack([np.cos(th), np.sin(th), np.zeros(m)], axis=1))
        idx = np.arange(count, count + m)
        count += m
        if i == 1:
            tris.extend((0, int(idx[j]), int(idx[(j + 1) % m])) for j in range(m))
        else:
            tris.extend(_stitch(rings_idx[-1], idx))
        rings_idx.append(idx)
    X = polar_point(K, np.array(radii), np.array(dirs))
    nu = np.zeros_like(X)
    nu[:, -1] = 1.0
    return SurfaceMesh(X, np.array(tris), nu, K, R, name or f"geodesic-disk-K{K:g}-R{R:g}")


def equatorial_mesh(rings: int = 16) -> SurfaceMesh:
    return geodesic_disk(0.0, 1.0, rings, "equatorial-disk")


def hemisphere_mesh(rings: int = 16) -> SurfaceMesh:
    """Totally geodesic disk (a great hemisphere) in the ball ``B_{pi/2;1}``."""
    return geodesic_disk(1.0, math.pi / 2, rings, "hemisphere-disk")


def hyperbolic_disk_mesh(rings: int = 16, R: float = 1.0) -> SurfaceMesh:
    return geodesic_disk(-1.0, R, rings, "geodesic-disk-hyperbolic")


def catenoid_mesh(N: int = 64) -> SurfaceMesh:
    """Critical catenoid in the unit ball on a conformal ``(u, theta)`` grid.

    ``N`` intervals along ``u`` in ``[-s, s]``; the angular count makes the
    parameter cells close to square, so the triangles are near right-isosceles.
    """
    from .varifold_fixtures import catenoid_point, critical_catenoid_parameters

    p = critical_catenoid_parameters()
    Nt = max(8, round(math.pi * N / p.s))
    u = np.linspace(-p.s, p.s, N + 1)
    th = 2 * math.pi * np.arange(Nt) / Nt
    U, TH = np.meshgrid(u, th, indexing="ij")
    X = catenoid_point(p, U, TH).reshape(-1, 3)
    nu = np.stack([-np.cos(TH), -np.sin(TH), np.sinh(U)], axis=-1) / np.cosh(U)[..., None]
    idx = np.arange((N + 1) * Nt).reshape(N + 1, Nt)
    tris = []
    for i in range(N):
        for j in range(Nt):
            a, b = idx[i, j], idx[i + 1, j]
            c, d = idx[i + 1, (j + 1) % Nt], idx[i, (j + 1) % Nt]
            # alternate the diagonal so the stencil is symmetric on average
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    return SurfaceMesh(X, np.array(tris), nu.reshape(-1, 3), 0.0, 1.0, "critical-catenoid")


MESH_FIXTURES = {
    "equatorial-disk": lambda res: equatorial_mesh(res),
    "hemisphere-disk": lambda res: hemisphere_mesh(res),
    "geodesic-disk-hyperbolic": lambda res: hyperbolic_disk_mesh(res),
    "critical-catenoid": lambda res: catenoid_mesh(res),
}


# ---------------------------------------------------------------------------
# second fundamental form and mean curvature


def vertex_neighbours(mesh: SurfaceMesh, rings: int = 2) -> list[np.ndarray]:
    """Vertices within ``rings`` edges of each vertex (excluding the vertex)."""
    nv = len(mesh.vertices)
    tri = mesh.triangles
    r = np.concatenate([tri[:, 0], tri[:, 1], tri[:, 2], tri[:, 1], tri[:, 2], tri[:, 0]])
    c = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 0], tri[:, 0], tri[:, 1], tri[:, 2]])
    adj = sparse.csr_matrix((np.ones(r.size), (r, c)), shape=(nv, nv))
    adj.data[:] = 1.0
    reach = adj.copy()
    step = adj
    for _ in range(rings - 1):
        step = step @ adj
        reach = reach + step
    reach = reach.tocsr()
    out = []
    for i in range(nv):
        nb = reach.indices[reach.indptr[i]:reach.indptr[i + 1]]
        out.append(nb[nb != i])
    return out


def _tangent_frame(mesh: SurfaceMesh, i: int, hint: np.ndarray) -> np.ndarray:
    """Orthonormal ``(e1, e2, nu)`` at vertex ``i`` in the model metric."""
    model, p, nu = mesh.model, mesh.vertices[i], mesh.normals[i]
    basis = []
    for v in [hint, *np.eye(p.size)]:
        w = tangent_part(mesh.K, p, v) - inner(model, v, nu) * nu
        for b in basis:
            w = w - inner(model, w, b) * b
        nw = math.sqrt(max(inner(model, w, w), 0.0))
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == 2:
            break
    return np.array([basis[0], basis[1], nu])


def second_fundamental_form_sq(mesh: SurfaceMesh, rings: int = 2) -> np.ndarray:
    """``|A|^2`` at each vertex from a least-squares quadratic graph fit.

    Neighbours are mapped to ``T_p M`` with the log map, written in the frame
    ``(e1, e2, nu)`` and fitted by ``h = c1 u + c2 v + (a u^2 + 2 b u v + c v^2)/2``.
    """
    nbrs = vertex_neighbours(mesh, rings)
    model = mesh.model
    out = np.empty(len(mesh.vertices))
    for i, nb in enumerate(nbrs):
        if nb.size < 5:
            raise FitError(f"vertex {i}: stencil has {nb.size} points, need 5")
        W = log_map(mesh.K, mesh.vertices[i], mesh.vertices[nb])
        F = _tangent_frame(mesh, i, W[0])
        loc = inner(model, W[:, None, :], F[None, :, :])
        x, y, h = loc[:, 0], loc[:, 1], loc[:, 2]
        D = np.stack([x, y, 0.5 * x * x, x * y, 0.5 * y * y], axis=1)
        scale = np.abs(D).max(axis=0)
        sol, _, rank, sv = np.linalg.lstsq(D / scale, h, rcond=None)
        if rank < 5 or sv[-1] < 1e-8 * sv[0]:
            raise FitError(f"vertex {i}: degenerate fit stencil")
        c1, c2, a, b, c = sol / scale
        g = np.array([[1 + c1 * c1, c1 * c2], [c1 * c2, 1 + c2 * c2]])
        A = np.array([[a, b], [b, c]]) / math.sqrt(1 + c1 * c1 + c2 * c2)
        gi = np.linalg.inv(g)
        out[i] = float(np.trace(gi @ A @ gi @ A))
    return out


def _cotangents(l: np.ndarray, area: np.ndarray) -> np.ndarray:
    a2 = l**2
    cot = np.empty_like(l)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        cot[:, i] = (a2[:, j] + a2[:, k] - a2[:, i]) / (4 * area)
    return cot


def mean_curvature_residual(mesh: SurfaceMesh) -> np.ndarray:
    """``|<Delta_h X, nu>|`` at interior vertices (cotangent Laplacian of position).

    In curved models the position differences are replaced by log-map vectors,
    so a totally geodesic surface has residual zero.
    """
    l = mesh.edge_lengths()
    area = _heron(l)
    cot = _cotangents(l, area)
    nv = len(mesh.vertices)
    lump = np.zeros(nv)
    np.add.at(lump, mesh.triangles.ravel(), np.repeat(area / 3, 3))
    Hn = np.zeros(nv)
    tri = mesh.triangles
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        w = 0.5 * cot[:, i]
        for a, b in ((tri[:, j], tri[:, k]), (tri[:, k], tri[:, j])):
            d = log_map(mesh.K, mesh.vertices[a], mesh.vertices[b])
            np.add.at(Hn, a, w * inner(mesh.model, d, mesh.normals[a]))
    res = np.abs(Hn / lump)
    return res[mesh.interior_mask]


def check_minimality(mesh: SurfaceMesh, tol: float = MINIMALITY_TOL) -> float:
    """Return the max mean-curvature residual; raise :class:`NonMinimalError` above ``tol``."""
    res = float(mean_curvature_residual(mesh).max())
    if res > tol:
        raise NonMinimalError(f"{mesh.name}: mean curvature residual {res:.3e} exceeds {tol:.1e}")
    return res


# ---------------------------------------------------------------------------
# quadratic form


@dataclass
class StabilityData:
    """Assembled second-variation form and its lowest Robin eigenpairs.

    ``Q = stiffness - potential - k_bd * boundary``; eigenpairs solve
    ``Q phi = lambda M phi``.
    """

    Q: sparse.csr_matrix
    mass: sparse.csr_matrix
    boundary: sparse.csr_matrix
    stiffness: sparse.csr_matrix
    potential: sparse.csr_matrix
    k_boundary: float
    A2: np.ndarray
    lam1: float = math.nan
    lam2: float = math.nan
    phi1: np.ndarray | None = None

    def form(self, phi) -> float:
        phi = np.asarray(phi, dtype=float)
        return float(phi @ (self.Q @ phi))

    def rayleigh(self, phi) -> float:
        phi = np.asarray(phi, dtype=float)
        return self.form(phi) / float(phi @ (self.mass @ phi))

    @property
    def gap(self) -> float:
        return self.lam2 - self.lam1

    def to_dict(self) -> dict:
        return {"lambda1": self.lam1, "lambda2": self.lam2, "gap": self.gap,
                "k_boundary": self.k_boundary, "vertices": int(self.Q.shape[0])}


def _p1_matrices(mesh: SurfaceMesh, q_tri: np.ndarray):
    l = mesh.edge_lengths()
    area = _heron(l)
    cot = _cotangents(l, area)
    tri = mesh.triangles
    nv = len(mesh.vertices)
    rows, cols, sv, mv, pv = [], [], [], [], []
    local_mass = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 12.0
    for a in range(3):
        for b in range(3):
            rows.append(tri[:, a])
            cols.append(tri[:, b])
            if a == b:
                j, k = (a + 1) % 3, (a + 2) % 3
                sv.append(0.5 * (cot[:, j] + cot[:, k]))
            else:
                c = 3 - a - b
                sv.append(-0.5 * cot[:, c])
            mv.append(local_mass[a, b] * area)
            pv.append(local_mass[a, b] * area * q_tri)
    r, c = np.concatenate(rows), np.concatenate(cols)
    S = sparse.coo_matrix((np.concatenate(sv), (r, c)), shape=(nv, nv)).tocsr()
    M = sparse.coo_matrix((np.concatenate(mv), (r, c)), shape=(nv, nv)).tocsr()
    P = sparse.coo_matrix((np.concatenate(pv), (r, c)), shape=(nv, nv)).tocsr()
    return S, M, P, area


def _boundary_matrix(mesh: SurfaceMesh) -> sparse.csr_matrix:
    e = mesh.boundary_edges
    le = distance(mesh.K, mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]])
    nv = len(mesh.vertices)
    r = np.concatenate([e[:, 0], e[:, 1], e[:, 0], e[:, 1]])
    c = np.concatenate([e[:, 0], e[:, 1], e[:, 1], e[:, 0]])
    v = np.concatenate([le / 3, le / 3, le / 6, le / 6])
    return sparse.coo_matrix((v, (r, c)), shape=(nv, nv)).tocsr()


def assemble(mesh: SurfaceMesh, K: float | None = None, R: float | None = None) -> StabilityData:
    """Assemble the P1 second-variation form on ``mesh``.

    ``K`` and ``R`` default to the mesh's own ambient data; passing them
    explicitly must agree with it.
    """
    K = mesh.K if K is None else float(K)
    R = mesh.R if R is None else float(R)
    if K != mesh.K or R != mesh.R:
        raise ValueError("(K, R) disagree with the mesh header")
    A2 = second_fundamental_form_sq(mesh)
    q_tri = 2.0 * K + A2[mesh.triangles].mean(axis=1)
    S, M, P, _ = _p1_matrices(mesh, q_tri)
    B = _boundary_matrix(mesh)
    kb = boundary_curvature(K, R)
    Q = (S - P - kb * B).tocsr()
    Q = 0.5 * (Q + Q.T)
    return StabilityData(Q.tocsr(), M, B, S, P, kb, A2)


def _field_values(mesh: SurfaceMesh, phi) -> np.ndarray:
    if callable(phi):
        return np.asarray(phi(mesh), dtype=float)
    if isinstance(phi, str):
        return np.asarray(mesh.fields[phi], dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 0:
        return np.full(len(mesh.vertices), float(phi))
    return phi


def assemble_Q(mesh: SurfaceMesh, K: float, R: float, phi) -> float:
    """``Q(phi, phi)`` for vertex values, a constant, a field name or ``callable(mesh)``."""
    return assemble(mesh, K, R).form(_field_values(mesh, phi))


def certificate_field(mesh: SurfaceMesh) -> np.ndarray:
    """Instability test function: ``1`` for ``K >= 0`` and ``cosh(sqrt|K| r)`` for ``K < 0``."""
    if mesh.K >= 0:
        return np.ones(len(mesh.vertices))
    return np.cosh(math.sqrt(-mesh.K) * mesh.radii())


def Q_by_parts(mesh: SurfaceMesh, data: StabilityData, phi) -> float:
    """``Q`` in divergence form: ``-int phi L phi + int_bd phi (d_eta - k) phi``.

    Uses the lumped cotangent Laplacian at interior vertices and conormal
    derivatives from the P1 gradient in the triangles along the boundary.
    """
    phi = _field_values(mesh, phi)
    l = mesh.edge_lengths()
    area = _heron(l)
    nv = len(mesh.vertices)
    lump = np.zeros(nv)
    np.add.at(lump, mesh.triangles.ravel(), np.repeat(area / 3, 3))
    inner_mask = mesh.interior_mask
    lap = -(data.stiffness @ phi) / lump
    # boundary rows of the stiffness carry flux, so extend the Laplacian from interior neighbours
    e = np.concatenate([mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]],
                        mesh.triangles[:, [2, 0]]])
    e = e[~inner_mask[e[:, 0]] & inner_mask[e[:, 1]]]
    acc = np.zeros(nv)
    cnt = np.zeros(nv)
    np.add.at(acc, e[:, 0], lap[e[:, 1]])
    np.add.at(cnt, e[:, 0], 1.0)
    bnd = ~inner_mask
    if np.any(cnt[bnd] == 0):
        raise MeshError("boundary vertex without interior neighbour")
    lap[bnd] = acc[bnd] / cnt[bnd]
    q_v = 2.0 * mesh.K + data.A2
    interior = -np.sum(phi * lap * lump) - np.sum(q_v * phi**2 * lump)
    # conormal derivatives on boundary edges
    flux = 0.0
    bset = {tuple(e) for e in mesh.boundary_edges.tolist()}
    for t, tri in enumerate(mesh.triangles):
        for a in range(3):
            i, j, o = tri[a], tri[(a + 1) % 3], tri[(a + 2) % 3]
            if (i, j) not in bset:
                continue
            lij, ljo, loi = l[t, (a + 2) % 3], l[t, a], l[t, (a + 1) % 3]
            # place i at 0, j at (lij, 0), o above the edge
            ox = (lij**2 + loi**2 - ljo**2) / (2 * lij)
            oy = math.sqrt(max(loi**2 - ox**2, 0.0))
            gx = (phi[j] - phi[i]) / lij
            gy = (phi[o] - phi[i] - gx * ox) / oy
            flux += -gy * lij * 0.5 * (phi[i] + phi[j])
    bd = flux - data.k_boundary * float(phi @ (data.boundary @ phi))
    return float(interior + bd)


# ---------------------------------------------------------------------------
# eigenproblem


def _negative_inertia(A: sparse.csr_matrix, M: sparse.csr_matrix, sigma: float) -> int:
    """Number of eigenvalues below ``sigma`` via a symmetric LDU factorisation."""
    lu = splinalg.splu((A - sigma * M).tocsc(), permc_spec="MMD_AT_PLUS_A",
                       diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    return int(np.sum(lu.U.diagonal() < 0))


def robin_eigen(mesh: SurfaceMesh, K: float | None = None, R: float | None = None,
                data: StabilityData | None = None) -> StabilityData:
    """Lowest two eigenvalues of ``Q phi = lambda M phi``; ``phi1 > 0``, ``phi1' M phi1 = 1``."""
    data = assemble(mesh, K, R) if data is None else data
    A, M = data.Q, data.mass
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        w, v = linalg.eigh(A.toarray(), M.toarray(), subset_by_index=[0, 1])
    else:
        # shift below lambda_1, certified by inertia of A - sigma M
        sigma = data.rayleigh(np.ones(n)) - 1.0
        for _ in range(60):
            if _negative_inertia(A, M, sigma) == 0:
                break
            sigma -= 2.0 * abs(sigma) + 1.0
        else:
            raise EigenError("could not bracket the lowest eigenvalue")
        try:
            w, v = splinalg.eigsh(A, k=2, M=M, sigma=sigma, which="LM", v0=np.ones(n),
                                  tol=1e-12)
        except splinalg.ArpackNoConvergence as exc:
            raise EigenError("eigensolver did not converge") from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    phi = v[:, 0]
    phi = phi / math.sqrt(float(phi @ (M @ phi)))
    if phi.sum() < 0:
        phi = -phi
    data.lam1, data.lam2, data.phi1 = float(w[0]), float(w[1]), phi
    if abs(data.rayleigh(phi) - data.lam1) > 1e-8 * max(1.0, abs(data.lam1)):
        raise EigenError("eigenpair fails the Rayleigh consistency check")
    return data


def euclidean_disk_lambda1() -> float:
    """Continuum ``lambda_1`` of the flat unit disk: ``-mu^2`` with ``mu I_1(mu) = I_0(mu)``."""
    from scipy import optimize, special

    mu = optimize.brentq(lambda m: m * special.i1(m) - special.i0(m), 0.5, 5.0, xtol=1e-15)
    return -mu * mu


# ---------------------------------------------------------------------------
# hyperbolic identities


def _orthonormal_tangent(K: float, p: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    model = model_for(K)
    vecs = rng.standard_normal((p.size, p.size)) if rng is not None else np.eye(p.size)
    basis = []
    for v in vecs:
        w = tangent_part(K, p, v)
        for b in basis:
            w = w - inner(model, w, b) * b
        nw = math.sqrt(max(inner(model, w, w), 0.0))
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == p.size - 1:
            break
    return np.array(basis)


def _cosh_r_normal(p: np.ndarray, E: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``cosh r`` at ``exp_p(v E)`` in ``H^n`` (``K = -1``), with ``cosh r = X_0``."""
    X = exp_map(-1.0, p, np.atleast_2d(v) @ E)
    return X[:, 0]


def fd_hessian_cosh_r(p, E=None, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Hessian of ``cosh r`` in normal coordinates at ``p``."""
    p = np.asarray(p, dtype=float)
    if E is None:
        E = _orthonormal_tangent(-1.0, p)
    n = E.shape[0]
    f0 = p[0]
    # roundoff of the second difference is about eps * f / h^2
    if 8 * np.finfo(float).eps * abs(f0) / h**2 > HESS_TOL:
        raise StepSizeError(f"step {h:g} too small: roundoff exceeds {HESS_TOL:g}")
    I = np.eye(n) * h
    H = np.empty((n, n))
    for i in range(n):
        fp, fm = _cosh_r_normal(p, E, np.stack([I[i], -I[i]]))
        H[i, i] = (fp - 2 * f0 + fm) / h**2
        for j in range(i):
            pts = np.stack([I[i] + I[j], I[i] - I[j], -I[i] + I[j], -I[i] - I[j]])
            a, b, c, d = _cosh_r_normal(p, E, pts)
            H[i, j] = H[j, i] = (a - b - c + d) / (4 * h * h)
    return H


def directional_second_derivative(p, v, h: float = FD_STEP) -> float:
    """``d^2/dt^2 cosh r(exp_p(t v))`` at ``t = 0`` by central differences."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    X = exp_map(-1.0, p, np.stack([h * v, -h * v]))
    return float((X[0, 0] - 2 * p[0] + X[1, 0]) / h**2)


def hyperbolic_samples(rng: np.random.Generator, m: int, n: int = 3, r_max: float = 2.0) -> np.ndarray:
    """Random points of ``H^n`` with radius uniform in ``[0, r_max]``."""
    d = rng.standard_normal((m, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(0, r_max, m)
    return np.concatenate([np.cosh(r)[:, None], np.sinh(r)[:, None] * d], axis=1)


def hess_identity_check(points, h: float = FD_STEP, seed: int | None = 0) -> float:
    """Max Frobenius residual ``|Hess cosh r - cosh r g|`` over hyperboloid points.

    Normal coordinates use a random orthonormal frame at each point (or the
    coordinate frame when ``seed`` is ``None``).
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if np.max(np.abs(inner("hyperboloid", P, P) + 1)) > 1e-10:
        raise ValueError("points must lie on the unit hyperboloid")
    rng = None if seed is None else np.random.default_rng(seed)
    worst = 0.0
    for p in P:
        E = _orthonormal_tangent(-1.0, p, rng)
        H = fd_hessian_cosh_r(p, E, h)
        worst = max(worst, float(np.linalg.norm(H - p[0] * np.eye(len(E)))))
    return worst


# ---------------------------------------------------------------------------
# isoperimetric calibration in H^n


def iso_phi(n: int, r) -> np.ndarray:
    """``phi(r) = sinh^{2-n}(r) int_0^r sinh^{n-2}`` for the radial field in ``H^n``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if n == 3:
        return np.divide(np.cosh(r) - 1, np.sinh(r), out=np.zeros_like(r), where=r > 0)
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        if ri == 0:
            out[i] = 0.0
        else:
            val, _ = integrate.quad(lambda s: (math.sinh(s) / math.sinh(ri)) ** (n - 2), 0, ri,
                                    epsabs=1e-14, epsrel=1e-13)
            out[i] = val
    return out


def iso_phi_prime(n: int, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 1 - (n - 2) * iso_phi(n, r) / np.tanh(r)


def geodesic_ball_measures(m: int, R: float) -> tuple[float, float]:
    """Volume and boundary area of a totally geodesic ``m``-ball of radius ``R`` in ``H^n``."""
    vol, _ = integrate.quad(lambda s: math.sinh(s) ** (m - 1), 0, R, epsabs=1e-14, epsrel=1e-13)
    return beta(m - 1) * vol, beta(m - 1) * math.sinh(R) ** (m - 1)


def iso_ratio(n: int, area: float, boundary: float) -> float:
    """``|bd S|^(n-1) / |S|^(n-2)`` for a hypersurface ``S`` in an ``n``-ball."""
    return boundary ** (n - 1) / area ** (n - 2)


@dataclass
class IsoReport:
    n: int
    R: float
    area: float
    boundary: float
    div_min: float
    div_max: float
    integral_div: float
    phi_R: float
    iso1_rhs: float
    iso1_slack: float
    ratio: float
    ratio_model: float
    ratio_rel: float
    mean_curvature: float

    @property
    def div_ok(self) -> bool:
        return self.div_min >= 1 - 1e-6

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _triangle_points(mesh: SurfaceMesh) -> np.ndarray:
    P = mesh.vertices[mesh.triangles].mean(axis=1)
    if mesh.K != 0:
        P = P / np.sqrt(inner(mesh.model, P, P) * mesh.K)[:, None] / math.sqrt(abs(mesh.K))
    return P


def div_radial_field(mesh: SurfaceMesh) -> np.ndarray:
    """``div_S Phi`` at each triangle, using the triangle's own tangent plane.

    ``nabla_v Phi = phi' <v, d_r> d_r + phi coth r (v - <v, d_r> d_r)``, so the
    divergence over an orthonormal pair ``e_1, e_2`` is
    ``sum_i phi' <e_i, d_r>^2 + phi coth r (1 - <e_i, d_r>^2)``.
    """
    if mesh.K != -1:
        raise ValueError("the radial calibration is set up for K = -1")
    n = 3
    model = mesh.model
    C = _triangle_points(mesh)
    o = centre(-1.0)
    r = radial_distance(-1.0, C)
    dr = (C[:, :1] * C - o) / np.sinh(r)[:, None]
    phi = iso_phi(n, r)
    dphi = iso_phi_prime(n, r)
    W = [log_map(-1.0, C, mesh.vertices[mesh.triangles[:, i]]) for i in range(3)]
    e1 = W[1] - W[0]
    e1 /= np.sqrt(inner(model, e1, e1))[:, None]
    e2 = W[2] - W[0]
    e2 -= inner(model, e2, e1)[:, None] * e1
    e2 /= np.sqrt(inner(model, e2, e2))[:, None]
    s = inner(model, e1, dr) ** 2 + inner(model, e2, dr) ** 2
    return 2 * phi / np.tanh(r) + s * (dphi - phi / np.tanh(r))


def iso_check(mesh: SurfaceMesh, gate: float = MINIMALITY_TOL) -> IsoReport:
    """Calibration chain for a free boundary minimal surface in ``B_{R;-1}`` (``n = 3``).

    Compares ``|S| <= int div Phi = phi(R) |bd S|`` and the ratio
    ``|bd S|^2 / |S|`` with the totally geodesic disk of the same radius.
    """
    H = check_minimality(mesh, gate)
    n = 3
    area_t = geodesic_triangle_areas(mesh)
    div = div_radial_field(mesh)
    e = mesh.boundary_edges
    bd = float(distance(-1.0, mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]]).sum())
    area = float(area_t.sum())
    phi_R = float(iso_phi(n, mesh.R)[0])
    rhs = phi_R * bd
    ball, sphere = geodesic_ball_measures(n - 1, mesh.R)
    ratio = iso_ratio(n, area, bd)
    model_ratio = iso_ratio(n, ball, sphere)
    return IsoReport(n, mesh.R, area, bd, float(div.min()), float(div.max()),
                     float(np.sum(div * area_t)), phi_R, rhs, (rhs - area) / rhs, ratio,
                     model_ratio, (ratio - model_ratio) / model_ratio, H)


def iso_closed_form(n: int, R: float) -> dict:
    """Calibration chain on the totally geodesic ``(n-1)``-ball in ``B^n_{R;-1}`` by quadrature.

    On that ball ``div Phi = 1`` identically, so ``|S| = phi(R) |bd S|`` and the
    ratio inequality is an equality.
    """
    area, bd = geodesic_ball_measures(n - 1, R)
    phi_R = float(iso_phi(n, R)[0])
    ratio = iso_ratio(n, area, bd)
    return {"n": n, "R": R, "area": area, "boundary": bd, "phi_R": phi_R,
            "iso1_slack": (phi_R * bd - area) / area,
            "ratio": ratio, "ratio_from_phi": phi_R ** (-(n - 1)) * area,
            "ratio_rel": (phi_R ** (-(n - 1)) * area - ratio) / ratio}
