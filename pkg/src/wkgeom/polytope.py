"""Labelled momentum polytopes in dimension 1 and 2, with quadrature.

A polytope is given by facets ``(n_F, c_F)`` with ``n_F`` a primitive inward
integer normal, so that ``P = {p : <n_F, p> + c_F >= 0}``.  The boundary
measure on a facet is the lattice measure ``dsigma`` characterised by
``dsigma ^ dL_F = dmu`` with ``L_F = <n_F, .> + c_F``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd

import numpy as np
from scipy.optimize import linprog
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


class PolytopeError(ValueError):
    """Malformed facet data."""


class Unbounded(PolytopeError):
    pass


class EmptyInterior(PolytopeError):
    pass


class NotDelzant(PolytopeError):
    pass


class SingularGram(ArithmeticError):
    """The Gram matrix of affine functions for a density is numerically singular."""


DEFAULT_ORDER = {1: 32, 2: 12}
_VERTEX_TOL = 1e-12


@dataclass(frozen=True)
class MomentumPolytope:
    dim: int
    normals: np.ndarray  # (F, dim) integer
    offsets: np.ndarray  # (F,)
    vertices: np.ndarray  # (V, dim); counter-clockwise for dim 2
    # for dim 2: indices (i, j) of the two facets through each vertex
    vertex_facets: tuple = field(default=())

    @property
    def n_facets(self) -> int:
        return len(self.offsets)

    @property
    def interval(self) -> tuple[float, float]:
        if self.dim != 1:
            raise PolytopeError("interval() only makes sense for dim 1")
        return float(self.vertices[0, 0]), float(self.vertices[1, 0])

    @property
    def barycenter(self) -> np.ndarray:
        rule = quadrature(self, 4)
        return rule.integrate(rule.nodes) / rule.integrate(np.ones(len(rule.weights)))

    def affine_value(self, facet: int, p) -> np.ndarray:
        """L_F(p) = <n_F, p> + c_F."""
        p = np.asarray(p, dtype=float).reshape(-1, self.dim)
        return p @ self.normals[facet] + self.offsets[facet]

    def contains(self, p, tol: float = 0.0) -> np.ndarray:
        p = np.asarray(p, dtype=float).reshape(-1, self.dim)
        return np.all(p @ self.normals.T + self.offsets >= -tol, axis=1)


def interval(a: float, b: float) -> MomentumPolytope:
    """The interval [a, b] with normals +1 at a and -1 at b."""
    return build_polytope([((1,), -a), ((-1,), b)])


def _primitive(n) -> np.ndarray:
    n = np.asarray(n)
    if n.ndim != 1 or not np.all(np.equal(np.mod(n, 1), 0)):
        raise PolytopeError(f"normal {n!r} is not an integer vector")
    n = n.astype(int)
    g = 0
    for k in n:
        g = gcd(g, int(k))
    if g != 1:
        raise PolytopeError(f"normal {n.tolist()} is not primitive")
    return n


def build_polytope(facets) -> MomentumPolytope:
    """Build and validate a polytope from ``[(normal, offset), ...]``.

    Raises ``Unbounded``, ``EmptyInterior`` or ``NotDelzant`` (dimension 2).
    """
    facets = list(facets)
    if not facets:
        raise PolytopeError("no facets")
    normals = [np.atleast_1d(np.asarray(n)) for n, _ in facets]
    dim = len(normals[0])
    if dim not in (1, 2) or any(len(n) != dim for n in normals):
        raise PolytopeError("normals must all have dimension 1 or all dimension 2")
    if len(facets) < dim + 1:
        raise PolytopeError(f"need at least {dim + 1} facets")
    N = np.array([_primitive(n) for n in normals])
    c = np.array([float(off) for _, off in facets])

    if dim == 1:
        if len(facets) != 2:
            raise PolytopeError("an interval has exactly two facets")
        if N[0, 0] == N[1, 0]:
            raise Unbounded("both facet normals point the same way")
        lo_idx = 0 if N[0, 0] == 1 else 1
        lo = -c[lo_idx]
        hi = c[1 - lo_idx]
        if not hi > lo:
            raise EmptyInterior(f"[{lo}, {hi}] has empty interior")
        order = [lo_idx, 1 - lo_idx]
        return MomentumPolytope(1, N[order], c[order], np.array([[lo], [hi]]))

    # dim == 2; the recession cone is nonzero iff some edge direction of the
    # normal fan satisfies every constraint
    for n in N:
        for d in (np.array([-n[1], n[0]]), np.array([n[1], -n[0]])):
            if np.all(N @ d >= 0):
                raise Unbounded(f"recession direction {d.tolist()}")
    norms = np.linalg.norm(N, axis=1)
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=np.column_stack([-N, norms]),
        b_ub=c,
        bounds=[(None, None), (None, None), (None, None)],
        method="highs",
    )
    if res.status != 0 or res.x[2] <= 1e-12:
        raise EmptyInterior("no interior point")

    verts, pairs = [], []
    F = len(c)
    for i in range(F):
        for j in range(i + 1, F):
            M = N[[i, j]].astype(float)
            if abs(np.linalg.det(M)) < 0.5:
                continue
            p = np.linalg.solve(M, -c[[i, j]])
            slack = N @ p + c
            if np.all(slack >= -_VERTEX_TOL * (1 + np.abs(c).max())):
                verts.append(p)
                pairs.append((i, j))
    verts = np.array(verts) + 0.0  # no negative zeros
    centre = verts.mean(axis=0)
    ang = np.arctan2(verts[:, 1] - centre[1], verts[:, 0] - centre[0])
    order = np.argsort(ang)
    verts, pairs = verts[order], [pairs[k] for k in order]
    # coincident vertices mean three facets through one point
    gaps = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
    if np.any(gaps < 1e-10):
        raise NotDelzant("more than two facets meet at a vertex")
    used = {k for pr in pairs for k in pr}
    if len(used) != F:
        raise PolytopeError(f"redundant facets {sorted(set(range(F)) - used)}")
    for (i, j), p in zip(pairs, verts):
        det = round(np.linalg.det(N[[i, j]].astype(float)))
        if abs(det) != 1:
            raise NotDelzant(
                f"normals {N[i].tolist()}, {N[j].tolist()} at vertex {p.round(12).tolist()} have determinant {det}"
            )
    return MomentumPolytope(2, N, c, verts, tuple(pairs))


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray  # (K, dim) interior nodes
    weights: np.ndarray  # (K,)
    facet_nodes: tuple  # per facet: (K_F, dim)
    facet_weights: tuple  # per facet: (K_F,)
    order: int

    def integrate(self, values) -> np.ndarray:
        """Sum of weights * values over interior nodes (values leading axis = nodes)."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))

    def integrate_boundary(self, fn) -> float:
        """Integral over the boundary of ``fn`` (callable on (K, dim) arrays) against dsigma."""
        return float(sum(np.dot(w, fn(x)) for x, w in zip(self.facet_nodes, self.facet_weights)))

    def facet_integral(self, facet: int, fn) -> float:
        return float(np.dot(self.facet_weights[facet], fn(self.facet_nodes[facet])))

    @property
    def points(self) -> np.ndarray:
        """Interior nodes as a flat array when dim == 1."""
        return self.nodes[:, 0] if self.nodes.shape[1] == 1 else self.nodes


def _gauss_triangle(v0, v1, v2, m: int):
    # Duffy map p = v0 + r*((v1 - v0) + s*(v2 - v1)) has Jacobian r * 2|T|;
    # Gauss-Jacobi with weight (1 + x) absorbs the factor r.
    xs, ws = _leggauss(m)
    xr, wr = roots_jacobi(m, 0.0, 1.0)
    r = (xr + 1) / 2
    s = (xs + 1) / 2
    R, S = np.meshgrid(r, s, indexing="ij")
    W = np.outer(wr / 4, ws / 2)
    e1, e2 = v1 - v0, v2 - v1
    pts = v0 + np.multiply.outer(R, e1) + np.multiply.outer(R * S, e2)
    area2 = abs(e1[0] * e2[1] - e1[1] * e2[0])
    return pts.reshape(-1, 2), (W * area2).ravel()


def quadrature(P: MomentumPolytope, order: int | None = None) -> QuadratureRule:
    """Interior and facet quadrature.

    dim 1: ``order``-point Gauss-Legendre, exact to degree ``2*order - 1``;
    facets are unit point masses.  dim 2: fan triangulation from the vertex
    centroid with ``order + 1`` collapsed Gauss points per direction on each
    triangle (exact to degree ``2*order + 1``); each edge gets a Gauss rule in
    the lattice arclength.
    """
    if order is None:
        order = DEFAULT_ORDER[P.dim]
    if order < 1:
        raise ValueError("order must be >= 1")
    if P.dim == 1:
        a, b = P.interval
        x, w = _leggauss(order)
        nodes = (a + b) / 2 + (b - a) / 2 * x
        fn = (np.array([[a]]), np.array([[b]]))
        fw = (np.ones(1), np.ones(1))
        return QuadratureRule(nodes[:, None], w * (b - a) / 2, fn, fw, order)

    m = order + 1
    centre = P.vertices.mean(axis=0)
    V = P.vertices
    pts, wts = [], []
    for k in range(len(V)):
        p, w = _gauss_triangle(centre, V[k], V[(k + 1) % len(V)], m)
        pts.append(p)
        wts.append(w)
    xg, wg = _leggauss(m)
    fnodes, fweights = [], []
    for F in range(P.n_facets):
        n = P.normals[F]
        on = [k for k in range(len(V)) if abs(V[k] @ n + P.offsets[F]) < 1e-9 * (1 + abs(P.offsets[F]))]
        p0, p1 = V[on[0]], V[on[1]]
        e = np.array([-n[1], n[0]], dtype=float)  # primitive lattice direction
        length = abs((p1 - p0) @ e) / (e @ e)  # lattice length of the edge
        s = (xg + 1) / 2
        fnodes.append(p0 + np.outer(s, p1 - p0))
        fweights.append(wg / 2 * length)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), tuple(fnodes), tuple(fweights), order)


@dataclass(frozen=True)
class AffineMoments:
    mass: float
    first: np.ndarray  # integral of mu_i f
    gram: np.ndarray  # Gram matrix of (1, mu_1, ..., mu_l)
    min_eig: float  # smallest |eigenvalue|
    singular: bool


def affine_moments(P: MomentumPolytope, density, rule: QuadratureRule | None = None) -> AffineMoments:
    """Moments of ``density`` (callable or array on the rule's nodes) against affine functions."""
    rule = rule or quadrature(P)
    vals = density(rule.points) if callable(density) else np.asarray(density, dtype=float)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), rule.weights.shape)
    basis = np.column_stack([np.ones(len(rule.weights)), rule.nodes])
    gram = np.einsum("k,ki,kj->ij", rule.weights * vals, basis, basis)
    gram = (gram + gram.T) / 2
    eig = np.linalg.eigvalsh(gram)
    scale = np.einsum("k,ki,kj->ij", rule.weights * np.abs(vals), basis, basis)
    ref = max(np.abs(np.linalg.eigvalsh(scale)).max(), 1e-300)
    min_eig = float(np.abs(eig).min())
    return AffineMoments(
        mass=float(gram[0, 0]),
        first=gram[0, 1:].copy(),
        gram=gram,
        min_eig=min_eig,
        singular=bool(min_eig <= 1e-12 * ref or not np.any(vals)),
    )
