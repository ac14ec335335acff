"""Weight functions on a momentum polytope with closed-form derivatives."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polytope import MomentumPolytope, quadrature

FAMILIES = ("constant", "affine", "exponential", "power", "polynomial")


class WeightError(ValueError):
    pass


class BadParams(WeightError):
    pass


class NotPositiveOnP(WeightError):
    pass


def _as_points(p, dim):
    arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 0 or (dim > 1 and arr.ndim == 1)
    return arr.reshape(-1, dim), scalar


@dataclass(frozen=True)
class WeightFunction:
    """A smooth function on the polytope.

    ``params`` by family (``xi`` is a vector of length ``dim``):

    * constant:    ``value``
    * affine:      ``a + <xi, p>`` with keys ``a``, ``xi``
    * exponential: ``exp(<xi, p>)`` with key ``xi``
    * power:       ``(<xi, p> + c) ** alpha`` with keys ``xi``, ``c``, ``alpha``
    * polynomial:  ``sum coeff * p^k``; key ``coeffs`` is a list of numbers
      (dim 1, ascending degree) or of ``[i, j, coeff]`` triples (dim 2)

    ``scale`` multiplies the whole function.
    """

    family: str
    params: dict
    dim: int
    scale: float = 1.0
    positive: bool = field(default=False, compare=False)

    # -- evaluation -------------------------------------------------------
    def _eval(self, x):
        f, pr = self.family, self.params
        n = len(x)
        if f == "constant":
            v = np.full(n, float(pr["value"]))
            return v, np.zeros((n, self.dim)), np.zeros((n, self.dim, self.dim))
        if f == "affine":
            xi = np.asarray(pr["xi"], float)
            v = pr["a"] + x @ xi
            return v, np.broadcast_to(xi, (n, self.dim)).copy(), np.zeros((n, self.dim, self.dim))
        if f == "exponential":
            xi = np.asarray(pr["xi"], float)
            v = np.exp(x @ xi)
            return v, v[:, None] * xi, v[:, None, None] * np.outer(xi, xi)
        if f == "power":
            xi = np.asarray(pr["xi"], float)
            al = float(pr["alpha"])
            base = x @ xi + pr["c"]
            with np.errstate(invalid="ignore", divide="ignore"):
                v = base**al
                g1 = al * base ** (al - 1)
                g2 = al * (al - 1) * base ** (al - 2)
            return v, g1[:, None] * xi, g2[:, None, None] * np.outer(xi, xi)
        if f == "polynomial":
            return self._eval_poly(x)
        raise BadParams(f"unknown family {f!r}")

    def _eval_poly(self, x):
        n = len(x)
        v = np.zeros(n)
        g = np.zeros((n, self.dim))
        h = np.zeros((n, self.dim, self.dim))
        if self.dim == 1:
            c = np.asarray(self.params["coeffs"], float)
            P = np.polynomial.Polynomial(c)
            t = x[:, 0]
            v = P(t)
            g[:, 0] = P.deriv(1)(t)
            h[:, 0, 0] = P.deriv(2)(t)
            return v, g, h
        X, Y = x[:, 0], x[:, 1]

        for i, j, cf in self.params["coeffs"]:
            i, j = int(i), int(j)
            xi = [X**i, i * X ** max(i - 1, 0), i * (i - 1) * X ** max(i - 2, 0)]
            yj = [Y**j, j * Y ** max(j - 1, 0), j * (j - 1) * Y ** max(j - 2, 0)]
            v += cf * xi[0] * yj[0]
            g[:, 0] += cf * xi[1] * yj[0]
            g[:, 1] += cf * xi[0] * yj[1]
            h[:, 0, 0] += cf * xi[2] * yj[0]
            h[:, 1, 1] += cf * xi[0] * yj[2]
            h[:, 0, 1] += cf * xi[1] * yj[1]
        h[:, 1, 0] = h[:, 0, 1]
        return v, g, h

    def __call__(self, p):
        x, scalar = _as_points(p, self.dim)
        v = self.scale * self._eval(x)[0]
        return v[0] if scalar else v

    def grad(self, p):
        x, scalar = _as_points(p, self.dim)
        g = self.scale * self._eval(x)[1]
        return g[0] if scalar else g

    def hess(self, p):
        x, scalar = _as_points(p, self.dim)
        h = self.scale * self._eval(x)[2]
        return h[0] if scalar else h

    # dim-1 shorthands
    def d1(self, p):
        return self.grad(p)[..., 0]

    def d2(self, p):
        return self.hess(p)[..., 0, 0]

    def scaled(self, lam: float) -> "WeightFunction":
        return WeightFunction(self.family, self.params, self.dim, self.scale * lam, self.positive and lam > 0)

    def times_affine(self, const: float, slope) -> "AffineProductWeight":
        """The weight ``(const + <slope, p>) * self``."""
        return AffineProductWeight(self, float(const), np.atleast_1d(np.asarray(slope, float)))


@dataclass(frozen=True)
class AffineProductWeight:
    """``l * w`` for an affine ``l``; used for the relative energy."""

    base: WeightFunction
    const: float
    slope: np.ndarray

    @property
    def dim(self):
        return self.base.dim

    def __call__(self, p):
        x, scalar = _as_points(p, self.dim)
        out = (self.const + x @ self.slope) * self.base.scale * self.base._eval(x)[0]
        return out[0] if scalar else out

    def grad(self, p):
        x, scalar = _as_points(p, self.dim)
        l = self.const + x @ self.slope
        w = self.base.scale * self.base._eval(x)[0]
        g = self.base.scale * self.base._eval(x)[1]
        out = l[:, None] * g + w[:, None] * self.slope
        return out[0] if scalar else out

    def hess(self, p):
        x, scalar = _as_points(p, self.dim)
        l = self.const + x @ self.slope
        _, g, h = self.base._eval(x)
        g, h = self.base.scale * g, self.base.scale * h
        cross = g[:, :, None] * self.slope[None, None, :]
        out = l[:, None, None] * h + cross + np.swapaxes(cross, 1, 2)
        return out[0] if scalar else out

    def d1(self, p):
        return self.grad(p)[..., 0]

    def d2(self, p):
        return self.hess(p)[..., 0, 0]


def _check_params(family, params, dim):
    need = {
        "constant": {"value"},
        "affine": {"a", "xi"},
        "exponential": {"xi"},
        "power": {"xi", "c", "alpha"},
        "polynomial": {"coeffs"},
    }
    if family not in need:
        raise BadParams(f"unknown family {family!r}; expected one of {FAMILIES}")
    missing = need[family] - set(params)
    extra = set(params) - need[family]
    if missing or extra:
        raise BadParams(f"{family}: missing {sorted(missing)}, unexpected {sorted(extra)}")
    if "xi" in params:
        xi = np.atleast_1d(np.asarray(params["xi"], float))
        if xi.shape != (dim,) or not np.all(np.isfinite(xi)):
            raise BadParams(f"xi must be a finite vector of length {dim}")
        params = {**params, "xi": xi}
    if family == "polynomial":
        cs = params["coeffs"]
        if dim == 1:
            cs = np.atleast_1d(np.asarray(cs, float))
            if cs.ndim != 1 or len(cs) == 0:
                raise BadParams("polynomial coeffs must be a non-empty list")
        else:
            if any(len(t) != 3 for t in cs):
                raise BadParams("2-D polynomial coeffs are [i, j, coeff] triples")
        params = {**params, "coeffs": cs}
    for k in ("value", "a", "c", "alpha"):
        if k in params and not np.isfinite(float(params[k])):
            raise BadParams(f"{k} must be finite")
    return params


def make_weight(family: str, params: dict, P: MomentumPolytope, require_positive: bool = False,
                scale: float = 1.0) -> WeightFunction:
    """Build a weight on ``P`` and record whether it is positive there.

    The power family is only defined where its base is positive, so a base
    that fails to be positive on ``P`` is rejected regardless of
    ``require_positive``.
    """
    params = _check_params(family, dict(params), P.dim)
    if family == "power":
        base = P.vertices @ params["xi"] + params["c"]
        if np.any(base <= 0):
            raise NotPositiveOnP(f"power base <xi,p> + c reaches {base.min():g} <= 0 on P")
    w = WeightFunction(family, params, P.dim, float(scale))
    rule = quadrature(P)
    pts = np.vstack([rule.nodes, P.vertices, *rule.facet_nodes])
    vals = w(pts if P.dim > 1 else pts[:, 0])
    if not np.all(np.isfinite(vals)):
        raise BadParams("weight is not finite on P")
    positive = bool(np.min(vals) > 0)
    if require_positive and not positive:
        raise NotPositiveOnP(f"{family} weight has minimum {np.min(vals):g} on P")
    object.__setattr__(w, "positive", positive)
    return w


def constant_weight(P: MomentumPolytope, value: float = 1.0) -> WeightFunction:
    return make_weight("constant", {"value": value}, P)
