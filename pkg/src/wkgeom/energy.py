"""Energy functionals of invariant Kähler potentials on the interval, and polytope constants.

Every integral over X carries the angular factor ``2*pi`` per torus
dimension.  A metric is given by its relative potential ``f`` with respect
to the Guillemin reference (the fixed form ``omega``), used as is: constant
and linear parts of ``f`` are meaningful here, since the potential
``phi = psi_f - psi_0`` is compared at equal chart points.  ``f = 0`` is the
origin of every functional.

Chart forms integrate over the reference momentum ``mu0`` and use the
Legendre correspondence ``mu1 = mu1(mu0)`` at equal chart points.  Path
oracles integrate first variations along ``t -> u_G + t f``, for which
``dphi/dt = -f(mu_t)`` at a fixed chart point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Chebyshev

from .polytope import MomentumPolytope, SingularGram, affine_moments, interval, quadrature
from .toricgeom import (SymplecticPotential, _ab, as_relative, profile_from_relative_potential,
                        weighted_scalar_curvature)

TWO_PI = 2 * np.pi
CHART_NODES = 160
EPS_NODES = 32
PATH_STEPS = 64
THETAS = ("omega", "ric")


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gauss(n, lo=0.0, hi=1.0):
    x, w = _leggauss(n)
    return lo + (hi - lo) * (x + 1) / 2, w * (hi - lo) / 2


def chart_rule(n, a, b):
    """Gauss rule in theta for mu = a + (b - a)(1 - cos theta)/2.

    Integrands built from the Legendre correspondence vary on short scales
    near the endpoints; the substitution clusters nodes there.
    """
    th, w = _gauss(n, 0.0, np.pi)
    return a + (b - a) * (1 - np.cos(th)) / 2, w * (b - a) / 2 * np.sin(th)


def _poly(P) -> MomentumPolytope:
    return P if isinstance(P, MomentumPolytope) else interval(*_ab(P))


def _interval_of(f) -> tuple[float, float]:
    a, b = f.domain
    return float(a), float(b)


def _evalw(w, pts):
    if isinstance(w, (int, float)):
        return np.full(len(pts), float(w))
    return np.asarray(w(pts), float)


@dataclass(frozen=True)
class AffineFunction:
    a: float
    b: np.ndarray

    def __call__(self, p):
        p = np.asarray(p, float)
        if len(self.b) == 1:
            return self.a + self.b[0] * p
        return self.a + p.reshape(-1, len(self.b)) @ self.b

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([[self.a], self.b])

    def as_dict(self) -> dict:
        return {"a": float(self.a), "b": [float(x) for x in self.b]}


# -- polytope-level constants ------------------------------------------------

def _rule_values(P, fn, rule):
    pts = rule.points
    return _evalw(fn, pts)


def _boundary_moments(P, v, rule):
    """2 * integral over the boundary of (1, mu_i) v dsigma."""
    out = np.zeros(P.dim + 1)
    for x, wt in zip(rule.facet_nodes, rule.facet_weights):
        vals = _evalw(v, x if P.dim > 1 else x[:, 0])
        out[0] += np.dot(wt, vals)
        out[1:] += (wt * vals) @ x
    return 2 * out


def c_constant(P, v, w, H=None, order: int | None = None) -> float:
    """c_{v,w} = 2 * int_{dP} v dsigma / int_P w, or 1 when w has zero mean.

    With a profile ``H`` (1-D) the value is cross-checked against
    ``int Scal_v(H) / int w``.
    """
    P = _poly(P)
    rule = quadrature(P, order)
    wv = _rule_values(P, w, rule)
    mass = float(rule.integrate(wv))
    if abs(mass) < 1e-12 * float(rule.integrate(np.abs(wv))) or not np.any(wv):
        return 1.0
    num = float(_boundary_moments(P, v, rule)[0])
    c = num / mass
    if H is not None:
        # Scal_v of a generic profile needs a finer rule than the weights
        fine = quadrature(P, max(order or 0, 128))
        alt = float(fine.integrate(weighted_scalar_curvature(H, v)(fine.points))) / mass
        if abs(alt - c) > 1e-9 * max(1.0, abs(c)):
            raise AssertionError(f"c_vw boundary form {c!r} disagrees with curvature form {alt!r}")
    return c


def extremal_affine(P, v, w, order: int | None = None) -> AffineFunction:
    """Solve int l a w = 2 int_{dP} a v dsigma for all affine a."""
    P = _poly(P)
    rule = quadrature(P, order)
    mom = affine_moments(P, _rule_values(P, w, rule), rule)
    if mom.singular:
        raise SingularGram(f"Gram matrix of affine functions w.r.t. w is singular (min |eig| {mom.min_eig:.3e})")
    coef = np.linalg.solve(mom.gram, _boundary_moments(P, v, rule))
    return AffineFunction(float(coef[0]), coef[1:].copy())


def project_affine(P, values, w, order: int | None = None) -> AffineFunction:
    """Weighted L2 projection: l with int l a w = int values a for all affine a.

    ``values`` is a callable (e.g. Scal_v of a profile) evaluated at the nodes.
    """
    P = _poly(P)
    rule = quadrature(P, order)
    mom = affine_moments(P, _rule_values(P, w, rule), rule)
    if mom.singular:
        raise SingularGram("Gram matrix of affine functions w.r.t. w is singular")
    s = np.asarray(values(rule.points), float)
    rhs = rule.integrate(s[:, None] * np.column_stack([np.ones(len(s)), rule.nodes]))
    coef = np.linalg.solve(mom.gram, rhs)
    return AffineFunction(float(coef[0]), coef[1:].copy())


def volumes(P, v, order: int | None = None) -> tuple[float, float]:
    """(vol_v, vol) = (2 pi)^l (int_P v, int_P 1)."""
    P = _poly(P)
    rule = quadrature(P, order)
    k = TWO_PI**P.dim
    return k * float(rule.integrate(_rule_values(P, v, rule))), k * float(rule.weights.sum())


# -- chart machinery ----------------------------------------------------------

@dataclass(frozen=True)
class _Chart:
    """Reference nodes mu0 with the corresponding mu1, Jacobian and phi."""

    mu0: np.ndarray
    wts: np.ndarray
    mu1: np.ndarray
    jac: np.ndarray  # dmu1/dmu0
    phi: np.ndarray
    H0: np.ndarray
    H1: np.ndarray


def _chart(f: Chebyshev, n: int) -> _Chart:
    a, b = _interval_of(f)
    return _chart_cached(tuple(f.coef.tolist()), a, b, n)


@lru_cache(maxsize=32)
def _chart_cached(coef: tuple, a: float, b: float, n: int) -> _Chart:
    # the energies of one potential share the Legendre correspondence
    f = Chebyshev(np.array(coef), domain=[a, b])
    ref = SymplecticPotential.from_relative((a, b), None)
    pot = SymplecticPotential.from_relative((a, b), f)
    mu0, wts = chart_rule(n, a, b)
    x = ref.du(mu0)
    mu1 = mu0 if not np.any(f.coef) else pot.momentum(x)  # exact origin
    phi = x * (mu1 - mu0) - (pot.u(mu1) - ref.u(mu0))
    H0 = ref.profile.H(mu0)
    H1 = pot.profile.H(mu1)
    arrays = [np.array(a_, copy=True) for a_ in (mu0, wts, mu1, H1 / H0, phi, H0, H1)]
    for arr in arrays:
        arr.setflags(write=False)
    return _Chart(*arrays)


def _eps_transform(fn, mu1, mu0, powers, n_eps=EPS_NODES):
    """int_0^1 eps^p (1-eps)^q fn(eps mu1 + (1-eps) mu0) d eps for each (p, q)."""
    e, we = _gauss(n_eps)
    pts = np.multiply.outer(mu1, e) + np.multiply.outer(mu0, 1 - e)
    vals = np.asarray(fn(pts.ravel()), float).reshape(pts.shape)
    return [vals @ (we * e**p * (1 - e) ** q) for p, q in powers]


def _theta_data(theta, a, b, mu0):
    """(rho_theta, m_theta) of the reference forms at mu0."""
    if theta == "omega":
        return np.ones_like(mu0), mu0
    if theta == "ric":
        return np.full_like(mu0, 2.0 / (b - a)), (2 * mu0 - a - b) / (b - a)
    raise ValueError(f"theta must be one of {THETAS}")


def _weight_fn(w):
    if isinstance(w, (int, float)):
        return lambda x: np.full(np.shape(x), float(w))
    return w


def _weight_d1(v):
    if isinstance(v, (int, float)):
        return lambda x: np.zeros(np.shape(x))
    return v.d1


# -- energies -----------------------------------------------------------------

def energy_Ew(f, w, n: int = CHART_NODES, n_eps: int = EPS_NODES) -> float:
    """E_w(phi) = int_X phi (w_{0,1}(m) omega_phi + w_{1,1}(m) omega), chart form."""
    f = as_relative(f, _interval_of(f))
    ch = _chart(f, n)
    w01, w11 = _eps_transform(_weight_fn(w), ch.mu1, ch.mu0, [(1, 0), (0, 1)], n_eps)
    return TWO_PI * float(np.dot(ch.wts, ch.phi * (w01 * ch.jac + w11)))


def energy_Ew_oracle(f, w, n: int = CHART_NODES) -> float:
    """-2 pi int_P w f dmu: E_w is affine along t -> u_G + t f."""
    a, b = _interval_of(f)
    mu, wts = _gauss(n, a, b)
    return -TWO_PI * float(np.dot(wts, _weight_fn(w)(mu) * f(mu)))


def energy_Ev_theta(f, v, theta: str = "omega", n: int = CHART_NODES, n_eps: int = EPS_NODES) -> float:
    """E_v^theta, chart form.

    With V = int v(eps mu1 + (1-eps) mu0) deps and V'_{p,q} the transforms of
    v' with kernel eps^p (1-eps)^q:
    ``2 pi int phi [V rho_theta(mu0) dmu0 + m_theta(mu0) (V'_{1,0} dmu1 + V'_{0,1} dmu0)]``.
    """
    f = as_relative(f, _interval_of(f))
    a, b = _interval_of(f)
    ch = _chart(f, n)
    rho, m = _theta_data(theta, a, b, ch.mu0)
    (V,) = _eps_transform(_weight_fn(v), ch.mu1, ch.mu0, [(0, 0)], n_eps)
    Vp10, Vp01 = _eps_transform(_weight_d1(v), ch.mu1, ch.mu0, [(1, 0), (0, 1)], n_eps)
    dens = V * rho + m * (Vp10 * ch.jac + Vp01)
    return TWO_PI * float(np.dot(ch.wts, ch.phi * dens))


def _path_nodes(f, t, n):
    """Nodes mu of u_t = u_G + t f with the reference momenta mu0(mu) and H ratios."""
    a, b = _interval_of(f)
    ref = SymplecticPotential.from_relative((a, b), None)
    pot = SymplecticPotential(a, b, f * t)
    mu, wts = chart_rule(n, a, b)
    mu0 = mu if not np.any(pot.f.coef) else ref.momentum(pot.du(mu))
    return mu, wts, mu0, ref.profile.H(mu0), pot.profile.H(mu), pot.profile


def energy_Ev_theta_oracle(f, v, theta: str = "omega", steps: int = PATH_STEPS, n: int = CHART_NODES) -> float:
    """t-quadrature of the first variation of E_v^theta along t -> u_G + t f."""
    f = as_relative(f, _interval_of(f))
    a, b = _interval_of(f)
    ts, tw = _gauss(steps)
    vf, v1 = _weight_fn(v), _weight_d1(v)
    total = 0.0
    for t, wt in zip(ts, tw):
        mu, wts, mu0, H0, Ht, _ = _path_nodes(f, t, n)
        rho, m = _theta_data(theta, a, b, mu0)
        integrand = f(mu) * (vf(mu) * rho * H0 / Ht + v1(mu) * m)
        total += wt * float(np.dot(wts, integrand))
    return -TWO_PI * total


def entropy_Hv(f, v, n: int = CHART_NODES) -> float:
    """H_v = 2 pi int_P log(H(mu) / H0(mu0(mu))) v(mu) dmu."""
    f = as_relative(f, _interval_of(f))
    mu, wts, mu0, H0, H1, _ = _path_nodes(f, 1.0, n)
    return TWO_PI * float(np.dot(wts, np.log(H1 / H0) * _weight_fn(v)(mu)))


def mabuchi_distance(f0, f1, n: int = CHART_NODES) -> float:
    """sqrt(2 pi int_P (f1 - f0)^2 dmu)."""
    a, b = _interval_of(f0)
    mu, wts = _gauss(n, a, b)
    return float(np.sqrt(TWO_PI * np.dot(wts, (f1(mu) - f0(mu)) ** 2)))


# -- Mabuchi energy -----------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    H_v: float
    E_vRic: float
    E_w: float
    c_vw: float
    ell: AffineFunction | None
    M: float
    M_rel: float | None
    vol_v: float
    vol: float
    E_lw: float | None = None
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ct = self.H_v - 2 * self.E_vRic + self.c_vw * self.E_w
        if abs(self.M - ct) > 1e-9 * max(1.0, abs(self.M)):
            raise AssertionError(f"Chen-Tian decomposition violated: {self.M!r} vs {ct!r}")
        if self.M_rel is not None:
            ct = self.H_v - 2 * self.E_vRic + self.E_lw
            if abs(self.M_rel - ct) > 1e-9 * max(1.0, abs(self.M_rel)):
                raise AssertionError("relative Chen-Tian decomposition violated")

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("H_v", "E_vRic", "E_w", "c_vw", "M", "M_rel", "vol_v", "vol", "E_lw")}
        d["ell"] = self.ell.as_dict() if self.ell is not None else None
        return d


def mabuchi_energy(f, v, w, relative: bool = False, n: int = CHART_NODES) -> EnergyReport:
    """M_{v,w} = H_v - 2 E_v^Ric + c_{v,w} E_w, and optionally M^rel = M_{v, l_ext w}."""
    f = as_relative(f, _interval_of(f))
    P = interval(*_interval_of(f))
    Hv = entropy_Hv(f, v, n)
    Er = energy_Ev_theta(f, v, "ric", n)
    Ew = energy_Ew(f, w, n)
    c = c_constant(P, v, w)
    vol_v, vol = volumes(P, v)
    ell, M_rel, E_lw = None, None, None
    if relative:
        ell = extremal_affine(P, v, w)
        lw = w.times_affine(ell.a, ell.b)
        c_rel = c_constant(P, v, lw)
        if abs(c_rel - 1) > 1e-9:
            raise AssertionError(f"c_(v, l_ext w) = {c_rel!r} != 1: l_ext is defective")
        E_lw = energy_Ew(f, lw, n)
        M_rel = Hv - 2 * Er + E_lw
    return EnergyReport(Hv, Er, Ew, c, ell, Hv - 2 * Er + c * Ew, M_rel, vol_v, vol, E_lw)


def mabuchi_path_oracle(f, v, w, steps: int = PATH_STEPS, n: int = CHART_NODES, c: float | None = None) -> float:
    """int_0^1 2 pi int_P f (Scal_v(H_t) - c w) dmu dt along t -> u_G + t f."""
    f = as_relative(f, _interval_of(f))
    a, b = _interval_of(f)
    if c is None:
        c = c_constant(interval(a, b), v, w)
    mu, wts = _gauss(n, a, b)
    fw = f(mu)
    cw = c * _weight_fn(w)(mu)
    ts, tw = _gauss(steps)
    total = 0.0
    for t, wt in zip(ts, tw):
        prof = profile_from_relative_potential((a, b), f * t)
        total += wt * float(np.dot(wts, fw * (weighted_scalar_curvature(prof, v)(mu) - cw)))
    return TWO_PI * total


def mabuchi_donaldson(f, v, w, n: int = CHART_NODES) -> float:
    """Closed form in momentum coordinates: 2 pi [int v log(H/H0) + 2 int_dP f v - c int w f].

    Both profiles are compared at the same momentum; a third independent value.
    """
    f = as_relative(f, _interval_of(f))
    a, b = _interval_of(f)
    mu, wts = _gauss(n, a, b)
    H = profile_from_relative_potential((a, b), f).H(mu)
    H0 = 2 * (mu - a) * (b - mu) / (b - a)
    vf = _weight_fn(v)
    c = c_constant(interval(a, b), v, w)
    ends = np.array([a, b])
    bdry = 2 * float(np.dot(f(ends), vf(ends)))
    bulk = np.dot(wts, vf(mu) * np.log(H / H0) - c * _weight_fn(w)(mu) * f(mu))
    return TWO_PI * float(bulk + bdry)
