"""Torus-invariant Kähler metrics on a toric manifold with interval momentum image.

A metric is described by its symplectic potential ``u = u_G + f`` on
``P = [a, b]``, where ``u_G`` is the Guillemin potential and ``f`` is a smooth
relative potential (a Chebyshev series on ``[a, b]``).  The momentum profile
is ``H = 1/u''``; in momentum-angle coordinates the metric is
``dmu^2/H + H dtheta^2`` and ``omega = dmu ^ dtheta``.

Writing ``q = (mu - a)(b - mu)`` and ``D = (b - a) + 2 q f''`` gives
``H = 2q / D``, which is smooth up to the boundary and carries the boundary
behaviour ``H(a) = H(b) = 0``, ``H'(a) = 2``, ``H'(b) = -2`` automatically.

Sign conventions: the Laplacian is ``Delta g = -(H g')'`` and the scalar
curvature is ``-H''``; with these the weighted scalar curvature equals
``-(v H)''``.  The log-affine chart coordinate is ``x = u'(mu)`` and the
Kähler potential is the Legendre transform ``psi(x) = x mu - u(mu)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.special import expit, xlogy

from .polytope import MomentumPolytope

DEFAULT_DEGREE = 64


class NotConvex(ValueError):
    """u'' is not positive somewhere: the datum is not a Kähler metric."""


class CheckFailed(AssertionError):
    def __init__(self, msg, deviation):
        super().__init__(f"{msg} (max deviation {deviation:.3e})")
        self.deviation = deviation


def _ab(P) -> tuple[float, float]:
    if isinstance(P, MomentumPolytope):
        return P.interval
    a, b = P
    if not a < b:
        raise ValueError("need a < b")
    return float(a), float(b)


def cheb(coeffs, P) -> Chebyshev:
    """A Chebyshev series on the interval ``P``."""
    a, b = _ab(P)
    return Chebyshev(np.atleast_1d(np.asarray(coeffs, float)), domain=[a, b])


def as_relative(f, P) -> Chebyshev:
    if isinstance(f, Chebyshev):
        a, b = _ab(P)
        if not np.allclose(f.domain, [a, b]):
            raise ValueError(f"relative potential lives on {f.domain}, expected [{a}, {b}]")
        return f
    if f is None:
        return cheb([0.0], P)
    if isinstance(f, np.polynomial.polynomial.Polynomial):
        a, b = _ab(P)
        return f.convert(kind=Chebyshev, domain=[a, b])
    return cheb(f, P)


def _derivs(g, mu, k=2):
    """Values and derivatives up to order k of a Chebyshev, Polynomial, weight or float."""
    mu = np.asarray(mu, float)
    if isinstance(g, (int, float)):
        return [np.full_like(mu, float(g))] + [np.zeros_like(mu)] * k
    if hasattr(g, "deriv"):
        return [g(mu)] + [g.deriv(j)(mu) for j in range(1, k + 1)]
    if hasattr(g, "d1"):
        out = [np.asarray(g(mu), float), np.asarray(g.d1(mu), float), np.asarray(g.d2(mu), float)]
        return out[: k + 1]
    raise TypeError(f"cannot differentiate {type(g).__name__}")


def gauge(f: Chebyshev) -> Chebyshev:
    """Remove the affine part so that f(mu_c) = f'(mu_c) = 0 at the midpoint."""
    a, b = f.domain
    c = (a + b) / 2
    x = Chebyshev.identity(domain=[a, b])
    return f - f(c) - f.deriv()(c) * (x - c)


# -- Guillemin reference -----------------------------------------------------

def guillemin_u(mu, a, b):
    """Gauged Guillemin potential: u_G(mid) = u_G'(mid) = 0."""
    mu = np.asarray(mu, float)
    val = 0.5 * (xlogy(mu - a, mu - a) + xlogy(b - mu, b - mu))
    return val - 0.5 * (b - a) * np.log((b - a) / 2)


def guillemin_du(mu, a, b):
    mu = np.asarray(mu, float)
    return 0.5 * np.log((mu - a) / (b - mu))


def guillemin_d2u(mu, a, b):
    mu = np.asarray(mu, float)
    return 0.5 * (b - a) / ((mu - a) * (b - mu))


# -- profiles ----------------------------------------------------------------

@dataclass(frozen=True)
class MomentumProfile:
    """H on [a, b], either induced by a relative potential ``f`` or given directly.

    Exactly one of ``f`` (relative potential) and ``h`` (Chebyshev series of H)
    is set.
    """

    a: float
    b: float
    f: Chebyshev | None = None
    h: Chebyshev | None = None

    def _q(self, mu):
        return (mu - self.a) * (self.b - mu), self.a + self.b - 2 * mu

    def _D(self, mu):
        q, dq = self._q(mu)
        f2, f3, f4 = (self.f.deriv(k)(mu) for k in (2, 3, 4))
        D = (self.b - self.a) + 2 * q * f2
        dD = 2 * dq * f2 + 2 * q * f3
        d2D = -4 * f2 + 4 * dq * f3 + 2 * q * f4
        return D, dD, d2D

    def H(self, mu):
        mu = np.asarray(mu, float)
        if self.h is not None:
            return self.h(mu)
        q, _ = self._q(mu)
        return 2 * q / self._D(mu)[0]

    def dH(self, mu):
        mu = np.asarray(mu, float)
        if self.h is not None:
            return self.h.deriv()(mu)
        q, dq = self._q(mu)
        D, dD, _ = self._D(mu)
        return 2 * dq / D - 2 * q * dD / D**2

    def d2H(self, mu):
        mu = np.asarray(mu, float)
        if self.h is not None:
            return self.h.deriv(2)(mu)
        q, dq = self._q(mu)
        D, dD, d2D = self._D(mu)
        return -4 / D - 4 * dq * dD / D**2 - 2 * q * d2D / D**2 + 4 * q * dD**2 / D**3

    def derivs(self, mu):
        return self.H(mu), self.dH(mu), self.d2H(mu)

    def d2u(self, mu):
        """u'' = 1/H in the interior."""
        return 1.0 / self.H(mu)

    def relative_potential(self, degree: int = DEFAULT_DEGREE) -> Chebyshev:
        """The gauged relative potential inducing this profile."""
        if self.f is not None:
            return gauge(self.f)
        return relative_potential_from_product(self.h, None, (self.a, self.b), degree)


def guillemin_profile(P) -> MomentumProfile:
    """The reference profile H_G = 2 (mu - a)(b - mu) / (b - a)."""
    a, b = _ab(P)
    return MomentumProfile(a, b, f=cheb([0.0], (a, b)))


def _check_nodes(a, b, n=257):
    k = np.arange(n)
    return (a + b) / 2 + (b - a) / 2 * np.cos(np.pi * (k + 0.5) / n)


def profile_from_relative_potential(P, f) -> MomentumProfile:
    """H = 1/(u_G'' + f''); raises NotConvex if u'' <= 0 at a check node."""
    a, b = _ab(P)
    f = as_relative(f, (a, b))
    nodes = np.concatenate([[a, b], _check_nodes(a, b), np.linspace(a, b, 1025)])
    q = (nodes - a) * (b - nodes)
    D = (b - a) + 2 * q * f.deriv(2)(nodes)
    if np.any(D <= 0):
        k = int(np.argmin(D))
        raise NotConvex(f"u'' <= 0 near mu = {nodes[k]:.6g}")
    return MomentumProfile(a, b, f=f)


def profile_from_coefficients(P, h) -> MomentumProfile:
    """A profile given directly by the Chebyshev coefficients of H."""
    a, b = _ab(P)
    h = as_relative(h, (a, b))
    return MomentumProfile(a, b, h=h)


def relative_potential_from_product(Q: Chebyshev, v, P, degree: int = DEFAULT_DEGREE) -> Chebyshev:
    """Gauged relative potential of the profile ``H = Q / v`` (``v=None`` means 1).

    ``Q`` must vanish at both endpoints with ``Q'(a) = 2 v(a)``, ``Q'(b) = -2 v(b)``.
    With ``R = Q / q`` one has ``f'' = (v/R - (b - a)/2) / q``, whose numerator
    vanishes at the endpoints; it is sampled at interior Chebyshev points.
    """
    a, b = _ab(P)
    qpoly = -Chebyshev.fromroots([a, b], domain=[a, b])
    R = Q // qpoly
    vfun = (lambda x: 1.0) if v is None else v

    def f2(mu):
        q = (mu - a) * (b - mu)
        return (vfun(mu) / R(mu) - (b - a) / 2) / q

    F2 = Chebyshev.interpolate(f2, degree, domain=[a, b])
    return gauge(F2.integ(2))


# -- curvature operators -----------------------------------------------------

def scalar_curvature(prof: MomentumProfile):
    """Scal = -H''."""
    return lambda mu: -prof.d2H(mu)


def laplacian(prof: MomentumProfile, g):
    """Delta g = -(H g')'."""

    def lap(mu):
        _, g1, g2 = _derivs(g, mu)
        return -(prof.dH(mu) * g1 + prof.H(mu) * g2)

    return lap


def ricci_momentum(prof: MomentumProfile):
    """m_Ric = (1/2) Delta(mu) = -H'/2."""
    return lambda mu: -0.5 * prof.dH(mu)


def ricci_density(prof: MomentumProfile):
    """Ric = rho dmu ^ dtheta with rho = -H''/2 (Gaussian curvature)."""
    return lambda mu: -0.5 * prof.d2H(mu)


def weighted_scalar_curvature(prof: MomentumProfile, v):
    """v Scal + 2 Delta(v o m) + v'' H, the three terms summed separately."""
    lap = laplacian(prof, v)

    def scal_v(mu):
        mu = np.asarray(mu, float)
        v0, _, v2 = _derivs(v, mu)
        return v0 * (-prof.d2H(mu)) + 2 * lap(mu) + v2 * prof.H(mu)

    return scal_v


# -- symplectic potentials and Legendre duality -------------------------------

@dataclass(frozen=True)
class SymplecticPotential:
    """u = u_G + f on [a, b]."""

    a: float
    b: float
    f: Chebyshev

    @classmethod
    def from_relative(cls, P, f=None) -> "SymplecticPotential":
        a, b = _ab(P)
        f = as_relative(f, (a, b))
        profile_from_relative_potential((a, b), f)
        return cls(a, b, f)

    @property
    def profile(self) -> MomentumProfile:
        return MomentumProfile(self.a, self.b, f=self.f)

    def gauged(self) -> "SymplecticPotential":
        return SymplecticPotential(self.a, self.b, gauge(self.f))

    def plus(self, g) -> "SymplecticPotential":
        return SymplecticPotential(self.a, self.b, self.f + as_relative(g, (self.a, self.b)))

    def u(self, mu):
        return guillemin_u(mu, self.a, self.b) + self.f(mu)

    def du(self, mu):
        return guillemin_du(mu, self.a, self.b) + self.f.deriv()(mu)

    def d2u(self, mu):
        return guillemin_d2u(mu, self.a, self.b) + self.f.deriv(2)(mu)

    # chart <-> momentum
    def momentum(self, x, return_logit: bool = False):
        """Inverse of u': the momentum of the chart point x (vectorised)."""
        s = _solve_logit(self, np.asarray(x, float))
        mu = self.a + (self.b - self.a) * expit(s)
        return (mu, s) if return_logit else mu

    def kahler_potential(self, x):
        """psi(x) = x mu - u(mu) with u'(mu) = x."""
        x = np.asarray(x, float)
        mu = self.momentum(x)
        return x * mu - self.u(mu)


def _solve_logit(pot: SymplecticPotential, x: np.ndarray) -> np.ndarray:
    """Solve s/2 + f'(mu(s)) = x for the logit s of mu (safeguarded Newton)."""
    a, b = pot.a, pot.b
    f1, f2 = pot.f.deriv(), pot.f.deriv(2)
    grid = np.linspace(a, b, 513)
    M = np.abs(f1(grid)).max() * 1.01 + 1e-12
    lo = 2 * (x - M) - 1.0
    hi = 2 * (x + M) + 1.0
    s = np.clip(2 * (x - f1((a + b) / 2)), lo, hi)
    for _ in range(200):
        e = expit(s)
        mu = a + (b - a) * e
        q_over = e * (1 - e)  # q / (b - a)^2
        g = s / 2 + f1(mu) - x
        dg = 0.5 + f2(mu) * q_over * (b - a)
        lo = np.where(g < 0, s, lo)
        hi = np.where(g > 0, s, hi)
        step = g / dg
        s_new = s - step
        bad = (s_new <= lo) | (s_new >= hi) | ~np.isfinite(s_new)
        s_new = np.where(bad, (lo + hi) / 2, s_new)
        done = np.abs(s_new - s) <= 4e-16 * (1 + np.abs(s))
        s = s_new
        if np.all(done):
            break
    return s


@dataclass(frozen=True)
class LegendreMap:
    """mu -> mu' with u_dst'(mu') = u_src'(mu): the same chart point in two metrics."""

    src: SymplecticPotential
    dst: SymplecticPotential

    def __call__(self, mu):
        return self.dst.momentum(self.src.du(mu))

    def derivative(self, mu):
        """dmu'/dmu = u_src''(mu) / u_dst''(mu') = H_dst(mu') / H_src(mu)."""
        mu = np.asarray(mu, float)
        return self.dst.profile.H(self(mu)) / self.src.profile.H(mu)

    def endpoint_derivative(self):
        """One-sided limits of dmu'/dmu at a and b."""
        fa = self.src.f.deriv()(self.src.a) - self.dst.f.deriv()(self.dst.a)
        fb = self.src.f.deriv()(self.src.b) - self.dst.f.deriv()(self.dst.b)
        # near a: log(mu' - a) - log(mu - a) -> 2 (f_src'(a) - f_dst'(a)); sign flips at b
        return np.exp(2 * fa), np.exp(-2 * fb)


def legendre_correspondence(u_src: SymplecticPotential, u_dst: SymplecticPotential,
                            gauge: bool = True) -> LegendreMap:
    """Monotone correspondence of momenta at equal chart points.

    With ``gauge=True`` both potentials are first gauge-normalised, so the
    map only depends on the metrics (affine parts of f are the complex torus
    action and are quotiented out).
    """
    if gauge:
        u_src, u_dst = u_src.gauged(), u_dst.gauged()
    return LegendreMap(u_src, u_dst)


@dataclass(frozen=True)
class MomentumImageReport:
    image: tuple[float, float]
    image_deviation: float
    dc_deviation: float
    monotone: bool

    @property
    def deviation(self) -> float:
        return max(self.image_deviation, self.dc_deviation)


def momentum_image_check(P, f, n_samples: int = 41, tol: float = 1e-10,
                         reference=None) -> MomentumImageReport:
    """Check that the momentum image of u_G + f is [a, b] and that m_phi - m_omega = d^c phi.

    The second identity is checked with the chart derivative of
    ``phi = psi_f - psi_ref`` (fourth-order central differences with one
    Richardson step) against the difference of momenta at equal chart points.
    """
    a, b = _ab(P)
    pot = SymplecticPotential.from_relative((a, b), f)
    ref = SymplecticPotential.from_relative((a, b), reference)
    big = 40.0 + 2 * float(np.abs(pot.f.deriv()(np.linspace(a, b, 257))).max())
    lo, hi = pot.momentum(np.array([-big, big]))
    image_dev = max(abs(lo - a), abs(hi - b))

    mu0 = _check_nodes(a, b, n_samples)[::-1]
    x = ref.du(mu0)
    dmom = pot.momentum(x) - ref.momentum(x)

    def phi(xx):
        return pot.kahler_potential(xx) - ref.kahler_potential(xx)

    def d1(h):
        return (8 * (phi(x + h) - phi(x - h)) - (phi(x + 2 * h) - phi(x - 2 * h))) / (12 * h)

    h = 2e-3
    dphi = (16 * d1(h / 2) - d1(h)) / 15
    dc_dev = float(np.abs(dphi - dmom).max())
    grid = pot.momentum(np.linspace(-big, big, 801))
    monotone = bool(np.all(np.diff(grid) >= 0))
    rep = MomentumImageReport((float(lo), float(hi)), float(image_dev), dc_dev, monotone)
    if rep.deviation > tol or not monotone:
        raise CheckFailed("momentum image check failed", rep.deviation)
    return rep
