"""Paths of invariant potentials, geodesic checks, convexity scans and epsilon-geodesics.

A path is ``u_t = u_G + f_t``.  Geodesics are linear in ``t``; at a fixed
chart point ``phi_t = psi_t - psi_0`` then satisfies
``phi_tt = |d phi_t'|^2 = H_t (f_t')^2`` evaluated at the momentum ``mu_t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev

from .energy import TWO_PI, CHART_NODES, _theta_data, chart_rule, energy_Ev_theta, mabuchi_energy
from .toricgeom import SymplecticPotential, as_relative, guillemin_du, profile_from_relative_potential


class VerdictFailed(AssertionError):
    def __init__(self, name, t, magnitude):
        super().__init__(f"verdict {name!r} failed at t={t:.6g} (magnitude {magnitude:.3e})")
        self.name, self.t, self.magnitude = name, t, magnitude


class NewtonDiverged(ArithmeticError):
    def __init__(self, msg, trace):
        super().__init__(f"{msg}; residual trace {[f'{r:.2e}' for r in trace]}")
        self.trace = trace


class InadmissibleFiber(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "margin": float(self.margin), "detail": self.detail}


# -- paths --------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialPath:
    """u_t = u_G + f(t) for a path of relative potentials given with its t-derivatives."""

    a: float
    b: float

    def f(self, t: float) -> Chebyshev:
        raise NotImplementedError

    def fdot(self, t: float) -> Chebyshev:
        raise NotImplementedError

    def potential(self, t: float) -> SymplecticPotential:
        return SymplecticPotential(self.a, self.b, self.f(t))

    def phi(self, t: float, x) -> np.ndarray:
        """phi_t(x) = psi_t(x) - psi_0(x) at chart points x."""
        x = np.asarray(x, float)
        ref = SymplecticPotential.from_relative((self.a, self.b), None)
        return self.potential(t).kahler_potential(x) - ref.kahler_potential(x)


@dataclass(frozen=True)
class GeodesicPath(PotentialPath):
    """u_t = u_G + (1 - t) f0 + t f1."""

    f0: Chebyshev = None
    f1: Chebyshev = None

    def f(self, t):
        return self.f0 + (self.f1 - self.f0) * t  # exact for constant paths

    def fdot(self, t):
        return self.f1 - self.f0

    @property
    def speed(self) -> float:
        from .energy import mabuchi_distance
        return mabuchi_distance(self.f0, self.f1)


@dataclass(frozen=True)
class QuadraticPath(PotentialPath):
    """u_t = u_G + f0 + t^2 g: not a geodesic unless g = 0."""

    f0: Chebyshev = None
    g: Chebyshev = None

    def f(self, t):
        return self.f0 + self.g * t**2

    def fdot(self, t):
        return self.g * (2 * t)


def make_geodesic(f0, f1, P=None) -> GeodesicPath:
    """Linear path in symplectic potentials; convexity of both ends implies it for all t."""
    if P is None:
        P = tuple(float(x) for x in f0.domain)
    f0, f1 = as_relative(f0, P), as_relative(f1, P)
    profile_from_relative_potential(P, f0)
    profile_from_relative_potential(P, f1)
    return GeodesicPath(P[0], P[1], f0, f1)


def _chart_points(a, b, n):
    k = np.arange(1, n + 1)
    mu0 = (a + b) / 2 - (b - a) / 2 * np.cos(np.pi * k / (n + 1))
    return guillemin_du(mu0, a, b)


def geodesic_residual(path: PotentialPath, ts=None, xs=None, h: float = 1e-3) -> float:
    """sup |phi_tt - |d phi_t'|^2| over the samples.

    ``phi_tt`` is the second central difference in t at fixed chart point with one
    Richardson step; ``|d phi_t'|^2 = H_t(mu_t) (f_t'(mu_t))^2`` (u_t-derivative in mu).
    """
    ts = np.linspace(0.1, 0.9, 9) if ts is None else np.asarray(ts, float)
    xs = _chart_points(path.a, path.b, 15) if xs is None else np.asarray(xs, float)
    worst = 0.0
    for t in ts:
        def d2(hh):
            return (path.phi(t + hh, xs) - 2 * path.phi(t, xs) + path.phi(t - hh, xs)) / hh**2

        phitt = (4 * d2(h / 2) - d2(h)) / 3
        pot = path.potential(t)
        mu = pot.momentum(xs)
        grad2 = pot.profile.H(mu) * path.fdot(t).deriv()(mu) ** 2
        worst = max(worst, float(np.abs(phitt - grad2).max()))
    return worst


def speed_squared(path: PotentialPath, t: float, n: int = 2 * CHART_NODES) -> float:
    """int_X phi_t'^2 omega_t evaluated in the reference chart (mu0 nodes).

    The 1e-10 constancy check needs more nodes than the energies.
    """
    ref = SymplecticPotential.from_relative((path.a, path.b), None)
    pot = path.potential(t)
    mu0, wts = chart_rule(n, path.a, path.b)
    mu = pot.momentum(ref.du(mu0))
    jac = pot.profile.H(mu) / ref.profile.H(mu0)
    return TWO_PI * float(np.dot(wts, path.fdot(t)(mu) ** 2 * jac))


# -- convexity scans ----------------------------------------------------------

@dataclass
class ScanResult:
    t: np.ndarray
    columns: dict  # E_w, E_vRic, H_v, M, M_rel, d2M
    verdicts: list = field(default_factory=list)
    scale: float = 0.0

    def rows(self):
        keys = ["E_w", "E_vRic", "H_v", "M", "M_rel", "d2M"]
        for k, t in enumerate(self.t):
            yield [float(t)] + [float(self.columns[c][k]) for c in keys]


def scan_energies(path: GeodesicPath, N: int, v, w, relative: bool = True, tol_scale: float = 1.0,
                  raise_on_fail: bool = True) -> ScanResult:
    """Evaluate the energies at N equispaced t and issue the convexity verdicts.

    Verdicts: min second difference of M (and of M_rel) >= -1e-6 scale, E_w within
    1e-8 scale of its chord, and constant speed to 1e-10.  ``scale`` is the largest
    magnitude of any energy term over the scan.
    """
    if N < 5:
        raise ValueError("need N >= 5")
    ts = np.linspace(0.0, 1.0, N)
    cols = {k: np.zeros(N) for k in ("E_w", "E_vRic", "H_v", "M", "M_rel")}
    for k, t in enumerate(ts):
        rep = mabuchi_energy(path.f(t), v, w, relative=relative)
        cols["E_w"][k], cols["E_vRic"][k], cols["H_v"][k], cols["M"][k] = rep.E_w, rep.E_vRic, rep.H_v, rep.M
        cols["M_rel"][k] = rep.M_rel if relative else np.nan
    d2 = np.full(N, np.nan)
    d2[1:-1] = cols["M"][2:] - 2 * cols["M"][1:-1] + cols["M"][:-2]
    cols["d2M"] = d2
    scale = max(float(np.nanmax(np.abs(cols[k]))) for k in ("E_w", "E_vRic", "H_v", "M"))
    verdicts = []

    tol = 1e-6 * scale * tol_scale
    k = int(np.nanargmin(d2))
    verdicts.append(Verdict("convexity_M", bool(d2[k] >= -tol), float(d2[k] + tol), f"t={ts[k]:.6g}"))
    if relative:
        d2r = cols["M_rel"][2:] - 2 * cols["M_rel"][1:-1] + cols["M_rel"][:-2]
        kr = int(np.argmin(d2r))
        verdicts.append(Verdict("convexity_M_rel", bool(d2r[kr] >= -tol), float(d2r[kr] + tol), f"t={ts[kr + 1]:.6g}"))
    chord = cols["E_w"][0] * (1 - ts) + cols["E_w"][-1] * ts
    dev = np.abs(cols["E_w"] - chord)
    ka = int(np.argmax(dev))
    tol_aff = 1e-8 * scale * tol_scale
    verdicts.append(Verdict("affine_E_w", bool(dev[ka] <= tol_aff), float(tol_aff - dev[ka]), f"t={ts[ka]:.6g}"))
    sp = np.array([speed_squared(path, t) for t in (0.0, 0.5, 1.0)])
    sdev = float(np.abs(sp - sp.mean()).max())
    tol_sp = 1e-10 * max(1.0, float(sp.max())) * tol_scale
    verdicts.append(Verdict("constant_speed", bool(sdev <= tol_sp), tol_sp - sdev))
    res = ScanResult(ts, cols, verdicts, scale)
    if raise_on_fail:
        for vd in verdicts:
            if not vd.passed:
                t_at = float(vd.detail[2:]) if vd.detail.startswith("t=") else float("nan")
                raise VerdictFailed(vd.name, t_at, -vd.margin)
    return res


def second_variation_check(path: GeodesicPath, t: float, v, theta: str = "omega",
                           h: float = 1e-2, n: int = CHART_NODES) -> tuple[float, float]:
    """(closed form, finite difference) for d^2/dt^2 E_v^theta along the path.

    Closed form ``2 pi int_P (F')^2 rho_theta(mu0) H0(mu0) v dmu`` in the momentum
    of u_t, with mu0 the reference momentum at the same chart point.
    """
    a, b = path.a, path.b
    F = path.fdot(t)
    ref = SymplecticPotential.from_relative((a, b), None)
    pot = path.potential(t)
    mu, wts = chart_rule(n, a, b)
    mu0 = ref.momentum(pot.du(mu))
    rho, _ = _theta_data(theta, a, b, mu0)
    vv = v(mu) if callable(v) else np.full_like(mu, float(v))
    closed = TWO_PI * float(np.dot(wts, F.deriv()(mu) ** 2 * rho * ref.profile.H(mu0) * vv))

    def E(s):
        return energy_Ev_theta(path.f(s), v, theta, n)

    e0 = E(t)

    def d2(hh):
        return (E(t + hh) - 2 * e0 + E(t - hh)) / hh**2

    fd = (4 * d2(h / 2) - d2(h)) / 3
    return closed, fd


# -- epsilon-geodesics --------------------------------------------------------

def lobatto(n: int, lo: float, hi: float):
    """Chebyshev-Lobatto nodes (ascending) and first-derivative matrix on [lo, hi]."""
    k = np.arange(n + 1)
    x = -np.cos(np.pi * k / n)
    c = np.where((k == 0) | (k == n), 2.0, 1.0) * (-1.0) ** k
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (X + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    s = (hi - lo) / 2
    return lo + s * (x + 1), D / s


@dataclass(frozen=True)
class EpsGeodesicSolution:
    eps: float
    mu: np.ndarray  # reference momenta
    t: np.ndarray
    Phi: np.ndarray  # (len(mu), len(t))
    geodesic: np.ndarray  # linear geodesic on the same grid
    trace: tuple
    fiber_margin: float

    @property
    def distance_to_geodesic(self) -> float:
        return float(np.abs(self.Phi - self.geodesic).max())


def _geodesic_grid(path: GeodesicPath, mu, t):
    """phi_t at the chart points of the reference momenta mu (endpoint limits -f_t)."""
    a, b = path.a, path.b
    inner = slice(1, -1)
    x = guillemin_du(mu[inner], a, b)
    G = np.empty((len(mu), len(t)))
    for j, tj in enumerate(t):
        ft = path.f(tj)
        G[inner, j] = path.phi(tj, x)
        G[0, j], G[-1, j] = -ft(a), -ft(b)
    return G


def epsilon_geodesic(f0, f1, eps: float, grid=(24, 24), start: EpsGeodesicSolution | None = None,
                     tol: float = 1e-12, max_iter: int = 60) -> EpsGeodesicSolution:
    """Damped Newton for the invariant epsilon-geodesic equation.

    In the reference momentum ``mu`` (with ``H0`` the Guillemin profile) the
    equation reads ``(1 + (H0 Phi_mu)_mu) Phi_tt - H0 Phi_mut^2 = eps`` with
    ``Phi(., 0) = phi0`` and ``Phi(., 1) = phi1``.  Collocation at
    Chebyshev-Lobatto points in both variables, including the momentum
    endpoints where the equation itself closes the problem.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    nm, nt = grid
    if nm < 16 or nt < 16:
        raise ValueError("grid resolutions must be >= 16")
    path = make_geodesic(f0, f1)
    a, b = path.a, path.b
    mu, Dm = lobatto(nm, a, b)
    t, Dt = lobatto(nt, 0.0, 1.0)
    H0 = 2 * (mu - a) * (b - mu) / (b - a)
    L = Dm @ (H0[:, None] * Dm)
    Dtt = Dt @ Dt
    geo = _geodesic_grid(path, mu, t)
    if start is not None and start.Phi.shape == geo.shape:
        Phi = start.Phi.copy()
    else:
        Phi = geo - eps * np.outer(np.ones_like(mu), t * (1 - t)) / 2
    Phi[:, 0], Phi[:, -1] = geo[:, 0], geo[:, -1]

    m, n = len(mu), len(t)
    Im, It = np.eye(m), np.eye(n)
    K_L = np.kron(L, It)
    K_tt = np.kron(Im, Dtt)
    K_mt = np.kron(Dm, Dt)
    free = np.zeros((m, n), bool)
    free[:, 1:-1] = True
    fidx = np.flatnonzero(free.ravel())

    def residual(Y):
        A = 1 + L @ Y
        return A * (Y @ Dtt.T) - H0[:, None] * (Dm @ Y @ Dt.T) ** 2 - eps

    trace = []
    for _ in range(max_iter):
        R = residual(Phi)
        rn = float(np.abs(R[:, 1:-1]).max())
        trace.append(rn)
        if not np.isfinite(rn):
            raise NewtonDiverged("non-finite residual", trace)
        if rn <= tol * max(1.0, float(np.abs(Phi).max())):
            break
        A = (1 + L @ Phi).ravel()
        B = (Phi @ Dtt.T).ravel()
        C = (Dm @ Phi @ Dt.T).ravel()
        H0f = np.repeat(H0, n)
        J = B[:, None] * K_L + A[:, None] * K_tt - (2 * H0f * C)[:, None] * K_mt
        step = np.zeros(m * n)
        step[fidx] = np.linalg.solve(J[np.ix_(fidx, fidx)], -R.ravel()[fidx])
        step = step.reshape(m, n)
        lam = 1.0
        while lam > 1e-4:
            trial = Phi + lam * step
            rt = float(np.abs(residual(trial)[:, 1:-1]).max())
            if np.isfinite(rt) and rt < (1 - 1e-4 * lam) * rn:
                break
            lam /= 2
        else:
            # stalled at rounding level: accept
            if rn <= 1e3 * tol * max(1.0, float(np.abs(Phi).max())):
                break
            raise NewtonDiverged("line search failed", trace)
        Phi = trial
    else:
        raise NewtonDiverged(f"no convergence in {max_iter} iterations", trace)
    margin = float((1 + L @ Phi).min())
    if margin <= 0:
        raise InadmissibleFiber(f"fiber metric degenerates: min(1 + (H0 Phi_mu)_mu) = {margin:.3e}")
    return EpsGeodesicSolution(float(eps), mu, t, Phi, geo, tuple(trace), margin)


def epsilon_sequence(f0, f1, epsilons=(1e-1, 1e-2, 1e-3), grid=(24, 24)) -> list[EpsGeodesicSolution]:
    """Solve along a decreasing eps sequence, continuing each solve from the previous one."""
    out, prev = [], None
    for e in sorted(epsilons, reverse=True):
        prev = epsilon_geodesic(f0, f1, e, grid, start=prev)
        out.append(prev)
    return out
