import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import Chebyshev

from wkgeom.polytope import interval
from wkgeom.sampling import WEIGHT_FAMILIES, make_rng, random_relative_potential, random_weight
from wkgeom.toricgeom import (CheckFailed, NotConvex, SymplecticPotential, cheb, guillemin_profile,
                              laplacian, legendre_correspondence, momentum_image_check,
                              profile_from_coefficients, profile_from_relative_potential, relative_potential_from_product,
                              ricci_density, ricci_momentum, scalar_curvature, weighted_scalar_curvature)
from wkgeom.weights import make_weight

G_P = interval(-1, 1)
MU = np.linspace(-0.999, 0.999, 201)
intervals = st.tuples(st.floats(-2, 1), st.floats(0.3, 3)).map(lambda t: (t[0], t[0] + t[1]))


def resolved_interpolant(fn, P):
    """Smallest Chebyshev interpolant whose coefficient tail is at rounding level."""
    for deg in range(16, 400, 8):
        s = Chebyshev.interpolate(fn, deg, domain=list(P))
        if np.abs(s.coef[-4:]).max() < 1e-15 * np.abs(s.coef).max():
            return s
    raise AssertionError("oracle interpolant did not resolve")


def poly(*c):
    return np.polynomial.Polynomial(c)


def test_guillemin_examples():
    np.testing.assert_allclose(guillemin_profile((-1, 1)).H(MU), 1 - MU**2, atol=1e-15)
    assert guillemin_profile((0, 1)).H(0.5) == pytest.approx(0.5, abs=1e-15)
    for a, b in [(0, 1), (-3, 2.5), (1, 7)]:
        assert guillemin_profile((a, b)).dH(a) == pytest.approx(2, abs=1e-14)
        assert guillemin_profile((a, b)).dH(b) == pytest.approx(-2, abs=1e-14)


def test_profile_examples():
    H = profile_from_relative_potential((-1, 1), poly(0, 0, 0.5)).H(MU)
    np.testing.assert_allclose(H, (1 - MU**2) / (2 - MU**2), atol=1e-14)
    with pytest.raises(NotConvex):
        profile_from_relative_potential((-1, 1), poly(0, 0, -1.0))


def test_scalar_curvature_examples():
    # I2 at the coefficient level: H_G series is exactly 1 - mu^2
    h = Chebyshev.interpolate(guillemin_profile((-1, 1)).H, 4)
    assert np.allclose(h.coef[:3], [0.5, 0, -0.5], atol=1e-15) and np.allclose(h.coef[3:], 0, atol=1e-15)
    assert np.all(scalar_curvature(guillemin_profile((-1, 1)))(MU) == pytest.approx(2, abs=1e-13))
    c = 0.3
    prof = profile_from_coefficients((-1, 1), poly(1, c, -1, -c))
    np.testing.assert_allclose(scalar_curvature(prof)(MU), 2 + 6 * c * MU, atol=1e-13)
    lin = profile_from_coefficients((-1, 1), poly(0.5, 0.2))
    assert np.all(scalar_curvature(lin)(MU) == 0)


def test_laplacian_examples():
    G = guillemin_profile((-1, 1))
    assert np.all(laplacian(G, poly(3.0))(MU) == 0)
    np.testing.assert_allclose(laplacian(G, poly(0, 1))(MU), 2 * MU, atol=1e-14)
    np.testing.assert_allclose(laplacian(G, poly(0, 0, 1))(MU), 6 * MU**2 - 2, atol=1e-14)


def test_ricci_momentum_examples():
    np.testing.assert_allclose(ricci_momentum(guillemin_profile((-1, 1)))(MU), MU, atol=1e-14)
    a, b = -0.5, 2.0
    mu = np.linspace(a, b, 9)
    np.testing.assert_allclose(ricci_momentum(guillemin_profile((a, b)))(mu), (2 * mu - a - b) / (b - a), atol=1e-14)


@given(st.integers(0, 2**63))
def test_ricci_momentum_defining_identity(seed):
    # d m_Ric / dmu is the Ricci density, so iota_xi Ric = -d m_Ric with iota_xi(dmu^dtheta) = -dmu
    prof = profile_from_relative_potential((-1, 1), random_relative_potential(make_rng(seed), (-1, 1)))
    m = ricci_momentum(prof)
    mu = MU[1:-1]

    def d(h):
        return (m(mu + h) - m(mu - h)) / (2 * h)

    fd = (4 * d(5e-4) - d(1e-3)) / 3
    np.testing.assert_allclose(fd, ricci_density(prof)(mu), rtol=1e-6, atol=1e-6)


def test_weighted_scalar_examples():
    G = guillemin_profile((-1, 1))
    one = make_weight("constant", {"value": 1.0}, G_P)
    np.testing.assert_allclose(weighted_scalar_curvature(G, one)(MU), scalar_curvature(G)(MU), atol=1e-15)
    v = make_weight("polynomial", {"coeffs": [1, 0, 0.5]}, G_P)
    np.testing.assert_allclose(weighted_scalar_curvature(G, v)(MU), 1 + 6 * MU**2, atol=1e-13)


@given(intervals, st.sampled_from(WEIGHT_FAMILIES), st.integers(0, 2**63))
def test_I1_weighted_abreu(P, family, seed):
    # oracle: spectral second derivative of the interpolated product vH
    rng = make_rng(seed)
    f = random_relative_potential(rng, P)
    v = random_weight(rng, P, family)
    prof = profile_from_relative_potential(P, f)
    vH = resolved_interpolant(lambda m: v(m) * prof.H(m), P)
    mu = np.linspace(*P, 301)
    oracle = -vH.deriv(2)(mu)
    dev = np.abs(weighted_scalar_curvature(prof, v)(mu) - oracle).max()
    assert dev <= 1e-8 * (1 + np.abs(oracle).max())


@given(st.integers(0, 2**63))
def test_I3_laplacian_symmetric(seed):
    rng = make_rng(seed)
    P = (-0.7, 1.6)
    prof = profile_from_relative_potential(P, random_relative_potential(rng, P))
    f, g = (cheb(rng.standard_normal(7), P) for _ in range(2))
    x, wq = np.polynomial.legendre.leggauss(200)
    mu = 1.15 * x + 0.45
    wq = 1.15 * wq
    lhs = np.sum(wq * f(mu) * laplacian(prof, g)(mu))
    rhs = np.sum(wq * g(mu) * laplacian(prof, f)(mu))
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


@given(intervals, st.integers(0, 2**63))
def test_round_trip(P, seed):
    f = random_relative_potential(make_rng(seed), P)
    prof = profile_from_relative_potential(P, f)
    h = resolved_interpolant(prof.H, P)
    back = relative_potential_from_product(h, None, P)
    diff = (back - f).coef
    # T0, T1 span the affine functions
    assert np.abs(diff[2:]).max() <= 1e-10


def test_legendre_examples():
    rng = make_rng(7)
    P = (-1, 1)
    u = SymplecticPotential.from_relative(P, random_relative_potential(rng, P))
    mu = np.linspace(-0.99, 0.99, 41)
    np.testing.assert_allclose(legendre_correspondence(u, u)(mu), mu, atol=1e-12)
    shifted = u.plus(cheb([0.4, -1.3], P))
    np.testing.assert_allclose(legendre_correspondence(u, shifted)(mu), mu, atol=1e-12)
    other = SymplecticPotential.from_relative(P, random_relative_potential(rng, P))
    L = legendre_correspondence(u, other)
    assert np.all(np.diff(L(mu)) > 0)
    # defining equation on the gauged pair
    np.testing.assert_allclose(L.dst.du(L(mu)), L.src.du(mu), atol=1e-12)


@given(intervals, st.integers(0, 2**63))
def test_I4_round_trip(P, seed):
    rng = make_rng(seed)
    u0, u1 = (SymplecticPotential.from_relative(P, random_relative_potential(rng, P)) for _ in range(2))
    mu = np.linspace(*P, 53)[1:-1]
    back = legendre_correspondence(u1, u0)(legendre_correspondence(u0, u1)(mu))
    assert np.abs(back - mu).max() <= 1e-10


@given(st.integers(0, 2**63))
def test_endpoint_limits(seed):
    rng = make_rng(seed)
    P = (0.0, 2.0)
    u0, u1 = (SymplecticPotential.from_relative(P, random_relative_potential(rng, P)) for _ in range(2))
    L = legendre_correspondence(u0, u1)
    da, db = L.endpoint_derivative()
    d = 1e-6
    # the one-sided approach is linear in the offset; one Richardson step removes it
    assert 2 * L.derivative(d) - L.derivative(2 * d) == pytest.approx(da, rel=1e-6)
    assert 2 * L.derivative(2 - d) - L.derivative(2 - 2 * d) == pytest.approx(db, rel=1e-6)


def test_momentum_image_examples():
    rep = momentum_image_check((-1, 1), None)
    assert rep.deviation == 0 or rep.deviation < 1e-15
    rep = momentum_image_check((-1, 1), random_relative_potential(make_rng(3), (-1, 1)))
    assert rep.deviation <= 1e-10 and rep.monotone
    with pytest.raises(NotConvex):
        momentum_image_check((-1, 1), poly(0, 0, -1.0))


def test_momentum_image_failure_reports_deviation():
    # a wrong reference breaks the d^c relation; the failure carries the deviation
    with pytest.raises(CheckFailed) as err:
        momentum_image_check((-1, 1), poly(0, 0, 0.3), tol=-1.0)
    assert err.value.deviation >= 0
