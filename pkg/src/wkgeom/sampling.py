"""Seeded random draws: Philox counter-based generator, admissible potentials, weights."""
from __future__ import annotations

import numpy as np

from .polytope import MomentumPolytope, interval
from .toricgeom import _ab, cheb
from .weights import WeightFunction, make_weight


def make_rng(seed: int) -> np.random.Generator:
    """Philox-4x64 keyed by ``seed``; the draw sequence is fixed by the key alone."""
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64))


def random_relative_potential(rng: np.random.Generator, P, degree: int = 8, decay: float = 0.5,
                              amplitude: float = 0.3, convexity_margin: float = 0.5):
    """A Chebyshev relative potential with geometrically decaying coefficients.

    Rescaled if needed so that ``f'' >= -convexity_margin * min u_G''``, which
    keeps ``u_G + f`` strictly convex with room to spare.
    """
    a, b = _ab(P)
    coef = rng.standard_normal(degree + 1) * amplitude * decay ** np.arange(degree + 1)
    f = cheb(coef, (a, b))
    floor = convexity_margin * 2.0 / (b - a)  # min of u_G''
    grid = np.linspace(a, b, 513)
    low = -f.deriv(2)(grid).min()
    if low > floor:
        f = f * (floor / low)
    return f


WEIGHT_FAMILIES = ("constant", "affine", "exponential", "power", "polynomial")


def random_weight(rng: np.random.Generator, P: MomentumPolytope | tuple, family: str) -> WeightFunction:
    """A positive weight of the given family on the interval ``P``."""
    if not isinstance(P, MomentumPolytope):
        P = interval(*P)
    a, b = P.interval
    half = (b - a) / 2
    if family == "constant":
        params = {"value": float(rng.uniform(0.5, 2.0))}
    elif family == "affine":
        slope = float(rng.uniform(-0.6, 0.6)) / half
        mid = (a + b) / 2
        params = {"a": 1.0 - slope * mid, "xi": [slope]}
    elif family == "exponential":
        params = {"xi": [float(rng.uniform(-0.8, 0.8)) / half]}
    elif family == "power":
        slope = float(rng.uniform(0.2, 0.8)) / half
        params = {"xi": [slope], "c": 1.0 - slope * a, "alpha": float(rng.uniform(-2.0, 3.0))}
    elif family == "polynomial":
        c1, c2 = rng.uniform(-0.3, 0.3, 2)
        mid = (a + b) / 2
        # 1 + c1 t + c2 t^2 in t = (mu - mid)/half, expanded in mu
        params = {"coeffs": [1 - c1 * mid / half + c2 * mid**2 / half**2,
                             c1 / half - 2 * c2 * mid / half**2,
                             c2 / half**2]}
    else:
        raise ValueError(f"unknown family {family!r}")
    return make_weight(family, params, P, require_positive=True)
