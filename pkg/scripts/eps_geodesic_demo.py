"""Monotone approach of epsilon-geodesics to the linear geodesic."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from _config import parse

from wkgeom.geodesic import epsilon_sequence
from wkgeom.sampling import make_rng, random_relative_potential


@dataclass
class Config:
    """Solve the epsilon-geodesic problem along a decreasing sequence of epsilon."""

    a: float = -1.0
    b: float = 1.0
    epsilons: list = field(default_factory=lambda: [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    grid: list = field(default_factory=lambda: [24, 24])
    seed: int = 2


def main(cfg: Config) -> int:
    rng = make_rng(cfg.seed)
    P = (cfg.a, cfg.b)
    sols = epsilon_sequence(random_relative_potential(rng, P), random_relative_potential(rng, P),
                            cfg.epsilons, tuple(cfg.grid))
    print(f"{'eps':>8} {'newton its':>10} {'sup|Phi - geodesic|':>20} {'fiber margin':>13}")
    for s in sols:
        print(f"{s.eps:8.1e} {len(s.trace):10d} {s.distance_to_geodesic:20.6e} {s.fiber_margin:13.4e}")
    gaps = [float((lo.Phi - hi.Phi)[:, 1:-1].min()) for hi, lo in zip(sols, sols[1:])]
    print("min interior increase of Phi per step:", " ".join(f"{g:.2e}" for g in gaps))
    ratios = [sols[k].distance_to_geodesic / sols[k + 1].distance_to_geodesic for k in range(len(sols) - 1)]
    print("distance ratios between steps:", " ".join(f"{r:.3f}" for r in ratios))
    return 0 if min(gaps) >= 0 and min(np.diff([s.distance_to_geodesic for s in sols])) <= 0 else 2


if __name__ == "__main__":
    raise SystemExit(main(parse(Config)))
