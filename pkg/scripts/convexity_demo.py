"""Energy profile of M_{v,w} along one random geodesic, with the convexity verdicts."""
from __future__ import annotations

from dataclasses import dataclass

from _config import parse

from wkgeom.geodesic import make_geodesic, scan_energies, second_variation_check
from wkgeom.sampling import make_rng, random_relative_potential, random_weight


@dataclass
class Config:
    """Scan a random geodesic on [a, b] for random weights of one family."""

    a: float = -1.0
    b: float = 1.0
    family: str = "exponential"
    samples: int = 41
    seed: int = 1


def main(cfg: Config) -> int:
    rng = make_rng(cfg.seed)
    P = (cfg.a, cfg.b)
    path = make_geodesic(random_relative_potential(rng, P), random_relative_potential(rng, P))
    v, w = random_weight(rng, P, cfg.family), random_weight(rng, P, cfg.family)
    res = scan_energies(path, cfg.samples, v, w, raise_on_fail=False)
    print(f"{'t':>6} {'E_w':>13} {'E_vRic':>13} {'H_v':>13} {'M':>13} {'M_rel':>13} {'d2M':>11}")
    for row in res.rows():
        t, *vals, d2 = row
        print(f"{t:6.3f} " + " ".join(f"{x:13.6e}" for x in vals) + f" {d2:11.3e}")
    for vd in res.verdicts:
        print(f"[{'PASS' if vd.passed else 'FAIL'}] {vd.name} margin={vd.margin:.3e} {vd.detail}")
    closed, fd = second_variation_check(path, 0.5, v, "omega")
    print(f"d2/dt2 E_v^omega at t=1/2: closed {closed:.10e}, finite difference {fd:.10e}")
    return 0 if all(vd.passed for vd in res.verdicts) else 2


if __name__ == "__main__":
    raise SystemExit(main(parse(Config)))
