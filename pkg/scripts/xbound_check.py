"""Stability of the defect bound constant under eps halving.

Along a tracked run, ||X(t)|| should be controlled by
eps ||w||_L2 + ||w||_H12^2 + ||w||_H12^3 with a single constant; the
fitted constant must not move by more than a factor of two when eps
is halved, otherwise the bound shape is wrong.
"""

import sys

from szego_lab.spectral_core import SpectralGrid
from szego_lab.operators import gaussian_potential
from szego_lab.soliton_manifold import GroupElement, soliton_profile
from szego_lab.dynamics import EffectiveState, evolve_effective, evolve_pde
from szego_lab.decomposition import theorem_metrics, track

GRID = SpectralGrid(8192, 256.0)
G0 = GroupElement(-3.0, 1.0, 0.0, 3.0)
B = gaussian_potential(1.0, 0.0, 1.0)


def c_fit(eps: float) -> float:
    dt = 5e-4
    t_final = round((eps ** -0.5) / (100 * dt)) * 100 * dt
    traj = evolve_pde(soliton_profile(G0, GRID), B, eps, t_final, dt, stride=100)
    eff = evolve_effective(EffectiveState(0.0, G0), B, eps, t_final,
                           t_eval=traj.times, grid=GRID, rtol=1e-11, atol=1e-13)
    rep = track(traj, B, eps, eff, g0=G0)
    return theorem_metrics(rep, eps, 0.35)["c_fit"]


def main() -> int:
    c1 = c_fit(1e-2)
    c2 = c_fit(5e-3)
    ratio = max(c1, c2) / min(c1, c2)
    print(f"c_fit(1e-2) = {c1:.4f}")
    print(f"c_fit(5e-3) = {c2:.4f}")
    print(f"ratio       = {ratio:.3f}  ({'stable' if ratio <= 2 else 'UNSTABLE'})")
    return 0 if ratio <= 2 else 1


if __name__ == "__main__":
    sys.exit(main())
