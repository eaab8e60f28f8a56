"""Undamped two-machine oscillator under two different norms.

In the energy norm the map is an isometry and growth stays at 1. In plain
euclidean coordinates the same trajectories appear to grow fourfold, because
the angle and speed units are mismatched.
"""

import numpy as np

from maxgrowth import fixture, max_growth


def main():
    fx = fixture("oscillator_2bus")
    energy = max_growth(fx.A, fx.metadata["weights"]["energy"], dT=0.01, n=500)
    euc = max_growth(fx.A, dT=0.005, n=1000)
    print("A =\n", fx.A)
    print(f"energy norm: growth in [{energy.curve.growth.min():.12f}, {energy.curve.growth.max():.12f}]")
    print(f"euclidean:   peak {euc.peak_growth:.6f} at t = {euc.t_star:.3f} (pi/4 = {np.pi / 4:.3f})")


if __name__ == "__main__":
    main()
