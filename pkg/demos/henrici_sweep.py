"""Departure from normality of a two-machine system as the angle spread grows.

With a lossless network the inertia-normalized stiffness stays symmetric.
Transfer conductances make it nonsymmetric, increasingly so as the
machines pull apart.
"""

import numpy as np

from maxgrowth import TwoMachineParams
from maxgrowth.models import henrici_sweep


def main():
    dd = np.radians(np.arange(0, 61, 10))
    lossy = henrici_sweep(TwoMachineParams(), dd)
    lossless = henrici_sweep(TwoMachineParams().lossless(), dd)
    print(" angle   nu(lossy)   nu(lossless)")
    for (d, a), (_, b) in zip(lossy, lossless):
        print(f"{np.degrees(d):5.0f}   {a:9.5f}   {b:11.2e}")
    for H1 in (1.0, 3.0, 10.0):
        rows = henrici_sweep(TwoMachineParams(H1=H1, H2=1.0), dd)
        print(f"H1/H2 = {H1:4.1f}: nu(60 deg) = {rows[-1, 1]:.5f}")


if __name__ == "__main__":
    main()
