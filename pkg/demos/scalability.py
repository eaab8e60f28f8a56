"""Memory of the matrix-free backend on synthetic sparse DAEs.

The dense backend stores the full exponential map, so its footprint grows as
n^2; the matrix-free one keeps a sparse LU and a few Krylov vectors. Above the
dense guard the dense run is skipped rather than attempted.
"""

import sys

from maxgrowth.bench import run_bench


def main(sizes):
    rep = run_bench(list(sizes), ["dense", "matfree"])
    print(rep.to_text())


if __name__ == "__main__":
    main([int(s) for s in sys.argv[1:]] or (250, 500, 1000, 5000))
