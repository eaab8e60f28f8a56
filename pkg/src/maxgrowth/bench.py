"""Scalability benchmark on synthetic sparse DAEs.

The synthetic systems are block tridiagonal. Each block carries 4 dynamic
and 2 algebraic states, and the blocks are coupled to their neighbours. The
entries are drawn so that stability is guaranteed by construction: ``f_x``
has a logarithmic infinity-norm of at most -1.5, ``g_y`` is strictly
diagonally dominant with ``||g_y^{-1}||_inf <= 0.5``, and the row sums of
``f_y`` and ``g_x`` are at most 1. That bounds the infinity-norm of the
eliminated term by 0.5 and puts the spectral abscissa of the reduced
Jacobian at or below -1.

Memory is measured with :mod:`tracemalloc` as the peak Python/numpy
allocation made during the run. The system itself is built beforehand and
is not counted. Allocations made inside SuperLU are invisible to
tracemalloc, but the factorization of ``g_y`` happens when the system is
built, so the measured run does not include it either.
"""

from __future__ import annotations

import gc
import math
import time
import tracemalloc
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DenseGuardError, MaxGrowthError
from .growth import SvdIterConfig, sigma_max_dense, sigma_max_matfree
from .linalg import DENSE_GUARD, SparseMatrix
from .operators import DaeBlocks, PropagatorConfig, WeightSpec, explicit_reduced_jacobian, weighted_map

__all__ = ["BENCH_TIMES", "BenchRow", "BenchReport", "synthetic_dae", "run_case", "run_bench"]

DYN_PER_BLOCK = 4
ALG_PER_BLOCK = 2
#: Five grid points in (0, 1].
BENCH_TIMES = (0.2, 0.4, 0.6, 0.8, 1.0)


def _coo(rows, cols, vals, shape):
    cat = lambda parts, dt: np.concatenate([np.asarray(p, dt) for p in parts])
    return SparseMatrix.from_coo(cat(rows, np.int64), cat(cols, np.int64), cat(vals, float), shape)


def synthetic_dae(n, seed=0):
    """Stable block-tridiagonal DAE with ``n`` dynamic states.

    There are ``ceil(n / 4)`` blocks with ``2 * ceil(n / 4)`` algebraic
    states. When ``n`` is not a multiple of 4 the last block keeps only
    ``n mod 4`` dynamic states.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    nb = math.ceil(n / DYN_PER_BLOCK)
    m = ALG_PER_BLOCK * nb
    i = np.arange(n)
    blk = i // DYN_PER_BLOCK

    # f_x: diagonal in [-4, -3]; off-diagonal row sums at most 1.5
    rows, cols, vals = [i], [i], [-rng.uniform(3.0, 4.0, n)]
    for off in (1, 2, 3):
        # in-block, nonsymmetric: at most 3 entries per row, each below 1/3
        for a, b in ((i, i + off), (i + off, i)):
            keep = (b < n) & (a < n) & (np.minimum(a, b) // DYN_PER_BLOCK == np.maximum(a, b) // DYN_PER_BLOCK)
            rows.append(a[keep])
            cols.append(b[keep])
            vals.append(rng.uniform(-1.0, 1.0, int(keep.sum())) / 3.0)
    for nbr in (blk - 1, blk + 1):
        # one entry per neighbouring block, each below 1/4
        keep = (nbr >= 0) & (nbr < nb)
        rows.append(i[keep])
        cols.append(np.minimum(nbr[keep] * DYN_PER_BLOCK, n - 1))
        vals.append(rng.uniform(-0.25, 0.25, int(keep.sum())))
    f_x = _coo(rows, cols, vals, (n, n))

    # g_y: diagonal in [4, 5], off-diagonal row sums at most 2
    j = np.arange(m)
    rows, cols, vals = [j], [j], [rng.uniform(4.0, 5.0, m)]
    for off in (-2, -1, 1, 2):
        r = j[(j + off >= 0) & (j + off < m)]
        rows.append(r)
        cols.append(r + off)
        vals.append(rng.uniform(-0.5, 0.5, r.size))
    g_y = _coo(rows, cols, vals, (m, m))

    # f_y ties each dynamic state to its block's algebraic pair; g_x the converse
    ya = ALG_PER_BLOCK * blk
    f_y = _coo([i, i], [ya, ya + 1], [rng.uniform(-0.5, 0.5, 2 * n)], (n, m))
    xs = np.minimum((j // ALG_PER_BLOCK) * DYN_PER_BLOCK + j % ALG_PER_BLOCK, n - 1)
    g_x = _coo([j, j], [xs, np.minimum(xs + 2, n - 1)], [rng.uniform(-0.5, 0.5, 2 * m)], (m, n))
    return DaeBlocks(f_x=f_x, f_y=f_y, g_x=g_x, g_y=g_y)


@dataclass
class BenchRow:
    name: str
    n: int
    nnz: int
    backend: str
    wall_time: float
    peak_bytes: int
    status: str
    reason: str = ""
    s_max: float = float("nan")


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def to_text(self):
        head = f"{'case':<14}{'n':>7}{'nnz':>9}  {'backend':<8}{'time [s]':>10}{'peak [B]':>13}  status"
        out = [head, "-" * len(head)]
        for r in self.rows:
            line = f"{r.name:<14}{r.n:>7}{r.nnz:>9}  {r.backend:<8}{r.wall_time:>10.3f}{r.peak_bytes:>13}  {r.status}"
            if r.reason:
                line += f" ({r.reason})"
            out.append(line)
        return "\n".join(out)

    def to_dicts(self):
        return [asdict(r) for r in self.rows]


def run_case(blocks, backend, name="synthetic", times=BENCH_TIMES, svd_cfg=None, prop_cfg=None,
             override_guard=False):
    """Time and measure one ``(system, backend)`` pair; never raises for numerical failures."""
    n = blocks.n
    row = BenchRow(name, n, blocks.nnz, backend, 0.0, 0, "ok")
    if backend == "dense" and n > DENSE_GUARD and not override_guard:
        row.status = "skipped-guard"
        row.reason = f"n = {n} > {DENSE_GUARD}; the dense map alone needs {n * n * 8} bytes"
        return row

    W = WeightSpec()
    svd_cfg = svd_cfg or SvdIterConfig()
    gc.collect()
    tracemalloc.start()
    tracemalloc.reset_peak()
    base = tracemalloc.get_traced_memory()[0]
    t0 = time.perf_counter()
    try:
        if backend == "dense":
            A = explicit_reduced_jacobian(blocks, override_guard)
            sig = [sigma_max_dense(weighted_map(A, W, t, "dense", override_guard=override_guard).matrix)[0]
                   for t in times]
        elif backend == "matfree":
            cfg = prop_cfg or PropagatorConfig.for_system(blocks, max(times))
            sig = [sigma_max_matfree(weighted_map(blocks, W, t, "matfree", cfg), svd_cfg)[0] for t in times]
        else:
            raise ValueError(f"unknown backend {backend!r}")
        row.s_max = float(max(sig))
    except (DenseGuardError, MemoryError) as exc:
        row.status, row.reason = "skipped-guard", str(exc)
    except (MaxGrowthError, ValueError, ArithmeticError) as exc:
        row.status, row.reason = "failed", f"{type(exc).__name__}: {exc}"
    finally:
        row.wall_time = time.perf_counter() - t0
        row.peak_bytes = max(0, tracemalloc.get_traced_memory()[1] - base)
        tracemalloc.stop()
    return row


def run_bench(sizes, backends=("dense", "matfree"), seed=0, svd_cfg=None, override_guard=False):
    """One row per ``(size, backend)`` pair, in the order requested."""
    report = BenchReport()
    for n in sizes:
        blocks = synthetic_dae(int(n), seed=seed)
        for b in backends:
            report.rows.append(run_case(blocks, b, name=f"synthetic-{n}", svd_cfg=svd_cfg,
                                        override_guard=override_guard))
    return report
