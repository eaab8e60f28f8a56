"""Maximum transient growth over a time horizon.

For each grid time ``t_k = k dT`` the largest singular value of the weighted
exponential map is computed, either from a full dense SVD or from a
restarted Golub-Kahan-Lanczos bidiagonalization that only touches the map
through its forward and adjoint actions. The squared singular value is the
growth ``G(t)``; its right singular vector is the optimal initial
perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ConvergenceError, DimensionError, MaxGrowthError
from .operators import (
    DaeBlocks,
    LinearOperator,
    PropagatorConfig,
    WeightSpec,
    aslinearoperator,
    dense_system,
    weighted_map,
)

__all__ = [
    "GrowthCurve",
    "MaxGrowthResult",
    "SvdIterConfig",
    "sign_normalize",
    "sigma_max_dense",
    "sigma_max_matfree",
    "max_growth",
    "growth_of_state",
]


def sign_normalize(v):
    """Unit vector with its largest-magnitude entry (first on ties) positive."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0:
        return v.copy()
    v = v / nv
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


@dataclass(frozen=True)
class SvdIterConfig:
    """Settings of the matrix-free singular value iteration.

    ``tol`` bounds the relative change of the singular value estimate between
    restarts (and the relative residual); ``max_iter`` caps the total number
    of bidiagonalization steps; ``krylov_dim`` is the restart length.
    """

    tol: float = 1e-8
    max_iter: int = 300
    seed: int = 0
    krylov_dim: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.krylov_dim < 1:
            raise ValueError("krylov_dim must be at least 1")


def sigma_max_dense(M):
    """Leading singular value and sign-normalized right singular vector."""
    if isinstance(M, LinearOperator):
        M = M.to_dense()
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        raise DimensionError("empty matrix")
    _, s, Vt = linalg.dense_svd(M)
    return float(s[0]), sign_normalize(Vt[0])


def _orthogonalize(w, basis, count):
    # two passes of classical Gram-Schmidt keep the Krylov bases orthogonal
    if count:
        Q = basis[:count]
        w = w - Q.T @ (Q @ w)
        w = w - Q.T @ (Q @ w)
    return w


def sigma_max_matfree(M, cfg=None):
    """Leading singular pair of an operator from its actions only.

    Restarted Golub-Kahan-Lanczos bidiagonalization with full
    reorthogonalization, equivalent to Lanczos on ``M.T M``. Each cycle
    builds ``krylov_dim`` steps from the current best right singular vector;
    the iteration stops when the estimate changes by less than ``tol``
    (relative) between cycles, when the residual falls below ``tol``, or when
    the Krylov space becomes invariant.

    Raises
    ------
    ConvergenceError
        After ``cfg.max_iter`` bidiagonalization steps; carries the best
        estimate and vector.
    """
    cfg = cfg or SvdIterConfig()
    op = aslinearoperator(M)
    n, m = op.dim_in, op.dim_out
    if n == 0 or m == 0:
        raise DimensionError("empty operator")
    rng = np.random.default_rng(cfg.seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)

    kmax = min(cfg.krylov_dim, n)
    V = np.zeros((kmax + 1, n))
    U = np.zeros((kmax, m))
    sigma, sigma_prev = 0.0, None
    steps = 0
    while True:
        alphas, betas = [], []
        V[0] = v
        beta = 0.0
        left_breakdown = right_breakdown = False
        k = 0
        while k < kmax and steps < cfg.max_iter:
            u = op._apply(V[k])
            if k:
                u = u - beta * U[k - 1]
            u = _orthogonalize(u, U, k)
            alpha = np.linalg.norm(u)
            steps += 1
            if alpha <= 1e-13 * max(sigma, *alphas, *betas, 1e-300):
                left_breakdown = True
                break
            U[k] = u / alpha
            alphas.append(alpha)
            w = op._apply_adjoint(U[k]) - alpha * V[k]
            w = _orthogonalize(w, V, k + 1)
            beta = np.linalg.norm(w)
            betas.append(beta)
            k += 1
            if beta <= 1e-13 * max(alphas):
                right_breakdown = True
                break
            V[k] = w / beta

        if k == 0:
            # M v = 0 for the start vector; only possible for a zero map in practice
            return 0.0, sign_normalize(v)

        if left_breakdown:
            # M V_{k+1} = U_k [B_k, beta_k e_k] exactly: the projection is invariant
            Bk = np.zeros((k, k + 1))
            Bk[np.arange(k), np.arange(k)] = alphas
            Bk[np.arange(k), np.arange(1, k + 1)] = betas
            _, s, Yt = np.linalg.svd(Bk)
            return float(s[0]), sign_normalize(V[: k + 1].T @ Yt[0])

        Bk = np.diag(alphas)
        if k > 1:
            Bk += np.diag(betas[: k - 1], 1)
        Xb, s, Yt = np.linalg.svd(Bk)
        sigma = float(s[0])
        v = sign_normalize(V[:k].T @ Yt[0])
        # M.T u - sigma v = beta_k x_k v_{k+1} for the Ritz pair
        residual = abs(betas[k - 1] * Xb[-1, 0])

        if right_breakdown or residual <= cfg.tol * sigma:
            return sigma, v
        if sigma_prev is not None and abs(sigma - sigma_prev) <= cfg.tol * sigma:
            return sigma, v
        if steps >= cfg.max_iter:
            raise ConvergenceError(
                f"singular value iteration did not converge in {cfg.max_iter} steps "
                f"(estimate {sigma:.12g}, relative residual {residual / max(sigma, 1e-300):.2e})",
                estimate=sigma,
                vector=v,
            )
        sigma_prev = sigma


@dataclass(frozen=True, eq=False)
class GrowthCurve:
    """Largest singular value of the weighted map on a uniform time grid."""

    times: np.ndarray
    sigma_max: np.ndarray

    @property
    def growth(self):
        return self.sigma_max**2

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True, eq=False)
class MaxGrowthResult:
    """Peak of the growth curve and the perturbation that attains it.

    ``v_max`` is in the map's input coordinates (reduced coordinates for a
    restricted seminorm); ``x_max`` is the corresponding normalized full
    state (equal to ``v_max`` when no restriction applies, ``None`` in
    io_map mode where the input is an impulse, not a state).
    """

    s_max: float
    t_star: float
    v_max: np.ndarray
    curve: GrowthCurve
    x_max: np.ndarray | None = None
    backend: str = "dense"
    weights: WeightSpec = field(default_factory=WeightSpec)

    @property
    def peak_growth(self):
        return self.s_max**2


def _lift(W, v, n):
    if W.mode == "io_map":
        return None
    R = W.restriction(n)
    if R is None:
        if W.mode == "norm_pair" and W.B is not None:
            x = np.linalg.solve(W.B, v)
            return x / np.linalg.norm(x)
        return v
    x = R[1].to_scipy() @ v
    return x / np.linalg.norm(x)


def max_growth(
    system,
    W=None,
    dT=0.01,
    n=100,
    backend="dense",
    prop_cfg=None,
    svd_cfg=None,
    override_guard=False,
):
    """Sweep ``t = k dT`` for ``k = 0..n`` and return the largest growth.

    Parameters
    ----------
    system : ndarray, SparseMatrix, DaeBlocks or LinearOperator
    W : WeightSpec, optional
        Defaults to euclidean.
    dT : float
        Grid spacing in seconds.
    n : int
        Number of grid intervals; the grid has ``n + 1`` points including
        both ends.
    backend : {"dense", "matfree"}
    prop_cfg : PropagatorConfig, optional
        RK4 step settings (matrix-free only). ``t_final`` is ignored.
    svd_cfg : SvdIterConfig, optional
        Singular value iteration settings (matrix-free only).

    Notes
    -----
    The running maximum starts from the ``t = 0`` grid point rather than 1,
    so that maps whose norm at ``t = 0`` differs from 1 are reported
    faithfully. The earliest grid time wins ties.
    """
    W = W or WeightSpec()
    if not dT > 0:
        raise ValueError("dT must be positive")
    if int(n) < 1:
        raise ValueError("n must be at least 1")
    n = int(n)
    times = np.arange(n + 1) * float(dT)

    if backend == "dense":
        A = dense_system(system, override_guard)
        nstate = A.shape[0]

        def point(t):
            return sigma_max_dense(weighted_map(A, W, t, "dense", override_guard=override_guard).matrix)

    elif backend == "matfree":
        A = aslinearoperator(system)
        nstate = A.dim_in
        if prop_cfg is None:
            explicit = not isinstance(system, (DaeBlocks, LinearOperator))
            prop_cfg = PropagatorConfig.for_system(system if explicit else A, times[-1])
        svd_cfg = svd_cfg or SvdIterConfig()

        def point(t):
            return sigma_max_matfree(weighted_map(A, W, t, "matfree", prop_cfg), svd_cfg)

    else:
        raise ValueError(f"unknown backend {backend!r}")

    sig = np.empty(n + 1)
    best_k, best_v = 0, None
    for k, t in enumerate(times):
        try:
            s1, v1 = point(t)
        except ConvergenceError as exc:
            raise ConvergenceError(f"at t = {t:g}: {exc}", exc.estimate, exc.vector) from None
        except MaxGrowthError as exc:
            raise type(exc)(f"at t = {t:g}: {exc}") from None
        sig[k] = s1
        if best_v is None or s1 > sig[best_k]:
            best_k, best_v = k, v1

    curve = GrowthCurve(times, sig)
    return MaxGrowthResult(
        s_max=float(sig[best_k]),
        t_star=float(times[best_k]),
        v_max=best_v,
        curve=curve,
        x_max=_lift(W, best_v, nstate),
        backend=backend,
        weights=W,
    )


def growth_of_state(system, x0, t, W=None, backend="dense", prop_cfg=None):
    """Growth ``||x(t)||^2 / ||x(0)||^2`` of one initial condition.

    Norms follow ``W``: the output norm at time ``t`` and the input norm at
    time 0. For a restricted seminorm ``x0`` may be given in reduced
    coordinates (length k) or as a full state, which must then lie in the
    complement of the weight's nullspace. In io_map mode ``x0`` is the input
    impulse.
    """
    W = W or WeightSpec()
    x0 = np.asarray(x0, dtype=float)
    if not np.any(x0):
        raise ValueError("initial state is zero")
    if backend == "dense":
        A = dense_system(system)
        nstate = A.shape[0]
    else:
        A = aslinearoperator(system)
        nstate = A.dim_in

    R = W.restriction(nstate)
    if R is not None and x0.shape == (nstate,):
        F = R[0].to_scipy()
        outside = x0 - F @ (F.T @ x0)
        if np.linalg.norm(outside) > 1e-12 * np.linalg.norm(x0):
            raise ValueError("x0 has components in the nullspace of the seminorm weight")
        # reduced coordinates z with C_hat z = x0
        x0 = (F.T @ x0) * W.weights
    elif W.mode == "norm_pair" and W.B is not None:
        x0 = W.B @ x0

    M = weighted_map(A, W, t, backend, prop_cfg)
    num = np.linalg.norm(M.apply(x0)) ** 2
    return float(num / np.dot(x0, x0))
