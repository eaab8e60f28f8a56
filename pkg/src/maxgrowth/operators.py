"""Action-only linear operators.

The matrix-free backend never forms ``exp(A t)``; it only needs
``x -> exp(A t) x`` and ``y -> exp(A t).T y``, obtained here by fixed-step
fourth-order Runge-Kutta on ``x' = A x`` and on the adjoint ``y' = A.T y``.
For a linear system one RK4 step is the degree-4 Taylor polynomial of
``exp(h A)``, so the discrete adjoint is exact: the transpose-propagator
built from ``A.T`` is the transpose of the forward propagator to rounding.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from . import linalg
from .errors import DefinitenessError, DimensionError, InstabilityError, SingularMatrixError
from .linalg import SparseMatrix, as_sparse, check_dense_guard

__all__ = [
    "DEFAULT_STEP_FRACTION",
    "LinearOperator",
    "aslinearoperator",
    "DaeBlocks",
    "reduced_jacobian_operator",
    "explicit_reduced_jacobian",
    "PropagatorConfig",
    "estimate_norm",
    "propagate",
    "propagate_adjoint",
    "WeightSpec",
    "build_restriction",
    "weighted_map",
    "dense_system",
]

#: Default RK4 step is ``DEFAULT_STEP_FRACTION / norm_estimate``.
DEFAULT_STEP_FRACTION = 0.05

#: Hard ceiling on ``step * norm_estimate``.
MAX_STEP_NORM = 0.5

DIVERGENCE_FACTOR = 1e12


class LinearOperator:
    """A linear map known only through its action and its adjoint action.

    Parameters
    ----------
    shape : (dim_out, dim_in)
    apply : callable
        ``x -> M x`` for ``x`` of length ``dim_in``.
    apply_adjoint : callable
        ``y -> M.T y`` for ``y`` of length ``dim_out``.
    matrix : ndarray, optional
        Explicit dense matrix, when one exists (dense backend).
    """

    def __init__(self, shape, apply, apply_adjoint, matrix=None, name=None):
        self.shape = (int(shape[0]), int(shape[1]))
        self._apply = apply
        self._apply_adjoint = apply_adjoint
        self.matrix = matrix
        self.name = name

    @property
    def dim_out(self):
        return self.shape[0]

    @property
    def dim_in(self):
        return self.shape[1]

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_in,):
            raise DimensionError(f"operator expects input of length {self.dim_in}, got {x.shape}")
        return np.asarray(self._apply(x), dtype=float)

    def apply_adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim_out,):
            raise DimensionError(f"adjoint expects input of length {self.dim_out}, got {y.shape}")
        return np.asarray(self._apply_adjoint(y), dtype=float)

    def __matmul__(self, x):
        return self.apply(x)

    @property
    def T(self):
        return LinearOperator(
            (self.dim_in, self.dim_out),
            self._apply_adjoint,
            self._apply,
            matrix=None if self.matrix is None else self.matrix.T,
        )

    def to_dense(self, override_guard=False):
        """Materialize by applying to canonical basis vectors."""
        if self.matrix is not None:
            return np.array(self.matrix, dtype=float)
        check_dense_guard(max(self.shape), override_guard, "operator")
        out = np.empty(self.shape)
        e = np.zeros(self.dim_in)
        for j in range(self.dim_in):
            e[j] = 1.0
            out[:, j] = self.apply(e)
            e[j] = 0.0
        return out

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<LinearOperator{label} {self.shape[0]}x{self.shape[1]}>"


def aslinearoperator(A):
    """Wrap a dense array, sparse matrix, :class:`DaeBlocks` or operator."""
    if isinstance(A, LinearOperator):
        return A
    if isinstance(A, DaeBlocks):
        return reduced_jacobian_operator(A)
    if isinstance(A, SparseMatrix) or scipy.sparse.issparse(A):
        csc = as_sparse(A).to_scipy()
        csr_t = csc.T.tocsr()
        csr = csc.tocsr()
        return LinearOperator(csc.shape, csr.__matmul__, csr_t.__matmul__, name="sparse")
    a = np.atleast_2d(np.asarray(A, dtype=float))
    if a.ndim != 2:
        raise DimensionError("expected a 2-D array")
    return LinearOperator(a.shape, a.__matmul__, a.T.__matmul__, matrix=a, name="dense")


# ---------------------------------------------------------------------------
# Linearized DAE


@dataclass(frozen=True, eq=False)
class DaeBlocks:
    """Linearized DAE ``dx = f_x x + f_y y``, ``0 = g_x x + g_y y``.

    ``g_y`` is factored once on construction and the factors are reused by
    every reduced-Jacobian product.
    """

    f_x: SparseMatrix
    f_y: SparseMatrix
    g_x: SparseMatrix
    g_y: SparseMatrix
    g_y_lu: linalg.LuFactors = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("f_x", "f_y", "g_x", "g_y"):
            object.__setattr__(self, name, as_sparse(getattr(self, name)))
        n, m = self.f_x.nrows, self.g_y.nrows
        expected = {"f_x": (n, n), "f_y": (n, m), "g_x": (m, n), "g_y": (m, m)}
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise DimensionError(
                    f"{name} has shape {got}, expected {shape} (n={n} dynamic, m={m} algebraic)"
                )
        try:
            lu = linalg.sparse_lu(self.g_y)
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"g_y is singular: {exc}", pivot=exc.pivot) from None
        object.__setattr__(self, "g_y_lu", lu)

    @property
    def n(self):
        return self.f_x.nrows

    @property
    def m(self):
        return self.g_y.nrows

    @property
    def nnz(self):
        return self.f_x.nnz + self.f_y.nnz + self.g_x.nnz + self.g_y.nnz


def reduced_jacobian_operator(blocks):
    """Action of the Schur complement ``J_r = f_x - f_y g_y^{-1} g_x``.

    ``J_r`` is never formed; each product costs four sparse products and one
    reuse of the LU factors of ``g_y``.
    """
    fx = blocks.f_x.to_scipy().tocsr()
    fy = blocks.f_y.to_scipy().tocsr()
    gx = blocks.g_x.to_scipy().tocsr()
    fxT, fyT, gxT = fx.T.tocsr(), fy.T.tocsr(), gx.T.tocsr()
    lu = blocks.g_y_lu

    def matvec(v):
        y = lu.solve(gx @ v)
        return fx @ v - fy @ y

    def rmatvec(v):
        y = lu.solve_transpose(fyT @ v)
        return fxT @ v - gxT @ y

    return LinearOperator((blocks.n, blocks.n), matvec, rmatvec, name="reduced Jacobian")


def explicit_reduced_jacobian(blocks, override_guard=False):
    """Dense ``J_r = f_x - f_y g_y^{-1} g_x``."""
    check_dense_guard(blocks.n, override_guard, "reduced Jacobian")
    gx = blocks.g_x.to_dense()
    if blocks.m:
        z = blocks.g_y_lu.solve(gx)
        if z.ndim == 1:
            z = z[:, None]
    else:
        z = np.zeros((0, blocks.n))
    return blocks.f_x.to_dense() - blocks.f_y.to_scipy() @ z


def dense_system(system, override_guard=False):
    """Dense state matrix for any supported system representation."""
    if isinstance(system, DaeBlocks):
        return explicit_reduced_jacobian(system, override_guard)
    if isinstance(system, LinearOperator):
        return system.to_dense(override_guard)
    if isinstance(system, SparseMatrix) or scipy.sparse.issparse(system):
        sp = as_sparse(system)
        check_dense_guard(max(sp.shape), override_guard)
        return sp.to_dense()
    a = np.atleast_2d(np.asarray(system, dtype=float))
    check_dense_guard(max(a.shape), override_guard)
    return a


# ---------------------------------------------------------------------------
# Time propagation


def estimate_norm(A, iterations=20, seed=0):
    """Cheap upper-scale estimate of the size of ``A`` for step selection.

    Uses the 1-norm when the matrix is explicit, else ``iterations`` power
    iterations on ``A.T A`` (which bounds the spectral radius from above
    once converged).
    """
    if isinstance(A, SparseMatrix) or scipy.sparse.issparse(A):
        return float(abs(as_sparse(A).to_scipy()).sum(axis=0).max())
    op = aslinearoperator(A)
    if op.matrix is not None:
        return float(np.abs(op.matrix).sum(axis=0).max()) if op.matrix.size else 0.0
    x = np.random.default_rng(seed).standard_normal(op.dim_in)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iterations):
        w = op.apply_adjoint(op.apply(x))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = math.sqrt(nw)
        x = w / nw
    return est


@dataclass(frozen=True)
class PropagatorConfig:
    """RK4 settings: horizon ``t_final``, step ``h`` and the size estimate of A.

    ``step * norm_estimate`` must not exceed 0.5.
    """

    t_final: float
    step: float
    norm_estimate: float

    def __post_init__(self):
        if not self.t_final >= 0:
            raise ValueError("t_final must be nonnegative")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.step * self.norm_estimate > MAX_STEP_NORM * (1 + 1e-12):
            raise ValueError(
                f"step*norm_estimate = {self.step * self.norm_estimate:.3g} exceeds "
                f"{MAX_STEP_NORM}; reduce the step"
            )

    @classmethod
    def for_system(cls, A, t_final=1.0, step=None, step_fraction=DEFAULT_STEP_FRACTION):
        """Config with the step chosen from a norm estimate of ``A``."""
        rho = estimate_norm(A)
        if step is None:
            step = step_fraction / rho if rho > 0 else max(t_final, 1.0)
        return cls(float(t_final), float(step), rho)

    def at(self, t):
        return dataclasses.replace(self, t_final=float(t))

    @property
    def n_steps(self):
        return math.ceil(self.t_final / self.step - 1e-9) if self.t_final > 0 else 0


def _rk4_power(matvec, v, cfg):
    nsteps = cfg.n_steps
    x = np.array(v, dtype=float)
    if nsteps == 0:
        return x
    h = cfg.t_final / nsteps
    limit = DIVERGENCE_FACTOR * max(np.linalg.norm(x), np.finfo(float).tiny)
    c2, c3, c4 = h / 2, h / 3, h / 4
    for _ in range(nsteps):
        # Horner form of x + hAx + h^2/2 A^2x + h^3/6 A^3x + h^4/24 A^4x
        y = x + c4 * matvec(x)
        y = x + c3 * matvec(y)
        y = x + c2 * matvec(y)
        x = x + h * matvec(y)
        if not np.linalg.norm(x) <= limit:
            raise InstabilityError(
                f"state norm exceeded {DIVERGENCE_FACTOR:g} x initial norm; "
                "system unstable over the horizon or step too large"
            )
    return x


def propagate(A, v, cfg):
    """``x(t_final)`` for ``x' = A x``, ``x(0) = v`` by fixed-step RK4."""
    op = aslinearoperator(A)
    if op.dim_in != op.dim_out:
        raise DimensionError("propagation needs a square operator")
    v = np.asarray(v, dtype=float)
    if v.shape != (op.dim_in,):
        raise DimensionError(f"v has shape {v.shape}, expected ({op.dim_in},)")
    return _rk4_power(op._apply, v, cfg)


def propagate_adjoint(A, v, cfg):
    """``y(t_final)`` for ``y' = A.T y``, ``y(0) = v`` by fixed-step RK4."""
    op = aslinearoperator(A)
    if op.dim_in != op.dim_out:
        raise DimensionError("propagation needs a square operator")
    v = np.asarray(v, dtype=float)
    if v.shape != (op.dim_in,):
        raise DimensionError(f"v has shape {v.shape}, expected ({op.dim_in},)")
    return _rk4_power(op._apply_adjoint, v, cfg)


# ---------------------------------------------------------------------------
# Weights


def build_restriction(indices, weights, n):
    """Basis of the complement of the nullspace of a selection weight.

    For ``C = diag(weights)`` on the selected states and zero elsewhere,
    returns ``(F, C_hat)``: ``F`` holds the canonical basis vectors of the
    selected states and ``C_hat`` the same columns scaled by ``1/weight``, so
    that ``x = C_hat z`` satisfies ``||x||_C = ||z||_2``.
    """
    idx = np.asarray(indices, dtype=np.int64).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if idx.shape != w.shape:
        raise DimensionError("indices and weights differ in length")
    if idx.size == 0:
        raise ValueError("selection is empty")
    if np.unique(idx).size != idx.size:
        raise ValueError("selection indices must be distinct")
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError(f"selection index out of range [0, {n})")
    if np.any(w == 0) or not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero((w == 0) | ~np.isfinite(w))[0])
        raise DefinitenessError(f"weight {bad} is zero or non-finite", pivot=bad)
    k = idx.size
    cols = np.arange(k)
    F = SparseMatrix.from_coo(idx, cols, np.ones(k), (n, k))
    C_hat = SparseMatrix.from_coo(idx, cols, 1.0 / w, (n, k))
    return F, C_hat


MODES = ("euclidean", "norm_pair", "io_map")


def _as2d(a, name):
    if a is None:
        return None
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be a finite 2-D matrix")
    return a


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """How the growth of the state is measured.

    mode
        ``"euclidean"``: plain 2-norms, the map is ``exp(A t)``.
        ``"norm_pair"``: ``||.||_C`` on the output and ``||.||_B`` on the input,
        the map is ``C exp(A t) B^{-1}``. With a selection-based (semidefinite)
        ``C`` the input is restricted to the complement of its nullspace and
        the map is ``C exp(A t) C_hat`` acting on reduced coordinates.
        ``"io_map"``: impulse response ``C exp(A t) B`` with ``B`` the input
        matrix.
    C
        Full output weight (k x n). Mutually exclusive with ``indices``.
    B
        Input-norm weight (norm_pair, square nonsingular) or input matrix
        (io_map, n x m). ``None`` means identity.
    indices, weights
        Selection-based output weight: ``C`` has ``weights`` on the diagonal at
        ``indices`` and zeros elsewhere.
    """

    mode: str = "euclidean"
    C: np.ndarray | None = None
    B: np.ndarray | None = None
    indices: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown weight mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "C", _as2d(self.C, "C"))
        object.__setattr__(self, "B", _as2d(self.B, "B"))
        if self.indices is not None:
            idx = np.asarray(self.indices, dtype=np.int64).ravel()
            w = np.ones(idx.size) if self.weights is None else np.asarray(self.weights, float).ravel()
            object.__setattr__(self, "indices", idx)
            object.__setattr__(self, "weights", w)
            if self.C is not None:
                raise ValueError("give either a full C or a selection, not both")
            # validates distinctness and nonzero weights
            build_restriction(idx, w, int(idx.max()) + 1 if idx.size else 1)
        elif self.weights is not None:
            raise ValueError("weights given without indices")
        if self.mode == "euclidean" and (self.C is not None or self.B is not None or self.indices is not None):
            raise ValueError("euclidean mode takes no weights")
        if self.mode == "norm_pair":
            if self.selection and self.B is not None:
                raise ValueError(
                    "a selection-based C defines its own input seminorm; B must be omitted"
                )
            if self.B is not None:
                if self.B.shape[0] != self.B.shape[1]:
                    raise DimensionError("norm_pair B must be square")
                if linalg.condition_number_2(self.B) == np.inf:
                    raise SingularMatrixError("norm_pair B is singular")

    @property
    def selection(self):
        return self.indices is not None

    def restriction(self, n):
        """``(F, C_hat)`` for a selection-based C in norm_pair mode, else None."""
        if self.mode == "norm_pair" and self.selection:
            return build_restriction(self.indices, self.weights, n)
        return None

    def output_matrix(self, n):
        """Explicit output weight as sparse k x n (selection) or dense; None = identity."""
        if self.selection:
            k = self.indices.size
            if self.indices.max() >= n:
                raise DimensionError(f"selection index out of range for n={n}")
            return SparseMatrix.from_coo(np.arange(k), self.indices, self.weights, (k, n))
        if self.C is not None and self.C.shape[1] != n:
            raise DimensionError(f"C has {self.C.shape[1]} columns, system has {n} states")
        return self.C

    def output_norm(self, x):
        """``||x||_C`` of a full state vector."""
        C = self.output_matrix(x.shape[0]) if self.mode != "euclidean" else None
        if C is None:
            return float(np.linalg.norm(x))
        if isinstance(C, SparseMatrix):
            return float(np.linalg.norm(C.to_scipy() @ x))
        return float(np.linalg.norm(C @ x))

    def describe(self):
        if self.mode == "euclidean":
            return "euclidean"
        parts = [self.mode]
        if self.selection:
            parts.append(f"selection k={self.indices.size}")
        elif self.C is not None:
            parts.append(f"C {self.C.shape[0]}x{self.C.shape[1]}")
        if self.B is not None:
            parts.append(f"B {self.B.shape[0]}x{self.B.shape[1]}")
        return ", ".join(parts)


def _side_ops(W, n):
    """Output and input factors of the weighted map as (apply, adjoint, dense) triples."""
    out = W.output_matrix(n) if W.mode != "euclidean" else None
    if out is None:
        out_t = None
    elif isinstance(out, SparseMatrix):
        csr = out.to_scipy().tocsr()
        out_t = (csr.shape[0], csr.__matmul__, csr.T.tocsr().__matmul__, lambda E: csr @ E)
    else:
        out_t = (out.shape[0], out.__matmul__, out.T.__matmul__, lambda E: out @ E)

    inn_t = None
    if W.mode == "norm_pair":
        R = W.restriction(n)
        if R is not None:
            ch = R[1].to_scipy().tocsr()
            inn_t = (ch.shape[1], ch.__matmul__, ch.T.tocsr().__matmul__, lambda E: (ch.T @ E.T).T)
        elif W.B is not None:
            B = W.B
            if B.shape[0] != n:
                raise DimensionError(f"B is {B.shape[0]}x{B.shape[1]}, system has {n} states")
            lu = scipy.linalg.lu_factor(B)
            inn_t = (
                n,
                lambda x: scipy.linalg.lu_solve(lu, x),
                lambda y: scipy.linalg.lu_solve(lu, y, trans=1),
                lambda E: scipy.linalg.solve(B.T, E.T).T,
            )
    elif W.mode == "io_map" and W.B is not None:
        B = W.B
        if B.shape[0] != n:
            raise DimensionError(f"input matrix B has {B.shape[0]} rows, system has {n} states")
        inn_t = (B.shape[1], B.__matmul__, B.T.__matmul__, lambda E: E @ B)
    return out_t, inn_t


def weighted_map(A, W, t, backend="dense", cfg=None, override_guard=False):
    """The weighted exponential map whose largest singular value is the growth.

    Parameters
    ----------
    A : ndarray, SparseMatrix, DaeBlocks or LinearOperator
        State matrix (or its action).
    W : WeightSpec
    t : float
        Time in seconds.
    backend : {"dense", "matfree"}
        ``dense`` forms ``exp(A t)`` explicitly; ``matfree`` returns an
        operator that integrates the forward and adjoint systems on demand.
    cfg : PropagatorConfig, optional
        Matrix-free step settings; its ``t_final`` is replaced by ``t``.
        Chosen automatically when omitted.
    """
    if backend == "dense":
        Ad = dense_system(A, override_guard)
        n = Ad.shape[0]
        out, inn = _side_ops(W, n)
        M = linalg.dense_expm(Ad, t, override_guard)
        if inn is not None:
            M = inn[3](M)
        if out is not None:
            M = out[3](M)
        M = np.asarray(M)
        return LinearOperator(M.shape, M.__matmul__, M.T.__matmul__, matrix=M, name=f"map t={t:g}")
    if backend != "matfree":
        raise ValueError(f"unknown backend {backend!r}")

    op = aslinearoperator(A)
    n = op.dim_in
    if cfg is None:
        cfg = PropagatorConfig.for_system(op, t)
    cfg_t = cfg.at(t)
    out, inn = _side_ops(W, n)
    fwd, bwd = op._apply, op._apply_adjoint
    dim_in = n if inn is None else inn[0]
    dim_out = n if out is None else out[0]

    def matvec(x):
        if inn is not None:
            x = inn[1](x)
        x = _rk4_power(fwd, x, cfg_t)
        return x if out is None else out[1](x)

    def rmatvec(y):
        if out is not None:
            y = out[2](y)
        y = _rk4_power(bwd, y, cfg_t)
        return y if inn is None else inn[2](y)

    return LinearOperator((dim_out, dim_in), matvec, rmatvec, name=f"matrix-free map t={t:g}")
