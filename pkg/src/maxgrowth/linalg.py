"""Dense and sparse kernels.

Sparse storage is compressed sparse column. Factorizations and the dense
matrix exponential are delegated to SciPy/LAPACK; this module adds the
input validation, size guard and error reporting the rest of the package
relies on.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.linalg.lapack import dpotrf

from .errors import (
    ConvergenceError,
    DefinitenessError,
    DenseGuardError,
    DimensionError,
    RangeError,
    SingularMatrixError,
)

__all__ = [
    "DENSE_GUARD",
    "PIVOT_TOL",
    "SparseMatrix",
    "LuFactors",
    "as_sparse",
    "check_dense_guard",
    "spmv",
    "spmv_transpose",
    "sparse_lu",
    "lu_solve",
    "lu_solve_transpose",
    "dense_expm",
    "dense_svd",
    "eig",
    "cholesky",
    "condition_number_2",
]

#: Largest dimension for which dense n-by-n matrices are formed by default.
DENSE_GUARD = 4096

#: Relative pivot magnitude below which a sparse LU is declared singular.
PIVOT_TOL = 1e-13


def check_dense_guard(n, override=False, what="matrix"):
    if n > DENSE_GUARD and not override:
        raise DenseGuardError(
            f"refusing to form a dense {n}x{n} {what} "
            f"(guard is {DENSE_GUARD}; needs {n * n * 8 / 1e6:.0f} MB); "
            "use the matrix-free backend or set the override flag"
        )


def _readonly(a):
    a.setflags(write=False)
    return a


class SparseMatrix:
    """Immutable real sparse matrix in compressed sparse column form.

    Explicit zeros are dropped on construction. Row indices are sorted and
    unique within each column.

    Parameters
    ----------
    nrows, ncols : int
    col_ptr : array of int, length ``ncols + 1``
    row_idx : array of int
    values : array of float
    """

    __slots__ = ("nrows", "ncols", "col_ptr", "row_idx", "values", "_csc")

    def __init__(self, nrows, ncols, col_ptr, row_idx, values):
        nrows, ncols = int(nrows), int(ncols)
        if nrows < 0 or ncols < 0:
            raise DimensionError("negative dimension")
        col_ptr = np.asarray(col_ptr, dtype=np.int64)
        row_idx = np.asarray(row_idx, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if col_ptr.shape != (ncols + 1,):
            raise DimensionError(f"col_ptr must have length ncols+1 = {ncols + 1}")
        if col_ptr[0] != 0 or np.any(np.diff(col_ptr) < 0):
            raise ValueError("col_ptr must start at 0 and be nondecreasing")
        nnz = int(col_ptr[-1])
        if row_idx.shape != (nnz,) or values.shape != (nnz,):
            raise DimensionError("row_idx and values must have length col_ptr[-1]")
        if not np.all(np.isfinite(values)):
            raise ValueError("sparse matrix entries must be finite")
        if nnz and (row_idx.min() < 0 or row_idx.max() >= nrows):
            raise ValueError("row index out of range")
        if nnz > 1:
            within = np.ones(nnz - 1, dtype=bool)
            starts = col_ptr[1:-1]
            starts = starts[(starts > 0) & (starts < nnz)]
            within[starts - 1] = False
            bad = np.flatnonzero(within & (np.diff(row_idx) <= 0))
            if bad.size:
                j = int(np.searchsorted(col_ptr, bad[0], side="right") - 1)
                raise ValueError(f"row indices not strictly increasing in column {j}")

        if np.any(values == 0.0):
            keep = values != 0.0
            col_of = np.repeat(np.arange(ncols), np.diff(col_ptr))
            col_ptr = np.concatenate([[0], np.cumsum(np.bincount(col_of[keep], minlength=ncols))])
            row_idx, values = row_idx[keep], values[keep]

        self.nrows = nrows
        self.ncols = ncols
        self.col_ptr = _readonly(col_ptr)
        self.row_idx = _readonly(row_idx)
        self.values = _readonly(values)
        self._csc = None

    # construction helpers -------------------------------------------------

    @classmethod
    def from_coo(cls, rows, cols, values, shape):
        """Build from triplets; duplicate entries are summed."""
        m = scipy.sparse.coo_array(
            (np.asarray(values, float), (np.asarray(rows), np.asarray(cols))), shape=shape
        ).tocsc()
        m.sum_duplicates()
        m.sort_indices()
        return cls(shape[0], shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls.from_scipy(scipy.sparse.csc_array(a))

    @classmethod
    def from_scipy(cls, m):
        m = scipy.sparse.csc_array(m, dtype=float)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, np.zeros(ncols + 1, np.int64), [], [])

    # views ----------------------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return int(self.col_ptr[-1])

    @property
    def nbytes(self):
        return self.col_ptr.nbytes + self.row_idx.nbytes + self.values.nbytes

    def to_scipy(self):
        """Cached ``scipy.sparse.csc_array`` sharing this matrix's buffers."""
        if self._csc is None:
            self._csc = scipy.sparse.csc_array(
                (self.values, self.row_idx, self.col_ptr), shape=self.shape
            )
        return self._csc

    def to_dense(self):
        return self.to_scipy().toarray()

    def transpose(self):
        return SparseMatrix.from_scipy(self.to_scipy().T)

    T = property(transpose)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.col_ptr, other.col_ptr)
            and np.array_equal(self.row_idx, other.row_idx)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def as_sparse(a):
    """Coerce a dense array, SciPy sparse matrix or ``SparseMatrix``."""
    if isinstance(a, SparseMatrix):
        return a
    if scipy.sparse.issparse(a):
        return SparseMatrix.from_scipy(a)
    return SparseMatrix.from_dense(a)


def _vec(x, n, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != n:
        raise DimensionError(f"{name} has shape {x.shape}, expected ({n},)")
    return x


def spmv(A, x):
    """Return ``A @ x``."""
    A = as_sparse(A)
    return A.to_scipy() @ _vec(x, A.ncols)


def spmv_transpose(A, x):
    """Return ``A.T @ x`` without forming the transpose."""
    A = as_sparse(A)
    return A.to_scipy().T @ _vec(x, A.nrows)


class LuFactors:
    """Reusable sparse LU factors of a square matrix (SuperLU).

    Column ordering is COLAMD and row pivoting is partial (threshold 1).
    """

    __slots__ = ("n", "_lu")

    def __init__(self, lu, n):
        self._lu = lu
        self.n = n

    @property
    def perm_r(self):
        return self._lu.perm_r

    @property
    def perm_c(self):
        return self._lu.perm_c

    @property
    def nnz(self):
        return self._lu.nnz

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=float))

    def solve_transpose(self, b):
        return self._lu.solve(np.asarray(b, dtype=float), trans="T")


def _first_zero_pivot_dense(a):
    # Only used for the error message, hence the dense fallback.
    _, _, u = scipy.linalg.lu(a)
    d = np.abs(np.diag(u))
    scale = max(np.abs(a).max(), 1.0)
    bad = np.flatnonzero(d <= PIVOT_TOL * scale)
    return int(bad[0]) if bad.size else None


def sparse_lu(A):
    """Factor a square sparse matrix for repeated solves.

    Raises
    ------
    SingularMatrixError
        If a pivot is exactly zero or smaller than ``PIVOT_TOL`` times the
        largest entry of ``A``.
    """
    A = as_sparse(A)
    n = A.nrows
    if A.ncols != n:
        raise DimensionError(f"LU needs a square matrix, got {A.shape}")
    if n == 0:
        raise DimensionError("LU of an empty matrix")
    csc = A.to_scipy()
    scale = np.abs(A.values).max() if A.nnz else 0.0
    if scale == 0.0:
        raise SingularMatrixError("matrix is identically zero", pivot=0)
    try:
        lu = scipy.sparse.linalg.splu(csc, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        pivot = _first_zero_pivot_dense(csc.toarray()) if n <= DENSE_GUARD else None
        raise SingularMatrixError(f"singular matrix: {exc}", pivot=pivot) from None
    d = np.abs(lu.U.diagonal())
    bad = np.flatnonzero(d <= PIVOT_TOL * scale)
    if bad.size:
        k = int(bad[0])
        raise SingularMatrixError(
            f"pivot {k} has magnitude {d[k]:.3e} (tolerance {PIVOT_TOL * scale:.3e})",
            pivot=int(lu.perm_c[k]),
        )
    return LuFactors(lu, n)


def lu_solve(F, b):
    """Solve ``A x = b`` with factors from :func:`sparse_lu`."""
    return F.solve(_vec(b, F.n, "b"))


def lu_solve_transpose(F, b):
    """Solve ``A.T x = b`` with factors from :func:`sparse_lu`."""
    return F.solve_transpose(_vec(b, F.n, "b"))


def _square(a, what="matrix"):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")
    return a


def dense_expm(A, t=1.0, override_guard=False):
    """Matrix exponential ``exp(A t)``.

    Scaling and squaring with a degree-13 Padé approximant (SciPy's
    implementation of Al-Mohy and Higham's algorithm).
    """
    A = _square(A)
    check_dense_guard(A.shape[0], override_guard, "matrix exponential")
    if t == 0:
        return np.eye(A.shape[0])
    At = A * float(t)
    # exp(||At||) beyond ~700 is outside double range even before cancellation
    norm1 = np.abs(At).sum(axis=0).max()
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(At)
    if not np.all(np.isfinite(E)):
        raise RangeError(f"exp(A t) overflows (||A t||_1 = {norm1:.3e})")
    return E


def dense_svd(M):
    """Full SVD ``M = U @ diag(s) @ Vt`` with ``s`` nonincreasing."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return np.linalg.svd(M)


def eig(A):
    """Eigenvalues and unit-norm eigenvectors (columns) of a real matrix."""
    A = _square(A)
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from None
    V = V / np.linalg.norm(V, axis=0)
    return w.astype(complex), V.astype(complex)


def cholesky(S):
    """Lower-triangular ``L`` with ``L @ L.T == S``.

    Raises
    ------
    DefinitenessError
        If ``S`` is not symmetric positive definite; ``pivot`` is the index of
        the first failing leading minor.
    """
    S = _square(S)
    if not np.allclose(S, S.T, rtol=1e-12, atol=1e-14 * max(np.abs(S).max(), 1.0)):
        raise DefinitenessError("matrix is not symmetric")
    L, info = dpotrf(S, lower=1, clean=1)
    if info > 0:
        raise DefinitenessError(
            f"leading minor {info} is not positive (matrix not positive definite)",
            pivot=info - 1,
        )
    if info < 0:
        raise ValueError(f"dpotrf argument {-info} invalid")
    # a pivot at rounding level means a singular (semidefinite) matrix
    d = np.diag(L) ** 2
    small = np.flatnonzero(d <= S.shape[0] * np.finfo(float).eps * np.abs(np.diag(S)).max())
    if small.size:
        raise DefinitenessError(
            f"leading minor {small[0] + 1} is zero to rounding (matrix only semidefinite)",
            pivot=int(small[0]),
        )
    return L


def condition_number_2(V):
    """Two-norm condition number; ``inf`` for a singular matrix."""
    V = np.atleast_2d(np.asarray(V))
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise DimensionError(f"V must be square, got shape {V.shape}")
    s = np.linalg.svd(V, compute_uv=False)
    if s[-1] == 0.0 or s[0] / s[-1] > 1 / np.finfo(float).eps:
        return np.inf
    return float(s[0] / s[-1])
