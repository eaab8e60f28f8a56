"""Spectral and non-normality diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from .errors import ConvergenceError, NotDiagonalizableError

__all__ = [
    "HenriciReport",
    "SpectrumReport",
    "henrici",
    "eigenbasis_condition",
    "is_normal",
    "spectral_abscissa",
    "slowest_modes",
    "spectrum",
]

#: Eigenvector matrices with a larger condition number count as defective.
DEFECTIVE_COND = 1e14


@dataclass(frozen=True)
class HenriciReport:
    frobenius_sq: float
    eig_sq_sum: float
    nu: float


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenvalues sorted by ``|Re|`` ascending, abscissa and eigenbasis conditioning.

    ``kappa_V`` is ``None`` when the matrix is numerically defective.
    """

    eigenvalues: np.ndarray
    abscissa: float
    kappa_V: float | None


def henrici(A):
    """Henrici departure from normality ``sqrt(||A||_F^2 - sum |lambda|^2)``.

    Evaluated as the Frobenius norm of the strictly upper part of the complex
    Schur form, which equals the defining expression but does not lose all
    accuracy to cancellation when ``A`` is close to normal.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    linalg.check_dense_guard(A.shape[0], what="Schur form")
    try:
        T, _ = scipy.linalg.schur(A.astype(complex), output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"Schur decomposition failed: {exc}") from None
    d = np.abs(np.diag(T)) ** 2
    nu = float(np.linalg.norm(np.triu(T, 1)))
    return HenriciReport(float(np.sum(np.abs(A) ** 2)), float(d.sum()), nu)


def eigenbasis_condition(A):
    """Two-norm condition number of the unit-column eigenvector matrix."""
    _, V = linalg.eig(A)
    kappa = linalg.condition_number_2(V)
    if not kappa < DEFECTIVE_COND:
        raise NotDiagonalizableError(
            f"eigenvector matrix condition {kappa:.3e} exceeds {DEFECTIVE_COND:g}; "
            "matrix is numerically defective"
        )
    return kappa


def is_normal(A, tol=1e-10):
    """``||A.T A - A A.T||_F <= tol * ||A||_F^2``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    scale = np.sum(A * A)
    return bool(np.linalg.norm(A.T @ A - A @ A.T) <= tol * scale)


def spectral_abscissa(A):
    w, _ = linalg.eig(A)
    return float(w.real.max())


def _sort_modes(w):
    # conjugate partners share |Re| and |Im|, so they end up adjacent
    order = np.lexsort((-w.imag, np.abs(w.imag), np.abs(w.real)))
    return w[order]


def slowest_modes(A, k):
    """The ``k`` eigenvalues with the smallest ``|Re|``.

    A complex-conjugate pair is never split: when the ``k``-th eigenvalue has
    its partner just beyond the cut, the partner is included too.
    """
    w, _ = linalg.eig(A)
    if not 0 <= k <= w.size:
        raise ValueError(f"k must lie in [0, {w.size}]")
    w = _sort_modes(w)
    if 0 < k < w.size and w[k - 1].imag != 0 and np.isclose(w[k], np.conj(w[k - 1])):
        k += 1
    return w[:k]


def spectrum(A, k=None):
    """Full :class:`SpectrumReport` (``k`` slowest modes when given)."""
    w, V = linalg.eig(A)
    kappa = linalg.condition_number_2(V)
    modes = slowest_modes(A, k) if k is not None else _sort_modes(w)
    return SpectrumReport(
        eigenvalues=modes,
        abscissa=float(w.real.max()),
        kappa_V=float(kappa) if kappa < DEFECTIVE_COND else None,
    )
