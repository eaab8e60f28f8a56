import numpy as np
import pytest
import scipy.sparse as sp

from maxgrowth import SparseMatrix

J1 = np.array([[-0.082, 0.1], [-1.015, -2.0]])
J2 = np.array([[-0.069, 0.1], [-8.123, -2.0]])
OSC = np.array([[0.0, 1.0], [-4.0, 0.0]])
# three-digit reference eigenvector matrices of the voltage-regulation example
V1_REF = np.array([[0.878, -0.053], [-0.478, 0.998]])
V2_REF = np.array([[0.159, -0.076], [-0.987, 0.997]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_sparse(rng, nrows, ncols=None, density=0.3):
    ncols = nrows if ncols is None else ncols
    R = sp.random(nrows, ncols, density=density, random_state=rng, data_rvs=rng.standard_normal)
    return SparseMatrix.from_scipy(R.tocsc())


def random_stable_sparse(rng, n, density=None):
    """Sparse matrix shifted left of the imaginary axis by Gershgorin."""
    density = min(1.0, 4.0 / n) if density is None else density
    R = sp.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal)
    shift = abs(R).sum(axis=1).max() * 0.5 + 0.5
    return SparseMatrix.from_scipy((R - shift * sp.eye(n)).tocsc())


def random_diagonalizable_stable(rng, n):
    """``V diag(lambda) V^{-1}`` with real, distinct, negative eigenvalues."""
    V = rng.standard_normal((n, n))
    lam = -rng.uniform(0.1, 3.0, n)
    return V @ np.diag(lam) @ np.linalg.inv(V)
