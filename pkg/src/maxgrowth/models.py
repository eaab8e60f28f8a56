"""Analytic power-system models and the built-in fixtures.

The classical electromechanical model linearizes to

    A = [[0, I], [-H^{-1} K, -H^{-1} D]],   x = (delta, omega)

with H and D diagonal inertia and damping and K the synchronizing
(stiffness) matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import linalg
from .diagnostics import henrici
from .errors import DefinitenessError, UnsupportedStructureError
from .operators import WeightSpec

__all__ = [
    "ClassicalNetwork",
    "TwoMachineParams",
    "FixtureId",
    "Fixture",
    "classical_linear_A",
    "energy_norm_weight",
    "ground_reference",
    "electrical_power",
    "two_machine_K",
    "two_machine_jacobian",
    "cos_sqrt_oracle",
    "henrici_sweep",
    "fixture",
    "speed_weight",
]


@dataclass(frozen=True, eq=False)
class ClassicalNetwork:
    """Inertia ``H`` and damping ``D`` (diagonals, per machine) and stiffness ``K``."""

    H: np.ndarray
    D: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        H = np.diag(H).copy() if H.ndim == 2 else np.atleast_1d(H)
        D = np.asarray(self.D, dtype=float)
        D = np.diag(D).copy() if D.ndim == 2 else np.atleast_1d(D)
        if D.size == 1 and H.size > 1:
            D = np.full(H.size, D.item())
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        n = H.size
        if D.shape != (n,) or K.shape != (n, n):
            raise ValueError(f"H, D, K dimensions disagree ({H.shape}, {D.shape}, {K.shape})")
        if np.any(H <= 0):
            raise ValueError("inertias must be positive")
        if np.any(D < 0):
            raise ValueError("damping must be nonnegative")
        if not (np.all(np.isfinite(K)) and np.all(np.isfinite(H)) and np.all(np.isfinite(D))):
            raise ValueError("network parameters must be finite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "K", K)

    @property
    def n(self):
        return self.H.size

    @property
    def omega(self):
        """``H^{-1} K``."""
        return self.K / self.H[:, None]


def classical_linear_A(net):
    """Dense 2n x 2n state matrix over ``(delta, omega)``."""
    n = net.n
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -net.omega
    A[n:, n:] = -np.diag(net.D / net.H)
    return A


def energy_norm_weight(net):
    """Weights whose norm is twice the kinetic plus potential energy.

    ``C = blkdiag(L_K.T, sqrt(H))`` with ``L_K`` the Cholesky factor of K, so
    that ``||C x||^2 = delta.T K delta + omega.T H omega``; the same C is
    used for the input norm.
    """
    try:
        LK = linalg.cholesky(net.K)
    except DefinitenessError as exc:
        raise DefinitenessError(
            f"energy norm needs a positive definite K ({exc}); "
            "ground a reference machine first (ground_reference)",
            pivot=exc.pivot,
        ) from None
    n = net.n
    C = np.zeros((2 * n, 2 * n))
    C[:n, :n] = LK.T
    C[n:, n:] = np.diag(np.sqrt(net.H))
    return WeightSpec("norm_pair", C=C, B=C)


def ground_reference(net, ref_index=0):
    """Remove the angle reference by switching to angles relative to one machine.

    New coordinates are ``delta_i - delta_ref`` and ``omega_i - omega_ref`` for
    the other machines. This is exact when the electrical torques depend only
    on angle differences (``K @ 1 == 0``) and damping is proportional to
    inertia (uniform ``D/H``). The returned stiffness is
    ``H_o (Omega[o, o] - 1 Omega[ref, o])`` with ``Omega = H^{-1} K``; it is
    not symmetric in general once three or more machines remain.
    """
    n = net.n
    if n < 2:
        raise ValueError("grounding needs at least two machines")
    if not 0 <= ref_index < n:
        raise IndexError(f"reference index {ref_index} out of range [0, {n})")
    scale = max(np.abs(net.K).max(), 1.0)
    if np.abs(net.K.sum(axis=1)).max() > 1e-12 * scale:
        raise UnsupportedStructureError(
            "K rows do not sum to zero: the network already has an absolute angle reference"
        )
    ratio = net.D / net.H
    if np.ptp(ratio) > 1e-12 * max(ratio.max(), 1.0):
        raise UnsupportedStructureError(
            "relative-angle reduction needs damping proportional to inertia"
        )
    o = np.array([i for i in range(n) if i != ref_index])
    Om = net.omega
    Om_red = Om[np.ix_(o, o)] - Om[ref_index, o][None, :]
    H = net.H[o]
    return ClassicalNetwork(H=H, D=ratio[o] * H, K=H[:, None] * Om_red)


@dataclass(frozen=True)
class TwoMachineParams:
    """Two machines against an infinite bus (bus 0), products ``v_i v_j Y_ij``."""

    B10: float = 1.0
    G10: float = 0.1
    B20: float = 1.0
    G20: float = 0.1
    B12: float = 0.8
    G12: float = 0.2
    P1: float = 0.0
    P2: float = 0.0
    H1: float = 1.0
    H2: float = 1.0
    D1: float = 0.0
    D2: float = 0.0

    def __post_init__(self):
        vals = np.array([getattr(self, f) for f in self.__dataclass_fields__])
        if not np.all(np.isfinite(vals)):
            raise ValueError("parameters must be finite")
        if self.H1 <= 0 or self.H2 <= 0:
            raise ValueError("inertias must be positive")

    def lossless(self):
        return replace(self, G10=0.0, G20=0.0, G12=0.0)


def electrical_power(p, delta1, delta2):
    """Electrical output of each machine (right-hand side without P and D)."""
    d12 = delta1 - delta2
    pe1 = p.B10 * np.sin(delta1) + p.G10 * np.cos(delta1) + p.B12 * np.sin(d12) + p.G12 * np.cos(d12)
    pe2 = p.B20 * np.sin(delta2) + p.G20 * np.cos(delta2) + p.B12 * np.sin(-d12) + p.G12 * np.cos(-d12)
    return np.array([pe1, pe2])


def two_machine_K(p, delta1, delta2):
    """Synchronizing matrix ``d(electrical power)/d(delta)`` at the given angles."""
    d12 = delta1 - delta2
    c, s = np.cos(d12), np.sin(d12)
    return np.array(
        [
            [
                p.B10 * np.cos(delta1) - p.G10 * np.sin(delta1) + p.B12 * c - p.G12 * s,
                -p.B12 * c + p.G12 * s,
            ],
            [
                -p.B12 * c - p.G12 * s,
                p.B20 * np.cos(delta2) - p.G20 * np.sin(delta2) + p.B12 * c + p.G12 * s,
            ],
        ]
    )


def _network(p, delta1, delta2):
    return ClassicalNetwork(H=[p.H1, p.H2], D=[p.D1, p.D2], K=two_machine_K(p, delta1, delta2))


def two_machine_jacobian(p, delta1, delta2):
    """4 x 4 Jacobian of the two-machine infinite-bus model."""
    return classical_linear_A(_network(p, delta1, delta2))


def cos_sqrt_oracle(net, t):
    """``cos(sqrt(Omega) t)`` for ``Omega = H^{-1} K`` with symmetric K.

    Uses the symmetric similarity ``H^{1/2} Omega H^{-1/2}``; negative
    eigenvalues give ``cosh``, as the even power series requires.
    """
    K = net.K
    if not np.allclose(K, K.T, rtol=1e-12, atol=1e-14 * max(np.abs(K).max(), 1.0)):
        raise UnsupportedStructureError("cos(sqrt(Omega) t) oracle needs a symmetric K")
    hs = np.sqrt(net.H)
    S = K / np.outer(hs, hs)
    mu, Q = np.linalg.eigh((S + S.T) / 2)
    r = np.sqrt(np.abs(mu)) * t
    f = np.where(mu >= 0, np.cos(r), np.cosh(r))
    return (Q * f) @ Q.T / hs[:, None] * hs[None, :]


def henrici_sweep(p, delta_diffs):
    """Henrici index of the inertia-normalized stiffness over angle differences.

    For each ``dd`` the angles are ``delta1 = dd``, ``delta2 = 0`` and the
    index is taken of ``H^{-1/2} K H^{-1/2}``. Returns an array of rows
    ``(dd, nu)``.
    """
    dd = np.atleast_1d(np.asarray(delta_diffs, dtype=float))
    hs = np.sqrt([p.H1, p.H2])
    rows = []
    for d in dd:
        S = two_machine_K(p, d, 0.0) / np.outer(hs, hs)
        rows.append((d, henrici(S).nu))
    return np.array(rows).reshape(-1, 2)


# ---------------------------------------------------------------------------
# Fixtures


class FixtureId(str, enum.Enum):
    vreg_sys1 = "vreg_sys1"
    vreg_sys2 = "vreg_sys2"
    oscillator_2bus = "oscillator_2bus"
    classical_custom = "classical_custom"
    two_machine_lossy = "two_machine_lossy"


class Fixture(NamedTuple):
    A: np.ndarray
    weights: WeightSpec
    metadata: dict


def _vreg(A, gain, description):
    return Fixture(
        np.array(A),
        WeightSpec(),
        {
            "description": description,
            "exciter_gain": gain,
            "labels": ["e_prime", "e_fd"],
            "weights": {"euclidean": WeightSpec()},
        },
    )


def fixture(fid):
    """Built-in system by id: ``(A, default WeightSpec, metadata)``."""
    fid = FixtureId(fid)
    if fid is FixtureId.vreg_sys1:
        return _vreg([[-0.082, 0.1], [-1.015, -2.0]], 0.5, "voltage regulation, exciter gain 0.5")
    if fid is FixtureId.vreg_sys2:
        return _vreg([[-0.069, 0.1], [-8.123, -2.0]], 4.0, "voltage regulation, exciter gain 4.0")
    if fid is FixtureId.oscillator_2bus:
        free = ClassicalNetwork(H=[1.0, 1.0], D=[0.0, 0.0], K=[[2.0, -2.0], [-2.0, 2.0]])
        net = ground_reference(free, 0)
        energy = energy_norm_weight(net)
        return Fixture(
            classical_linear_A(net),
            WeightSpec(),
            {
                "description": "two-machine two-bus undamped system, machine 1 as reference",
                "network": net,
                "labels": ["delta_21", "omega_21"],
                "weights": {"euclidean": WeightSpec(), "energy": energy},
            },
        )
    if fid is FixtureId.classical_custom:
        # three machines in a chain, machine 1 also tied to an infinite bus
        K = np.array([[3.0, -1.5, 0.0], [-1.5, 2.5, -1.0], [0.0, -1.0, 1.0]])
        net = ClassicalNetwork(H=[4.0, 2.0, 1.0], D=[0.4, 0.2, 0.1], K=K)
        return Fixture(
            classical_linear_A(net),
            WeightSpec(),
            {
                "description": "three-machine chain with infinite-bus tie, proportional damping",
                "network": net,
                "labels": ["delta_1", "delta_2", "delta_3", "omega_1", "omega_2", "omega_3"],
                "speed_indices": [3, 4, 5],
                "inertias": [4.0, 2.0, 1.0],
                "weights": {
                    "euclidean": WeightSpec(),
                    "energy": energy_norm_weight(net),
                    "speeds": speed_weight([4.0, 2.0, 1.0], [3, 4, 5], 6),
                },
            },
        )
    # two_machine_lossy
    p = TwoMachineParams()
    d1 = np.pi / 6
    net = _network(p, d1, 0.0)
    return Fixture(
        classical_linear_A(net),
        WeightSpec(),
        {
            "description": "two machines on an infinite bus, lossy network, 30 degree angle difference",
            "network": net,
            "params": p,
            "angles": (d1, 0.0),
            "labels": ["delta_1", "delta_2", "omega_1", "omega_2"],
            "speed_indices": [2, 3],
            "inertias": [p.H1, p.H2],
            "weights": {
                "euclidean": WeightSpec(),
                "speeds": speed_weight([p.H1, p.H2], [2, 3], 4),
            },
        },
    )


def speed_weight(inertias, speed_indices, n):
    """Seminorm weighting rotor speeds by the square root of machine inertia."""
    H = np.asarray(inertias, dtype=float).ravel()
    idx = np.asarray(speed_indices, dtype=np.int64).ravel()
    if H.shape != idx.shape:
        raise ValueError("one inertia per speed index required")
    if np.any(H <= 0) or not np.all(np.isfinite(H)):
        raise ValueError("inertias must be positive")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError(f"speed index out of range [0, {n})")
    return WeightSpec("norm_pair", indices=idx, weights=np.sqrt(H))
