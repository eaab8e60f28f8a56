"""Maximum transient growth of linearized (power-system) dynamics.

The largest singular value of the weighted exponential map ``C exp(A t) B``
over a time grid gives the worst-case amplification of a small perturbation
and the initial direction that produces it. Two backends are provided: an
explicit dense one and a matrix-free one that only needs sparse products
and a reusable LU factorization of the algebraic Jacobian block.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DefinitenessError,
    DenseGuardError,
    DimensionError,
    InstabilityError,
    MaxGrowthError,
    NotDiagonalizableError,
    ParseError,
    RangeError,
    SingularMatrixError,
    UnsupportedStructureError,
)
from .linalg import DENSE_GUARD, SparseMatrix  # noqa: E402
from .operators import (  # noqa: E402
    DaeBlocks,
    LinearOperator,
    PropagatorConfig,
    WeightSpec,
    aslinearoperator,
    build_restriction,
    explicit_reduced_jacobian,
    propagate,
    propagate_adjoint,
    reduced_jacobian_operator,
    weighted_map,
)
from .growth import (  # noqa: E402
    GrowthCurve,
    MaxGrowthResult,
    SvdIterConfig,
    growth_of_state,
    max_growth,
    sigma_max_dense,
    sigma_max_matfree,
)
from .diagnostics import (  # noqa: E402
    eigenbasis_condition,
    henrici,
    is_normal,
    slowest_modes,
    spectral_abscissa,
    spectrum,
)
from .models import (  # noqa: E402
    ClassicalNetwork,
    FixtureId,
    TwoMachineParams,
    fixture,
    speed_weight,
)
