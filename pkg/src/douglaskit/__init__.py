"""Douglas-type factorization over finite-dimensional Hilbert C*-modules.

Majorization, range inclusion, minimal majorization constants and the
reduced solution of ``T' = TX`` for adjointable operators between modules
over direct sums of matrix algebras.
"""

from .cstar_core import AlgebraElement, AlgebraShape, Spectrum, State
from .douglas import (
    DouglasSolution,
    MajorizationReport,
    build_V,
    check_majorization,
    check_norm_majorization,
    douglas_solve,
    lambda_bisection,
    minimal_lambda,
    range_inclusion,
    theorem_report,
)
from .errors import (
    CrossCheckError,
    DouglasKitError,
    HypothesisViolatedError,
    NoSolutionError,
    NotMajorizedError,
    ShapeMismatchError,
)
from .hilbert_module import AdjointableOperator, ModuleElement, ModuleShape, Submodule
from .tolerance import DEFAULT_TOL, ToleranceConfig

__version__ = "0.1.0"
