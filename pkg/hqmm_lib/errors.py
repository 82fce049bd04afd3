class HqmmError(Exception):
    """Base class for every error raised by the library."""


# --- INPUT ERRORS ---
class ModelStructureError(HqmmError, ValueError):
    pass  # inconsistent matrix, label or vector dimensions


class ProbabilityError(HqmmError, ValueError):
    pass  # negative entries or a sum that is not one


class HqmmStructureError(HqmmError, ValueError):
    pass  # Kraus set not trace preserving, or rho not a density matrix


class CatalogParameterError(HqmmError, ValueError):
    pass  # unknown catalog id or parameter out of range


class SweepSpecError(HqmmError, ValueError):
    pass


class ModelFileError(HqmmError):
    pass  # unreadable or undecodable model file


class BudgetExceededError(HqmmError):
    pass  # word enumeration over word_budget


# --- COMPUTATION ERRORS ---
# No unique stationary distribution; the caller must pass `initial` explicitly
class StationaryDistributionError(HqmmError):
    pass


# A (state, symbol) pair with more than one successor
class NonUnifilarError(HqmmError):
    pass


class EigenSolverError(HqmmError):
    pass  # Jacobi sweep cap reached


class SpectrumError(HqmmError):
    pass  # eigenvalues do not form a density-matrix spectrum


# Numbers contradict the structural classification: a bug, not bad input
class ConsistencyError(HqmmError):
    pass
