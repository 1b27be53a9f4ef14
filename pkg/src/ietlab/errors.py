"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(LabError):
    """Malformed run configuration (unknown keys, bad values, bad paths)."""


class ConstraintViolationError(LabError):
    """A structural constraint was violated at construction time."""


class SingularityProximityError(LabError):
    """A point fell inside the exclusion band around a roof singularity."""


class TruncationExceededError(LabError):
    """An orbit left the truncated index range of the base transformation."""


class ConsistencyError(LabError):
    """Internal invariant broken (bad table data, envelope violation, ...)."""


class InsufficientDataError(LabError):
    """Not enough data for the requested statistical estimate."""


#: Status codes used by the low-level kernels (exceptions cannot cross the
#: JIT boundary, so orbit kernels report these integers instead).
STATUS_OK = 0
STATUS_SINGULARITY = 1
STATUS_TRUNCATION = 2
STATUS_INCONSISTENT = 3

_STATUS_EXC = {
    STATUS_SINGULARITY: SingularityProximityError,
    STATUS_TRUNCATION: TruncationExceededError,
    STATUS_INCONSISTENT: ConsistencyError,
}


def raise_for_status(status: int, context: str = "") -> None:
    """Map a kernel status code to the corresponding exception."""
    if status == STATUS_OK:
        return
    exc = _STATUS_EXC.get(status, ConsistencyError)
    raise exc(context or f"kernel status {status}")
