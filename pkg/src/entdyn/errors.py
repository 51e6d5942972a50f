"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration and parameter
problems exit with 2, numerical failures with 3, and I/O problems with 4.
"""


class EntdynError(Exception):
    """Base class for package errors."""


class ParameterDomainError(EntdynError, ValueError):
    """A parameter is outside its admissible domain."""


class ConfigError(EntdynError, ValueError):
    """A config file or CLI combination cannot be interpreted."""


class SingularParameterError(EntdynError, ValueError):
    """A variance entry sits exactly on the logarithmic singularity."""


class DegenerateProfileError(EntdynError, ValueError):
    """A variance profile has no usable terms."""


class DegenerateStateError(EntdynError, ValueError):
    """A coefficient matrix cannot be normalized into a state."""


class NumericalError(EntdynError, RuntimeError):
    """A numerical guarantee was violated.

    Carries the offending sample index when one is known.
    """

    def __init__(self, message: str, sample_id: int | None = None):
        if sample_id is not None:
            message = f"{message} (sample {sample_id})"
        super().__init__(message)
        self.sample_id = sample_id


class StiffRegionError(NumericalError):
    """Adaptive step control hit its floor without an acceptable step."""


class FitFailureError(EntdynError, RuntimeError):
    """No optimizer start converged to an acceptable fit."""


class BinningError(EntdynError, ValueError):
    """Conditional binning produced unusable bins."""
