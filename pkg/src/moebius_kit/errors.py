"""Exception types shared across the package.

The CLI maps these onto exit codes: bad input -> 1, mathematical
singularities (infinite energy, non-embedded curves) -> 2, failed
iterations -> 3.
"""


class MoebiusKitError(Exception):
    """Base class for all package-specific errors."""


class InputError(MoebiusKitError, ValueError):
    """Invalid input data or parameters."""


class SingularityError(MoebiusKitError):
    """The requested quantity is infinite or undefined for this input."""


class DoublePointError(SingularityError):
    """Two distinct points of the object (nearly) coincide.

    ``pair`` holds the offending index pair when known.
    """

    def __init__(self, message: str, pair: tuple | None = None):
        super().__init__(message)
        self.pair = pair


class NotEmbeddedError(SingularityError):
    """Curve fails the embeddedness check at the sampled resolution."""


class ConvergenceError(MoebiusKitError):
    """An iterative routine exhausted its budget without converging."""
