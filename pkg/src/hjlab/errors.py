"""Exception hierarchy shared across hjlab."""


class HJLabError(Exception):
    """Base class for all hjlab errors."""


class ConfigurationError(HJLabError):
    """Bad model family, malformed config, or inconsistent resolution settings."""


class RadiusTooSmallError(HJLabError):
    """Conjugation argmax landed on the search boundary; enlarge the radius."""


class DivergenceError(HJLabError):
    """The action became non-finite during trajectory optimization."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnsupportedDimensionError(HJLabError):
    """Operation restricted to a specific spatial dimension (usually 1D)."""


class SearchFailureError(HJLabError):
    """Certified search exhausted its budget without meeting tolerance.

    Carries the best candidate found so the caller can inspect how close
    the search got.
    """

    def __init__(self, message, best_candidate=None, best_residual=None):
        super().__init__(message)
        self.best_candidate = best_candidate
        self.best_residual = best_residual
