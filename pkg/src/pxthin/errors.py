"""Exception hierarchy shared by all pxthin modules.

Every contract failure raises one of these, so callers can distinguish
"you gave me bad input" from "the computation could not be completed".
"""


class PxthinError(Exception):
    """Base class for all package errors."""


class PreconditionError(PxthinError):
    """An operation was called with arguments violating its contract."""


class DomainError(PreconditionError):
    """A point or region falls outside the geometric domain."""


class ResolutionError(PxthinError):
    """The mesh is too coarse for the requested local operation."""


class ResourceError(PxthinError):
    """A requested computation exceeds the configured resource budget."""


class NumericError(PxthinError):
    """An iterative numerical procedure failed to produce a valid result."""


class ConvergenceError(NumericError):
    """The nonlinear solver stagnated before reaching tolerance.

    Carries the best iterate found so callers can inspect it.
    """

    def __init__(self, message, best=None, info=None):
        super().__init__(message)
        self.best = best
        self.info = info


class ConfigError(PxthinError):
    """Experiment configuration could not be parsed or validated."""


class FormatError(PxthinError):
    """A persisted artifact file is malformed or inconsistent."""
