"""Exception hierarchy shared by all osclab modules."""


class OscLabError(Exception):
    """Base class for every error raised by osclab."""


class DomainError(OscLabError, ValueError):
    """A cube or cell lies outside the grid."""


class ParameterError(OscLabError, ValueError):
    """An argument is outside its admissible range."""


class DegenerateMeasureError(OscLabError, ZeroDivisionError):
    """An average was requested over a cube of zero mass."""


class NonDoublingError(OscLabError, ValueError):
    """A zero-mass cube sits inside an ancestor of positive mass."""


class ResolutionError(OscLabError, ValueError):
    """The grid is too coarse for the requested construction."""

    def __init__(self, message, best_alpha=None):
        super().__init__(message)
        self.best_alpha = best_alpha


class OverflowRangeError(OscLabError, OverflowError):
    """A bracketing search ran past its cap."""


class MalformedYoungError(OscLabError, ValueError):
    """A candidate Young function violates a defining property."""


class FunctionalError(OscLabError, ValueError):
    """A cube functional returned a non-positive value."""


class StoppingPreconditionError(OscLabError, ValueError):
    """The stopping-time level is below the average over the root cube."""


class InfeasibleError(OscLabError, ValueError):
    """An optimisation problem has an empty feasible set within its cap."""


class GrowthTooFastError(OscLabError, ValueError):
    """A Laplace transform diverges everywhere in the bracket."""


class InputParseError(OscLabError, ValueError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line
