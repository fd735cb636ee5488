"""Exception types shared across the library."""


class GenusCertError(Exception):
    """Base class for all library errors."""


class ParseError(GenusCertError):
    """Malformed embedding file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParityError(GenusCertError):
    """An orientable scheme produced an odd Euler characteristic."""


class NoCycleFound(GenusCertError):
    """Exhaustive candidate search found no usable non-separating cycle."""


class SeparatingCycle(GenusCertError):
    """Cycle duplication would disconnect the graph."""


class OneSidedCycle(GenusCertError):
    """Cycle duplication requires a two-sided cycle (signature product +1)."""


class TwoSidedCycle(GenusCertError):
    """Cycle doubling requires a one-sided cycle (signature product -1)."""


class PathTouchesBoundary(GenusCertError):
    """An interior path vertex lies on one of the faces being merged."""


class SameFace(GenusCertError):
    """Path duplication needs two distinct faces."""


class Stuck(GenusCertError):
    """The unfolding pipeline could not make progress on a valid input."""


class WalkMismatch(GenusCertError):
    """A boundary walk visits a vertex absent from the history collection."""


class NoRuleApplies(GenusCertError):
    """No footprint rule (or more than one) applies at a binary history node."""


class GlobalInconsistency(GenusCertError):
    """A refold consistency condition failed.

    ``condition`` names the violated check, ``stage`` the pipeline stage.
    """

    def __init__(self, condition, stage, message=""):
        self.condition = condition
        self.stage = stage
        detail = f" ({message})" if message else ""
        super().__init__(f"{condition} violated at stage {stage}{detail}")
