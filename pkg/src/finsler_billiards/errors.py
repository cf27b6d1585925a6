"""Exception hierarchy shared by all modules."""


class FinslerBilliardError(Exception):
    """Base class for every numerical failure raised by this package."""


class NoIntersection(FinslerBilliardError):
    pass


class GrazingHit(FinslerBilliardError):
    pass


class NotConvex(FinslerBilliardError):
    pass


class DegenerateCurve(FinslerBilliardError):
    pass


class DegenerateEnvelope(FinslerBilliardError):
    pass


class DomainEscape(FinslerBilliardError):
    pass


class CoincidentPoints(FinslerBilliardError):
    pass


class FieldTooStrong(FinslerBilliardError):
    pass


class GrazingIncidence(FinslerBilliardError):
    pass


class NoTransversalSolution(FinslerBilliardError):
    pass


class NoConvergence(FinslerBilliardError):
    pass


class ImageNotConvex(FinslerBilliardError):
    pass


class PencilBroken(FinslerBilliardError):
    pass


class DegenerateCenterCurve(FinslerBilliardError):
    pass


class TangentArc(FinslerBilliardError):
    pass


class NoProgress(FinslerBilliardError):
    pass


class WeakFieldViolation(FinslerBilliardError):
    pass


class ConfigError(ValueError):
    """Malformed scene, oval or metric specification."""
