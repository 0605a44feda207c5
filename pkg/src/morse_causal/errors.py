"""Exception hierarchy. Every failure mode raised by the library derives from
:class:`MorseCausalError` so callers (and the CLI) can catch them uniformly."""


class MorseCausalError(Exception):
    """Base class."""


class ZeroVector(MorseCausalError, ValueError):
    pass


class OnStableManifold(MorseCausalError, ValueError):
    """Radial projection undefined because y = 0."""


class NonpositiveY(MorseCausalError, ValueError):
    pass


class UnsupportedZeta(MorseCausalError, ValueError):
    """Operation only implemented for zeta = 2 (cone angle pi/4)."""


class DegenerateRoots(MorseCausalError, ValueError):
    pass


class ComponentNotFound(MorseCausalError, LookupError):
    pass


class FormMismatch(MorseCausalError, ArithmeticError):
    """Two algebraically equal formulas disagree numerically."""


class DegenerateA(MorseCausalError, ArithmeticError):
    pass


class OutOfDomain(MorseCausalError, ValueError):
    pass


class VerticalTangent(MorseCausalError, ValueError):
    pass


class EnvelopeViolated(MorseCausalError, ValueError):
    pass


class GapMismatch(MorseCausalError, ValueError):
    pass


class CrossingMissed(MorseCausalError, RuntimeError):
    pass


class PitchTooSteep(MorseCausalError, ValueError):
    pass


class SeedOutsideDomain(MorseCausalError, ValueError):
    pass


class TangencyUnresolved(MorseCausalError, RuntimeError):
    pass


class NotTimelike(MorseCausalError, ValueError):
    pass


class CriticalPoint(MorseCausalError, ValueError):
    pass


class NoVerifiedPoint(MorseCausalError, RuntimeError):
    pass
