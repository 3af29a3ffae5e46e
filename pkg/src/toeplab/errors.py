"""Exception hierarchy.

Every error raised by the package derives from :class:`ToeplabError`.  The
CLI maps :class:`ConfigError` subclasses to exit code 2 and
:class:`NumericalError` subclasses to exit code 3.
"""


class ToeplabError(Exception):
    """Base class for all package errors."""

    hint = ""


class ConfigError(ToeplabError, ValueError):
    """Invalid user input: symbol text, region literal, run configuration."""


class NumericalError(ToeplabError, ArithmeticError):
    """A numerical routine failed or its precondition cannot be met."""


# symbol / symparse
class InvariantViolation(ConfigError):
    pass


class EmptySymbol(ConfigError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, position=0, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += " (expected one of: " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class DegenerateParameter(NumericalError):
    hint = "choose z away from 0 / a_0 so the characteristic polynomial keeps full degree"


class RootsOnCircle(NumericalError):
    hint = "z lies (numerically) on the symbol curve; move it off the curve"


class NonConvergence(NumericalError):
    pass


class OnCurve(NumericalError):
    hint = "z lies on the symbol curve; move it off the curve"


class RefinementExhausted(NumericalError):
    pass


class SuspectBoundary(NumericalError):
    hint = "region boundary may be tangent to the curve; perturb the region"


# linalg
class NonSquare(NumericalError, ValueError):
    pass


class NoConvergence(NumericalError):
    hint = "iteration budget exceeded; the matrix may be too ill-conditioned"


# operators / grushin
class Overlap(ConfigError):
    pass


class OnSpectrum(NumericalError):
    hint = "z coincides with an eigenvalue of the circulant; shift z slightly"


class QuadratureStall(NumericalError):
    pass


class DegenerateCriticalPoint(NumericalError):
    hint = "z0 is a critical value of the symbol; pick a regular point of the curve"


class NeumannDivergence(NumericalError):
    hint = "decrease delta: the perturbation is too large for the Neumann series"


# randmat
class ShapeMismatch(NumericalError, ValueError):
    pass


# quasimode
class RankDeficient(NumericalError):
    pass


class WrongIndexSign(NumericalError):
    hint = "quasimodes exist only where the winding number is nonzero"


# experiments
class PreconditionViolated(ConfigError):
    pass
