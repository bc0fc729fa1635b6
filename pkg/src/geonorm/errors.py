"""Exception hierarchy shared by all geonorm modules."""


class GeonormError(Exception):
    """Base class for all geonorm errors."""


class ZeroMass(GeonormError):
    """The image has no mass, so mass-weighted functionals are undefined."""


class DenominatorVanishes(GeonormError):
    """A projective map sends a required point through a zero denominator."""


class Singular(GeonormError):
    """A map (or matrix) is not invertible."""


class NegativeDeterminant(GeonormError):
    """A factorization requires a positive determinant but got det <= 0."""


class DegenerateSecondMoments(GeonormError):
    """The second-moment matrix is singular (mass concentrated on a line)."""


class DegenerateRadius(GeonormError):
    """All mass sits at the expansion center, so radial moments vanish."""


class UndefinedDirection(GeonormError):
    """The spherical center of mass has no direction (it cancels out)."""


class MalformedHeader(GeonormError):
    """An image file header could not be parsed."""


class NoConvergence(GeonormError):
    """An iterative solve did not reach the requested tolerance.

    Carries the best-effort result (when one exists) in ``result`` and the
    damped residual-norm trace in ``trace``.
    """

    def __init__(self, message, result=None, trace=None):
        super().__init__(message)
        self.result = result
        self.trace = list(trace) if trace is not None else []
