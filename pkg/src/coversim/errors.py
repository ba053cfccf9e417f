"""Exception types raised across the package."""


class CoversimError(Exception):
    """Base class for all package-specific errors."""


class OutOfRange(CoversimError):
    """A parameter or query lies outside its admissible interval."""


class DegeneratePolygon(CoversimError):
    """Polygon is not simple, convex, and clockwise from the top-left vertex."""


class UnreachableFinalPoint(CoversimError):
    """The sweep shift cannot make progress across the polygon."""


class NotPrimitive(CoversimError):
    """Repeated stage blocks are not translates of each other."""


class InvalidOrder(CoversimError):
    """Harmonic model order must be a positive integer."""


class InvalidPeriod(CoversimError):
    """Model period must be strictly positive."""


class LengthMismatch(CoversimError):
    """Vector arguments disagree in length."""


class DegenerateBounds(CoversimError):
    """A bound interval has zero or negative width."""


class PredictorUndefined(CoversimError):
    """The power predictor is not defined at a requested bound."""


class ParseError(CoversimError):
    """A profile, polygon, or scenario file could not be parsed."""


class UnsortedKnots(CoversimError):
    """Profile knots are not strictly increasing in the parameter."""


class TooFewKnots(CoversimError):
    """A power profile needs at least two knots."""


class NotMeasured(CoversimError):
    """No measurement was recorded at the requested configuration."""


class InfeasibleLoad(CoversimError):
    """Requested electrical load exceeds what the battery can deliver."""


class Infeasible(CoversimError):
    """The scheduling problem has an empty feasible set."""


class SolverFailure(CoversimError):
    """The solver exhausted its iteration budget without converging."""


class ZeroSoc(CoversimError):
    """Performance metric is undefined at zero final state of charge."""


class ScenarioInvalid(CoversimError):
    """Scenario file is missing keys or carries inconsistent values."""
