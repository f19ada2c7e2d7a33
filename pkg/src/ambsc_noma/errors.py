"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(ValueError):
    """A scenario configuration is internally inconsistent."""


class DegenerateChannelError(RuntimeError):
    """A channel realization makes the requested operation ill-posed."""


class DegeneratePolynomialError(RuntimeError):
    """All polynomial coefficients vanish; no roots can be extracted."""


class ExtractionDegenerateError(RuntimeError):
    """The lifted matrix has no usable last coordinate for extraction."""


class InfeasibleError(RuntimeError):
    """A constraint set admits no solution.

    Carries enough structure for batch runners to log which stage and
    which constraint failed without parsing message strings.
    """

    def __init__(self, message, stage=None, constraint=None, cluster=None,
                 violation=None):
        super().__init__(message)
        self.stage = stage
        self.constraint = constraint
        self.cluster = cluster
        self.violation = violation
