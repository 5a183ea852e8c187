"""Exception types raised across the package."""


class DelayNavError(Exception):
    """Base class for all package errors."""


class PolarSingularity(DelayNavError):
    """Latitude too close to a pole for the local-level error model."""


class ZenithSingularity(DelayNavError):
    """Beacon is (nearly) straight above/below the array; azimuth undefined."""


class NonTerminating(DelayNavError):
    """Trajectory parameters can never reach the requested final depth."""


class NonUniformRate(DelayNavError):
    """Sample timestamps are not uniformly spaced."""


class OutOfWindow(DelayNavError):
    """Time of flight does not fit inside the acoustic sampling window."""


class NegativeTof(DelayNavError):
    """A fix carries a negative time of flight."""


class CovarianceBlowup(DelayNavError):
    """Covariance trace exceeded the configured ceiling."""


class IllConditioned(DelayNavError):
    """Innovation covariance is numerically singular."""


class BufferUnderrun(DelayNavError):
    """A delayed fix predates the oldest buffered snapshot."""


class EmptyOverlap(DelayNavError):
    """Estimated and reference series do not overlap in time."""


class ConfigError(DelayNavError):
    """Invalid scenario configuration.

    ``errors`` maps dotted field names to human readable messages.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = {"": errors}
        self.errors = dict(errors)
        msg = "; ".join(f"{k}: {v}" if k else v for k, v in self.errors.items())
        super().__init__(msg)
