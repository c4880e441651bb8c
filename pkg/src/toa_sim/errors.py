"""Exception and warning types shared across the package."""


class ToaSimError(Exception):
    """Base class for all package errors."""


class ConfigError(ToaSimError):
    """Invalid physical or run configuration."""


class NonPositiveMass(ConfigError):
    pass


class NegativeRate(ConfigError):
    pass


class NonPositiveWidth(ConfigError):
    pass


class NonPositiveVelocity(ConfigError):
    pass


class UnknownConfigKey(ConfigError):
    pass


class NumericError(ToaSimError):
    """A computation failed or produced non-physical output."""


class SingularMatching(NumericError):
    """The scattering matching system is numerically singular."""


class NonPhysicalAbsorption(NumericError):
    """Absorption fell outside the [0, 1] sanity band."""


class EmptySupport(NumericError):
    """Profile discretization produced no slices."""


class NormDeficit(NumericError):
    """Packet norm or positive-momentum invariants are violated."""


class DomainTooSmall(NumericError):
    """Spatial domain does not contain the wave packet."""


class ConsistencyFailure(NumericError):
    """Independent computation routes disagree beyond tolerance."""


class GridMismatch(NumericError):
    """Time series defined on incompatible grids."""


class ZeroIntegral(NumericError):
    """Cannot normalize a series with vanishing integral."""


class UnderResolvedWarning(UserWarning):
    """Time grid too coarse to resolve the emission-kernel scale."""


class ConvergenceWarning(UserWarning):
    """Self-check indicates an under-converged discretization."""


class RegimeWarning(UserWarning):
    """Requested operation outside its validity regime."""
