"""Exception hierarchy shared across the package."""


class EvPricingError(Exception):
    """Base class for all package errors."""


class DataError(EvPricingError):
    """Raised for malformed or unusable input data (CLI exit code 2)."""


class EmptyData(DataError):
    pass


class OrderViolation(DataError):
    pass


class ConstantFeature(DataError):
    pass


class ConstantTarget(DataError):
    pass


class ShapeMismatch(DataError, ValueError):
    pass


class SingularSystem(DataError):
    pass


class DegeneratePrices(DataError):
    pass


class DegenerateDensity(DataError):
    pass


class InvalidHour(DataError, ValueError):
    pass


class EmptyBatch(EvPricingError):
    pass


class EmptyRollout(EvPricingError):
    pass


class ArchitectureMismatch(EvPricingError):
    pass


class MissingModel(EvPricingError):
    """A pricing strategy needs trained agents that were not supplied (exit code 3)."""


class ConfigError(EvPricingError):
    """Invalid run configuration (exit code 4)."""
