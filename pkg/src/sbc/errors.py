"""Exception types shared across the package."""


class SbcError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSpec(SbcError):
    """A model specification violates its invariants (e.g. non-positive scale)."""


class NonFiniteParameter(SbcError):
    """A parameter vector contains NaN or infinite entries."""


class NonFiniteInput(SbcError):
    """A numeric input that must be finite is not."""


class NonFiniteDensity(SbcError):
    """The log posterior density is non-finite at a chain's initial point."""


class UnknownParameter(SbcError):
    """A quantity or corruption references a parameter name that does not exist."""


class UnknownQuantity(SbcError):
    """A report references a quantity absent from the run artifact."""


class NotConjugate(SbcError):
    """The exact-conjugate sampler was asked to fit a non-conjugate model."""


class Diverged(SbcError):
    """The variational objective became non-finite during optimization."""


class ZeroVariance(SbcError):
    """Autocorrelation of a constant series is undefined."""


class AllConstant(SbcError):
    """Every registered quantity is constant over the chain."""


class TooShort(SbcError):
    """A chain is shorter than the number of draws requested from it."""


class IndivisibleBinning(SbcError):
    """The requested bin count does not divide the number of rank values."""


class FailureRateExceeded(SbcError):
    """Too many replications failed; the run was aborted."""


class FormatVersionMismatch(SbcError):
    """A persisted artifact has an unsupported major format version."""


class ChecksumMismatch(SbcError):
    """A persisted artifact file does not match its recorded checksum."""


class ConfigError(SbcError):
    """A run configuration file is malformed or inconsistent."""
