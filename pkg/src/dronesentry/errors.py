"""Exception types raised across the package."""


class DroneSentryError(Exception):
    """Base class for all package-specific errors."""


# --- telemetry ---

class MissingColumn(DroneSentryError):
    """Log header does not match the expected CSV schema."""


class ValueOutOfRange(DroneSentryError):
    """A telemetry field lies outside its physical bounds."""


class NonMonotoneTimestamps(DroneSentryError):
    """Record timestamps are not strictly increasing."""


class UnknownMode(DroneSentryError):
    """Flight mode string is not one of the known modes."""


# --- simulation ---

class InfeasibleMission(DroneSentryError):
    """Mission parameters cannot produce a flyable mission."""


class ConflictingFaults(DroneSentryError):
    """Two injected faults overlap in an unresolvable way."""


class CalibrationFailed(DroneSentryError):
    """Wind calibration could not find a mission-stopping speed."""


class NoAnomalies(DroneSentryError):
    """A labelled log contains no anomalous records to extract."""


# --- phases ---

class MissingMetadata(DroneSentryError):
    """Flight log lacks the mission metadata needed for segmentation."""


# --- rules ---

class EmptyCorpus(DroneSentryError):
    """No records available to mine rules from."""


class InvalidSupport(DroneSentryError):
    """Minimum support outside (0, 1]."""


# --- detectors ---

class TooFewPoints(DroneSentryError):
    """Training set too small for the requested model."""


class InvalidParams(DroneSentryError):
    """Detector hyperparameters violate their preconditions."""


class DimensionMismatch(DroneSentryError):
    """Query point dimension differs from the fitted model's."""


class NoConvergence(DroneSentryError):
    """Iterative solver hit its iteration cap before converging."""


# --- ensemble ---

class WrongArity(DroneSentryError):
    """Ensemble vote called with a number of votes other than five."""


# --- evaluation ---

class LengthMismatch(DroneSentryError):
    """Verdicts and ground-truth labels differ in length."""


# --- config / cli ---

class ConfigError(DroneSentryError):
    """Bad configuration file or override."""
