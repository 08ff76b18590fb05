"""Exception taxonomy shared across the toolkit."""


class AlidsError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(AlidsError):
    """Feature schema is malformed or inconsistent with the data."""


class DatasetError(AlidsError):
    """CSV rows, labels, or values violate the schema contract."""


class ConfigError(AlidsError):
    """Invalid parameter or strategy/session configuration."""


class CapabilityError(AlidsError):
    """Operation requires a model capability the model lacks (e.g. gradients)."""


class TrainingError(AlidsError):
    """Learner cannot train on the given data (e.g. empty labeled set)."""


class SessionError(AlidsError):
    """Active-learning session is in the wrong state for the operation."""


class LabelRejected(SessionError):
    """Submitted label refers to a non-pending or already-labeled instance."""


class SnapshotError(AlidsError):
    """Session snapshot is corrupted, truncated, or of an unknown version."""
