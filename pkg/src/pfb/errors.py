"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised when a run configuration is malformed or inconsistent."""


class CheckpointError(RuntimeError):
    """Raised when a checkpoint file cannot be read or fails validation."""


class TrainingDiverged(RuntimeError):
    """Raised when the training loss becomes non-finite."""
