"""Exception types shared across the toolkit."""


class SpikeRlError(Exception):
    """Base class for all toolkit errors."""


class ContractViolation(SpikeRlError):
    """A caller broke an operation's precondition (shape mismatch, missing trace, ...)."""


class ConfigError(SpikeRlError):
    """Invalid run configuration or parameter block."""


class CheckpointError(SpikeRlError):
    """Base class for checkpoint load failures."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint file carries an unsupported format version."""


class CheckpointShapeError(CheckpointError):
    """Checkpoint array shapes disagree with the declared hyperparameters."""


class CheckpointCorruptError(CheckpointError):
    """Checkpoint file is unparseable or internally inconsistent."""


class ProtocolError(SpikeRlError):
    """Base class for remote-environment protocol failures."""


class MalformedMessage(ProtocolError):
    """Peer sent a line that is not a valid protocol message."""


class DimensionMismatch(ProtocolError):
    """Message payload dimensions disagree with the declared environment spec."""


class ProtocolTimeout(ProtocolError):
    """Peer did not answer within the configured deadline."""
