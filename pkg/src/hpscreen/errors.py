"""Exception types shared across the pipeline.

Contract violations that indicate a programming error (wrong array shape,
mismatched dimensions) raise plain ValueError; everything a user can trigger
through files or configuration gets a dedicated class so the CLI can map it
to a distinct exit code.
"""


class HpscreenError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(HpscreenError):
    """Invalid, unknown or inconsistent configuration keys/values."""


class MissingInputError(HpscreenError):
    """A stage was invoked before the stage producing its inputs."""


class ArtifactMismatchError(HpscreenError):
    """An input artifact was produced under a different configuration."""


class UnsupportedImageError(HpscreenError):
    """Image file exists but is not an 8-bit RGB raster."""


class CorruptImageError(HpscreenError):
    """Image file exists but cannot be decoded."""


class NoTissueError(HpscreenError):
    """No tissue border available to sample windows from."""


class SlideTooSmallError(HpscreenError):
    """Slide dimensions cannot contain the requested window."""


class EmptyTrainingSetError(HpscreenError):
    """Training was requested with zero windows."""


class NonFiniteLossError(HpscreenError):
    """Training loss became NaN/inf; aborted with diagnostics."""


class DegenerateRocError(HpscreenError):
    """ROC analysis needs both classes present."""


class DegenerateSplitError(HpscreenError):
    """A cross-validation training split contains a single class."""


class CheckpointError(HpscreenError):
    """Base class for model checkpoint I/O failures."""


class CorruptCheckpointError(CheckpointError):
    """Checkpoint file is truncated or fails structural validation."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported."""


class WeightShapeError(CheckpointError):
    """Stored weight shapes disagree with the checkpoint's own config."""
