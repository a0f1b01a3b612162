"""Exception hierarchy shared by all pipeline components."""

from __future__ import annotations


class PushSentinelError(Exception):
    """Base class for every error raised by this package."""


# --- frame acquisition ------------------------------------------------------

class SourceUnavailable(PushSentinelError):
    """The configured frame source cannot be opened."""


class DecodeFailure(PushSentinelError):
    """The container/stream opened but frames cannot be decoded as declared."""


class RoiOutOfBounds(PushSentinelError):
    """ROI rectangle does not fit inside the frame."""


# --- flow estimation --------------------------------------------------------

class DimensionMismatch(PushSentinelError):
    """Paired inputs do not have identical pixel dimensions."""


class ModelLoadFailure(PushSentinelError):
    """A serialized model file could not be loaded."""


class ModelRuntimeFailure(PushSentinelError):
    """A loaded model crashed or returned malformed output at run time."""


class SignatureMismatch(ModelLoadFailure):
    """A loaded model's tensor I/O does not match the documented contract."""


# --- patch grid -------------------------------------------------------------

class GridLargerThanImage(PushSentinelError):
    """The requested grid would produce empty cells."""


class IndexOutOfRange(PushSentinelError, IndexError):
    """Patch ordinal k falls outside 1..n*m."""


# --- detection --------------------------------------------------------------

class EmptyPatch(PushSentinelError):
    """A patch with zero pixels was submitted for classification."""


# --- annotation & archiving -------------------------------------------------

class MissingVerdict(PushSentinelError):
    """A keyframe's verdict set does not cover every patch ordinal."""


class RectOutOfBounds(PushSentinelError):
    """An overlay rectangle exceeds the target image bounds."""


class StoreUnavailable(PushSentinelError):
    """The object store cannot be reached (after configured retries)."""


class WriteFailure(PushSentinelError):
    """An individual store write failed (after configured retries)."""


# --- dataset generation -----------------------------------------------------

class MissingGroundTruth(PushSentinelError):
    """A pedestrian appears in the trajectory data with no behavior record."""


class EmptyClass(PushSentinelError):
    """A behavior class has no samples, so a stratified split is impossible."""


class IoFailure(PushSentinelError):
    """Dataset export could not write to the target directory."""


# --- metrics ----------------------------------------------------------------

class EmptyCounts(PushSentinelError):
    """All confusion counts are zero; no ratio is defined."""


class SingleClassInput(PushSentinelError):
    """ROC/AUC needs at least one positive and one negative score."""


# --- service ----------------------------------------------------------------

class InvalidConfig(PushSentinelError):
    """A config update failed validation; carries field-level reasons."""

    def __init__(self, field_errors: dict[str, str]):
        self.field_errors = dict(field_errors)
        detail = "; ".join(f"{k}: {v}" for k, v in sorted(self.field_errors.items()))
        super().__init__(f"invalid config: {detail}")
