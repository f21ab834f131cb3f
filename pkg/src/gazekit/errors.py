"""Exception and warning types shared across the engine."""


class GazeEngineError(Exception):
    """Base class for all domain errors raised by gazekit."""


class NonPositiveDepth(GazeEngineError):
    """A 3D point at or behind the camera plane cannot be projected."""


class NoConvergence(GazeEngineError):
    """An iterative solver exhausted its iteration budget."""


class InsufficientPoints(GazeEngineError):
    """Too few points (or views) for the requested estimation."""


class DegenerateViews(GazeEngineError):
    """Calibration views do not span enough orientations."""


class DegenerateConfiguration(GazeEngineError):
    """Point configuration is collinear or otherwise rank-deficient."""


class RayParallelToPlane(GazeEngineError):
    """Ray/plane intersection requested for a parallel pair."""


class DepthOutOfBounds(GazeEngineError):
    """Resolved depth falls outside the allowed range."""


class CoincidentPoints(GazeEngineError):
    """Two points expected to be distinct coincide."""


class TargetAtEyeCenter(GazeEngineError):
    """Fixation target coincides with an eye center."""


class RotationLimitExceeded(GazeEngineError):
    """An eye would have to rotate beyond its yaw/pitch limits.

    Carries the index of the first offending eye.
    """

    def __init__(self, eye_index: int, message: str = ""):
        self.eye_index = eye_index
        super().__init__(message or f"eye {eye_index} exceeds its rotation limits")


class DegenerateAggregate(GazeEngineError):
    """Weighted gaze directions cancel to the zero vector."""


class OutOfBounds(GazeEngineError):
    """A pixel lies outside the plane it must be on."""


class InsufficientPairs(GazeEngineError):
    """Not enough perception pairs to fit a correction model."""


class RankDeficient(GazeEngineError):
    """Pair distribution does not determine the requested basis."""


class ProtocolError(GazeEngineError):
    """Malformed or unknown wire message."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(message or code)


class ExtrapolationWarning(UserWarning):
    """Correction queried outside the hull of its training points."""
