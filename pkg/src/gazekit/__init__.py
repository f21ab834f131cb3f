"""gazekit: gaze synthesis through a camera colocated with an avatar's eyes.

The package maps camera pixels to physical-space rays, estimates camera
pose and on-screen object points under a joint objective, rotates any
number of avatar eyes onto a fixation target, corrects the flat-panel
perceived-gaze bias from commanded/perceived point pairs, and verifies
interference-free capture schedules for field-sequential displays.
"""

from .camera import (
    CameraIntrinsics,
    DistortionCoefficients,
    NO_DISTORTION,
    Ray,
    cast_ray,
    load_intrinsics,
    pixel_directions,
    project,
    save_intrinsics,
    undistort,
)
from .calibration import (
    AffineField,
    CalibrationReport,
    CalibrationSession,
    CorrectionModel,
    FitConfig,
    IdentityField,
    LookupGridField,
    PerceptionPair,
    RadialField,
    apply_correction,
    cross_validate,
    fit_correction,
    perception_error,
    record_pair,
    simulate_perceiver,
)
from .intrinsics_fit import fit_intrinsics
from .pnp import (
    DepthPrior,
    FixedDepth,
    JointObjectiveWeights,
    JointResult,
    ObjectPointEstimate,
    PlaneIntersection,
    Pose,
    estimate_object_point,
    gaze_vector_colocated,
    joint_optimize,
    reprojection_error,
    solve_pnp,
)
from .rig import (
    AvatarRig,
    EyeModel,
    EyeRotation,
    FixationCommand,
    HeadPose,
    LimitViolation,
    fixate,
    fixate_clamped,
    fixation_from_vector,
    load_rig,
    recognized_gaze,
    ring_rig,
    save_rig,
    two_eye_rig,
)
from .scene import (
    DisplaySpec,
    PAPER_CAMERA_RESOLUTION,
    PAPER_DISPLAY,
    VirtualSceneConfig,
    build_scene,
    image_plane_size,
    pixel_to_fixation,
)
from .scheduler import (
    CameraTiming,
    DriveConfig,
    ExposureSchedule,
    interference_check,
    paper_drive,
    schedule_exposures,
    transparent_intervals,
)

__version__ = "0.1.0"
