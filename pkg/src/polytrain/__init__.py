"""Bimanual polyrhythm training engine.

Scores two-handed circle drawing against a target rhythm ratio, applies
adaptive haptic-style guidance whose strength follows the learner's
windowed score, schedules training and testing blocks from observed
performance, simulates learning subjects for end-to-end testing, and
analyzes the resulting session logs.
"""

from .kinematics import (
    AngleTracker,
    DeadZoneError,
    MovingWindow,
    PlanarPoint,
    UnwrappedAngle,
    raw_angle,
    shortest_arc,
    speed_yz,
    unwrap_step,
)
from .scoring import (
    PolyrhythmRatio,
    PositionErrorMode,
    ScorePipeline,
    ScoreSample,
    ScoringConfig,
    StalledError,
    desired_angle,
    position_score,
    relative_velocity,
    total_score,
    velocity_score,
)
from .trainer import (
    GuidanceForce,
    Hand,
    ReferenceTrajectory,
    TrainingMode,
    cap_force,
    guidance_force,
    reference_state,
    resync_reference,
    training_power,
)
from .session import (
    BlockDecision,
    OutOfWorkspaceError,
    SensedInput,
    HandSample,
    SessionConfig,
    SessionEngine,
    SessionEvent,
    evaluate_block,
)
from .subject import (
    NumericalBlowupError,
    SubjectParams,
    SubjectState,
    VirtualSubject,
    run_batch,
    run_session,
    subject_step,
)
from .analysis import (
    AnovaResult,
    TestingSegment,
    anova_oneway,
    pearson,
    percent_change,
    posthoc_pairwise,
    segment_tests,
)
from .logio import MalformedLogError, LogValidationError, read_log, rescore, write_log

__version__ = "1.0.0"

__all__ = [
    "AngleTracker",
    "AnovaResult",
    "BlockDecision",
    "DeadZoneError",
    "GuidanceForce",
    "Hand",
    "HandSample",
    "LogValidationError",
    "MalformedLogError",
    "MovingWindow",
    "NumericalBlowupError",
    "OutOfWorkspaceError",
    "PlanarPoint",
    "PolyrhythmRatio",
    "PositionErrorMode",
    "ReferenceTrajectory",
    "ScorePipeline",
    "ScoreSample",
    "ScoringConfig",
    "SensedInput",
    "SessionConfig",
    "SessionEngine",
    "SessionEvent",
    "StalledError",
    "SubjectParams",
    "SubjectState",
    "TestingSegment",
    "TrainingMode",
    "UnwrappedAngle",
    "VirtualSubject",
    "anova_oneway",
    "cap_force",
    "desired_angle",
    "evaluate_block",
    "guidance_force",
    "pearson",
    "percent_change",
    "position_score",
    "posthoc_pairwise",
    "raw_angle",
    "read_log",
    "reference_state",
    "relative_velocity",
    "rescore",
    "resync_reference",
    "run_batch",
    "run_session",
    "segment_tests",
    "shortest_arc",
    "speed_yz",
    "subject_step",
    "total_score",
    "training_power",
    "unwrap_step",
    "velocity_score",
    "write_log",
]
