"""Desk-scale simulator for adaptive cobot-assisted upper-limb rehabilitation.

The package models the full training loop: an expert task trajectory, a
parametric subject with a range-of-motion model and stop feedback, a
staged safety monitor with an inclusive 45 N emergency threshold, an
interactive adjustment loop that personalizes the trajectory, a spline
policy trained on the labeled demonstrations, a surrogate muscle
activation stack, and an HTTP service exposing live sessions.
"""

from .trajectory import (
    Box,
    LimitViolation,
    Trajectory,
    ViolationKind,
    Waypoint,
    band_fraction,
    check_limits,
    concatenate,
    load_trajectory,
    resample,
    rmse,
    save_trajectory,
    time_grid,
    trajectory_from_dict,
    trajectory_to_dict,
)
from .subject import (
    FeedbackEvent,
    FeedbackKind,
    ForceReading,
    SubjectProfile,
    SubjectSimulator,
    load_profile,
    normalized_depth,
    resistance_force,
    save_profile,
)
from .safety import (
    Command,
    CommandRejected,
    F_SAFE_DEFAULT_N,
    Mode,
    SafetyConfig,
    SafetyMonitor,
    SafetyState,
    SafetyTransition,
    stage_defaults,
    step,
)
from .imitation import (
    DemoDataset,
    EmergencyStopAborted,
    ExpertModel,
    Iteration,
    Label,
    LabeledState,
    Policy,
    ScriptedExpert,
    SessionEngine,
    SessionResult,
    TickResult,
    evaluate_policy,
    expert_adjust,
    run_session,
    train_policy,
)
from .emg import (
    ActivationReport,
    Condition,
    EmgRecord,
    MuscleSurrogate,
    TaskKind,
    compare_conditions,
    default_surrogates,
    pct_mvic,
    remove_ecg,
    rms_envelope,
    surrogate_activation,
    target_muscles,
    time_normalize_and_average,
)
from .perception import GripSiteLocator, GripSiteObservation, select_start_point
from .tasks import (
    TaskPhase,
    TaskScript,
    fine_task_grip_channel,
    get_task,
    grip_full_cycles,
)
from .session import (
    SessionConfig,
    SessionRecord,
    build_record,
    merge_events,
    run_scripted_session,
    session_id_for,
    subject_id_for,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "LimitViolation",
    "Trajectory",
    "ViolationKind",
    "Waypoint",
    "band_fraction",
    "check_limits",
    "concatenate",
    "load_trajectory",
    "resample",
    "rmse",
    "save_trajectory",
    "time_grid",
    "trajectory_from_dict",
    "trajectory_to_dict",
    "FeedbackEvent",
    "FeedbackKind",
    "ForceReading",
    "SubjectProfile",
    "SubjectSimulator",
    "load_profile",
    "normalized_depth",
    "resistance_force",
    "save_profile",
    "Command",
    "CommandRejected",
    "F_SAFE_DEFAULT_N",
    "Mode",
    "SafetyConfig",
    "SafetyMonitor",
    "SafetyState",
    "SafetyTransition",
    "stage_defaults",
    "step",
    "DemoDataset",
    "EmergencyStopAborted",
    "ExpertModel",
    "Iteration",
    "Label",
    "LabeledState",
    "Policy",
    "ScriptedExpert",
    "SessionEngine",
    "SessionResult",
    "TickResult",
    "evaluate_policy",
    "expert_adjust",
    "run_session",
    "train_policy",
    "ActivationReport",
    "Condition",
    "EmgRecord",
    "MuscleSurrogate",
    "TaskKind",
    "compare_conditions",
    "default_surrogates",
    "pct_mvic",
    "remove_ecg",
    "rms_envelope",
    "surrogate_activation",
    "target_muscles",
    "time_normalize_and_average",
    "GripSiteLocator",
    "GripSiteObservation",
    "select_start_point",
    "TaskPhase",
    "TaskScript",
    "fine_task_grip_channel",
    "get_task",
    "grip_full_cycles",
    "SessionConfig",
    "SessionRecord",
    "build_record",
    "merge_events",
    "run_scripted_session",
    "session_id_for",
    "subject_id_for",
    "__version__",
]
