"""sEMG-style measurement stack and the surrogate muscle-activation model.

Signal side: RMS envelope (100 ms default window), zero-phase high-pass
ECG-artifact removal, time normalization with repetition averaging, and
MVIC percentage normalization.

Model side: a deliberately simple surrogate that maps end-effector
motion, interaction force, and grip-rate to a per-muscle activation in
[0, 1]. It replaces musculoskeletal simulation; its absolute values
carry no clinical meaning and reports generated from it say so.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal as sps

from .subject import ForceReading
from .trajectory import Trajectory

SURROGATE_DISCLAIMER = (
    "Surrogate activation model: values are unitless simulator outputs, "
    "not clinical measurements."
)


class Condition(Enum):
    REST = "rest"
    COBOT_TRAINING = "cobot_training"
    SPECIALIST_TRAINING = "specialist_training"
    MVIC_TEST = "mvic_test"


class TaskKind(Enum):
    GROSS_ARM = "gross_arm"
    FINE_HAND = "fine_hand"


# Placeholder muscle sets; the counts (6 gross / 5 fine) are contractual,
# the names are configuration.
GROSS_MUSCLES: tuple[str, ...] = (
    "anterior-deltoid",
    "posterior-deltoid",
    "biceps-brachii",
    "triceps-lateral",
    "upper-trapezius",
    "pectoralis-major",
)
FINE_MUSCLES: tuple[str, ...] = (
    "flexor-digitorum-superficialis",
    "extensor-digitorum",
    "flexor-carpi-radialis",
    "extensor-carpi-ulnaris",
    "first-dorsal-interosseous",
)


def target_muscles(task: TaskKind) -> tuple[str, ...]:
    return GROSS_MUSCLES if task is TaskKind.GROSS_ARM else FINE_MUSCLES


@dataclass(frozen=True)
class EmgRecord:
    """One channel of sampled sEMG-style data in microvolts."""

    muscle_id: str
    fs: float
    samples: np.ndarray
    condition: Condition = Condition.REST

    def __post_init__(self) -> None:
        if not self.fs > 0:
            raise ValueError(f"fs must be > 0, got {self.fs}")
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def with_samples(self, samples: np.ndarray) -> EmgRecord:
        return EmgRecord(self.muscle_id, self.fs, samples, self.condition)


@dataclass(frozen=True)
class MuscleStats:
    mean_pct_mvic: float
    peak_pct_mvic: float


@dataclass(frozen=True)
class ActivationReport:
    """Per-muscle %MVIC summary for one condition of one task."""

    per_muscle: dict[str, MuscleStats]
    condition: Condition
    task: TaskKind

    def __post_init__(self) -> None:
        expected = set(target_muscles(self.task))
        present = set(self.per_muscle)
        if present != expected:
            raise ValueError(
                f"report must cover exactly the task's target muscles; "
                f"missing {sorted(expected - present)}, unexpected {sorted(present - expected)}"
            )
        for m, stats in self.per_muscle.items():
            if stats.mean_pct_mvic < 0 or stats.peak_pct_mvic < 0:
                raise ValueError(f"percentages must be >= 0, got {m}: {stats}")


@dataclass(frozen=True)
class MuscleSurrogate:
    """Linear sensitivity of one muscle to motion direction, load, and grip rate."""

    muscle_id: str
    direction_weight: tuple[float, float, float]
    excursion_gain: float = 0.0
    resistance_gain: float = 0.0
    grip_gain: float = 0.0

    def __post_init__(self) -> None:
        if self.excursion_gain < 0 or self.resistance_gain < 0 or self.grip_gain < 0:
            raise ValueError("surrogate gains must be >= 0")
        if self.excursion_gain == 0 and self.resistance_gain == 0 and self.grip_gain == 0:
            raise ValueError("at least one surrogate gain must be > 0")


# -- signal conditioning ------------------------------------------------------


def rms_envelope(rec: EmgRecord, window: float = 0.1) -> EmgRecord:
    """Sliding-window RMS with a centered window truncated at the edges.

    Output length equals input length. The default 100 ms window matches
    the smoothing used for the training-effect analysis.
    """
    n = int(round(window * rec.fs))
    if n < 1:
        raise ValueError(f"window of {window}s spans less than one sample at fs={rec.fs}")
    x = rec.samples
    sq = np.concatenate([[0.0], np.cumsum(x * x)])
    idx = np.arange(len(x))
    lo = np.maximum(0, idx - (n - 1) // 2)
    hi = np.minimum(len(x), idx + n // 2 + 1)
    env = np.sqrt((sq[hi] - sq[lo]) / (hi - lo))
    return rec.with_samples(env)


def remove_ecg(rec: EmgRecord, cutoff: float = 30.0) -> EmgRecord:
    """Remove ECG-band contamination with a zero-phase second-order high-pass.

    Applied forward-backward (filtfilt), so the effective response is the
    squared magnitude of the second-order Butterworth: >= 20 dB attenuation
    at half the cutoff, negligible change well above it.
    """
    nyquist = rec.fs / 2.0
    if cutoff >= nyquist:
        raise ValueError(f"cutoff {cutoff} Hz must be below Nyquist {nyquist} Hz")
    b, a = sps.butter(2, cutoff, btype="highpass", fs=rec.fs)
    return rec.with_samples(sps.filtfilt(b, a, rec.samples))


def time_normalize_and_average(reps: Sequence[EmgRecord], n_points: int = 101) -> EmgRecord:
    """Resample each repetition to n_points over 0-100% of its duration, then average.

    The output is in cycle-normalized time: duration 1, fs = n_points - 1.
    """
    if not reps:
        raise ValueError("need at least one repetition")
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    grid = np.linspace(0.0, 1.0, n_points)
    resampled = []
    for rep in reps:
        if len(rep.samples) < 2:
            raise ValueError("each repetition needs >= 2 samples")
        src = np.linspace(0.0, 1.0, len(rep.samples))
        resampled.append(np.interp(grid, src, rep.samples))
    mean = np.mean(resampled, axis=0)
    first = reps[0]
    return EmgRecord(first.muscle_id, float(n_points - 1), mean, first.condition)


def pct_mvic(envelope: EmgRecord, mvic_value: float) -> np.ndarray:
    """Pointwise envelope as a percentage of the MVIC reference."""
    if not mvic_value > 0:
        raise ValueError(f"MVIC reference must be > 0, got {mvic_value}")
    return np.asarray(envelope.samples) / mvic_value * 100.0


# -- surrogate activation -----------------------------------------------------


def surrogate_activation(
    traj: Trajectory, forces: Sequence[ForceReading], model: MuscleSurrogate
) -> np.ndarray:
    """Per-tick activation in [0, 1] for one muscle.

    activation = clamp(excursion_gain * |v . direction_weight|
                       + resistance_gain * ||f||
                       + grip_gain * |dgrip/dt|, 0, 1)
    with v the finite-difference end-effector velocity.
    """
    if len(forces) != len(traj):
        raise ValueError(f"forces and trajectory must share the tick grid: {len(forces)} vs {len(traj)}")
    t = traj.times()
    pos = traj.positions()
    vel = np.gradient(pos, t, axis=0)
    directional = np.abs(vel @ np.asarray(model.direction_weight, dtype=float))
    load = np.array([f.magnitude for f in forces])
    act = model.excursion_gain * directional + model.resistance_gain * load
    grips = traj.grips()
    if model.grip_gain > 0 and grips is not None:
        act = act + model.grip_gain * np.abs(np.gradient(grips, t))
    return np.clip(act, 0.0, 1.0)


def default_surrogates(task: TaskKind) -> list[MuscleSurrogate]:
    """Per-muscle surrogate parameter sets for the two built-in tasks.

    Gains are calibrated once so the full-range-vs-truncated comparison
    resolves with margin at the built-in tasks' speeds; directions are
    fixed unit-ish vectors, not anatomy.
    """
    if task is TaskKind.GROSS_ARM:
        directions = [
            (0.9, 0.1, 0.4),
            (-0.8, 0.2, 0.5),
            (0.7, 0.0, 0.7),
            (-0.6, 0.3, -0.7),
            (0.2, 0.8, 0.5),
            (0.5, -0.8, 0.3),
        ]
        return [
            MuscleSurrogate(m, d, excursion_gain=8.0, resistance_gain=0.01)
            for m, d in zip(GROSS_MUSCLES, directions)
        ]
    directions = [
        (0.6, 0.2, 0.7),
        (-0.5, 0.4, 0.7),
        (0.8, -0.2, 0.5),
        (-0.7, -0.3, 0.6),
        (0.3, 0.6, 0.7),
    ]
    return [
        MuscleSurrogate(m, d, excursion_gain=6.0, resistance_gain=0.01, grip_gain=0.4)
        for m, d in zip(FINE_MUSCLES, directions)
    ]


def activation_report(
    traj: Trajectory,
    forces: Sequence[ForceReading],
    models: Sequence[MuscleSurrogate],
    condition: Condition,
    task: TaskKind,
) -> ActivationReport:
    """Summarize surrogate activation per muscle as mean/peak percent of full scale."""
    per_muscle = {}
    for model in models:
        act = surrogate_activation(traj, forces, model) * 100.0
        per_muscle[model.muscle_id] = MuscleStats(float(np.mean(act)), float(np.max(act)))
    return ActivationReport(per_muscle, condition, task)


# -- condition comparison -----------------------------------------------------


@dataclass(frozen=True)
class ConditionComparison:
    """Per-muscle %MVIC increments (cobot minus specialist) with mean +/- sd."""

    task: TaskKind
    increments: dict[str, float]
    mean: float
    sd: float


def compare_conditions(cobot: ActivationReport, specialist: ActivationReport) -> ConditionComparison:
    if cobot.task is not specialist.task:
        raise ValueError(f"task mismatch: {cobot.task.value} vs {specialist.task.value}")
    if set(cobot.per_muscle) != set(specialist.per_muscle):
        raise ValueError("muscle sets differ between conditions")
    increments = {
        m: cobot.per_muscle[m].mean_pct_mvic - specialist.per_muscle[m].mean_pct_mvic
        for m in sorted(cobot.per_muscle)
    }
    values = np.array(list(increments.values()))
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return ConditionComparison(cobot.task, increments, float(np.mean(values)), sd)


# -- channel manifests and report files ---------------------------------------
#
# Channel CSV: header t_s,uv. Manifest JSON:
#   { "task": "gross_arm"|"fine_hand",
#     "mvic": {"muscle-id": uV, ...},
#     "channels": [{"path": str, "muscle_id": str, "fs_hz": Hz,
#                   "condition": "cobot_training"|...}, ...] }


def load_channel_csv(path: str | Path, muscle_id: str, fs: float, condition: Condition) -> EmgRecord:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "uv" not in reader.fieldnames:
            raise ValueError(f"{path}: channel CSV needs header t_s,uv")
        samples = np.array([float(row["uv"]) for row in reader])
    return EmgRecord(muscle_id, fs, samples, condition)


def process_manifest(manifest_path: str | Path) -> dict[Condition, ActivationReport]:
    """Run the conditioning pipeline over a channel manifest; one report per condition."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    task = TaskKind(manifest["task"])
    mvic = {str(k): float(v) for k, v in manifest["mvic"].items()}

    by_condition: dict[Condition, dict[str, MuscleStats]] = {}
    for entry in manifest["channels"]:
        condition = Condition(entry["condition"])
        rec = load_channel_csv(
            manifest_path.parent / entry["path"],
            str(entry["muscle_id"]),
            float(entry["fs_hz"]),
            condition,
        )
        env = rms_envelope(remove_ecg(rec))
        pct = pct_mvic(env, mvic[rec.muscle_id])
        by_condition.setdefault(condition, {})[rec.muscle_id] = MuscleStats(
            float(np.mean(pct)), float(np.max(pct))
        )
    return {cond: ActivationReport(stats, cond, task) for cond, stats in by_condition.items()}


def report_to_dict(report: ActivationReport) -> dict:
    return {
        "disclaimer": SURROGATE_DISCLAIMER,
        "task": report.task.value,
        "condition": report.condition.value,
        "per_muscle": {
            m: {"mean_pct_mvic": s.mean_pct_mvic, "peak_pct_mvic": s.peak_pct_mvic}
            for m, s in sorted(report.per_muscle.items())
        },
    }


def write_report_csv(reports: Sequence[ActivationReport], path: str | Path) -> None:
    """Muscle x condition table of mean %MVIC, one row per muscle."""
    conditions = [r.condition for r in reports]
    muscles = sorted(reports[0].per_muscle) if reports else []
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# {SURROGATE_DISCLAIMER}\n")
        writer = csv.writer(fh)
        writer.writerow(["muscle"] + [c.value for c in conditions])
        for m in muscles:
            writer.writerow([m] + [f"{r.per_muscle[m].mean_pct_mvic:.3f}" for r in reports])
