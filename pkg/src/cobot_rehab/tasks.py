"""Built-in training task scripts.

Two choreographies ship with the package, loaded from CSV waypoint
tables under data/: a gross-level arm routine (backward contraction,
forward extension, arm swivel stretch) and a fine-level hand routine
(pick up with guidance, palm open, fist hold) whose grip channel cycles
the hand open and closed. Tables were authored by tools/generate_tasks.py;
phase seams repeat a waypoint exactly so the phases chain continuously.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .emg import FINE_MUSCLES, GROSS_MUSCLES
from .trajectory import Trajectory, Waypoint, concatenate

GROSS_TASK_ID = "gross"
FINE_TASK_ID = "fine"
TASK_IDS = (GROSS_TASK_ID, FINE_TASK_ID)

GROSS_CANONICAL_ID = "GrossArm-ADL"
FINE_CANONICAL_ID = "FineHand-Finger"

_FILES = {
    GROSS_TASK_ID: "gross_arm_adl.csv",
    FINE_TASK_ID: "fine_hand_finger.csv",
}
_ALIASES = {
    GROSS_CANONICAL_ID: GROSS_TASK_ID,
    FINE_CANONICAL_ID: FINE_TASK_ID,
}


@dataclass(frozen=True)
class TaskPhase:
    name: str
    trajectory: Trajectory


@dataclass(frozen=True)
class PhaseSpan:
    name: str
    t_start: float
    t_end: float


@dataclass(frozen=True)
class TaskScript:
    """One named choreography: ordered phases plus the stitched whole."""

    id: str
    task_id: str
    title: str
    phases: tuple[TaskPhase, ...]
    trajectory: Trajectory
    target_muscles: tuple[str, ...]

    def phase_spans(self) -> tuple[PhaseSpan, ...]:
        return tuple(
            PhaseSpan(p.name, p.trajectory.waypoints[0].t, p.trajectory.waypoints[-1].t)
            for p in self.phases
        )


def resolve_task_id(task_id: str) -> str:
    """Accept either the short CLI id or the canonical script id."""
    if task_id in _FILES:
        return task_id
    if task_id in _ALIASES:
        return _ALIASES[task_id]
    raise KeyError(f"unknown task {task_id!r}; expected one of {TASK_IDS}")


def _load_phases(task_id: str) -> tuple[TaskPhase, ...]:
    text = resources.files("cobot_rehab").joinpath("data", _FILES[task_id]).read_text()
    rows = list(csv.DictReader(text.splitlines()))
    phases: list[TaskPhase] = []
    order: list[str] = []
    for row in rows:
        if not order or order[-1] != row["phase"]:
            order.append(row["phase"])
    for name in order:
        group = [r for r in rows if r["phase"] == name]
        waypoints = tuple(
            Waypoint(
                t=float(r["t_s"]),
                pos=(float(r["x"]), float(r["y"]), float(r["z"])),
                grip=float(r["grip"]) if r.get("grip") not in (None, "") else None,
            )
            for r in group
        )
        phases.append(TaskPhase(name, Trajectory(waypoints)))
    return tuple(phases)


def get_task(task_id: str) -> TaskScript:
    return _build_task(resolve_task_id(task_id))


@lru_cache(maxsize=None)
def _build_task(short: str) -> TaskScript:
    phases = _load_phases(short)
    trajectory = concatenate([p.trajectory for p in phases])
    if short == GROSS_TASK_ID:
        return TaskScript(
            id=GROSS_CANONICAL_ID,
            task_id=short,
            title="Gross arm routine (daily-living reach patterns)",
            phases=phases,
            trajectory=trajectory,
            target_muscles=GROSS_MUSCLES,
        )
    return TaskScript(
        id=FINE_CANONICAL_ID,
        task_id=short,
        title="Fine hand routine (grip and finger patterns)",
        phases=phases,
        trajectory=trajectory,
        target_muscles=FINE_MUSCLES,
    )


def grip_full_cycles(traj: Trajectory, level: float = 0.5) -> int:
    """Count completed open-close-open grip cycles.

    A cycle is an upward crossing of the level followed by a downward
    crossing; a trailing unclosed excursion does not count.
    """
    grips = traj.grips()
    if grips is None:
        raise ValueError("trajectory has no grip channel")
    cycles = 0
    above = grips[0] >= level
    pending = False
    for g in grips[1:]:
        if not above and g >= level:
            above = True
            pending = True
        elif above and g < level:
            above = False
            if pending:
                cycles += 1
                pending = False
    return cycles


def fine_task_grip_channel(task: TaskScript, interval_s: float = 300.0) -> dict:
    """Verify the fine task's grip channel alternates full cycles.

    Returns the cycle count over one pass, the cycle period, and the
    cycle rate projected onto one training interval.
    """
    if not task.trajectory.has_grip:
        raise ValueError(f"task {task.id} has no grip channel")
    cycles = grip_full_cycles(task.trajectory)
    duration = task.trajectory.duration
    return {
        "cycles": cycles,
        "period_s": duration / cycles if cycles else None,
        "cycles_per_interval": cycles * interval_s / duration,
    }
