"""Session orchestration: schedule, persistence, and reproducible runs.

A session executes one built-in task script for a configured number of
training intervals (default five minutes running, twenty seconds rest,
enforced by the safety monitor's timer). The interactive adjustment loop
runs inside the schedule; once the subject tolerates a full pass, the
remaining budget is spent on clean repetitions that enrich the dataset.

Everything here runs on virtual time and seeded randomness, so a session
with the same task, stage, seed, and profile writes byte-identical
dataset and policy files. Only the started_at stamp in record.json
reflects the wall clock.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .imitation import (
    EmergencyStopAborted,
    Policy,
    ScriptedExpert,
    SessionEngine,
    SessionResult,
    TickResult,
    evaluate_policy,
    train_policy,
)
from .perception import GripSiteLocator, select_start_point
from .safety import SafetyConfig, SafetyTransition, stage_defaults
from .subject import SubjectProfile, SubjectSimulator, profile_to_dict
from .tasks import get_task

MIN_POLICY_ROWS = 4


@dataclass(frozen=True)
class SessionConfig:
    """Knobs for one scripted session run."""

    task_id: str
    stage: int
    seed: int = 0
    dt: float = 0.05
    n_intervals: int = 1
    interval_s: float | None = None  # None: stage default (300 s)
    rest_s: float | None = None  # None: stage default (20 s)
    max_adjustments: int = 20
    gamma: float = 0.8
    locator_sigma: float = 0.002
    subject_id: str | None = None  # None: derived from the profile

    def __post_init__(self) -> None:
        if self.n_intervals < 1:
            raise ValueError(f"n_intervals must be >= 1, got {self.n_intervals}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.locator_sigma < 0:
            raise ValueError(f"locator_sigma must be >= 0, got {self.locator_sigma}")

    def safety(self) -> SafetyConfig:
        cfg = stage_defaults(self.stage)
        overrides = {}
        if self.interval_s is not None:
            overrides["interval_s"] = self.interval_s
        if self.rest_s is not None:
            overrides["rest_s"] = self.rest_s
        return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class SessionRecord:
    """Summary of a finished session, serialized as record.json.

    events is the merged, time-ordered audit log: safety transitions,
    subject feedback, and expert adjustments.
    """

    session_id: str
    subject_id: str
    task_id: str
    safety_stage: int
    started_at: str
    seed: int
    dt: float
    n_intervals: int
    interval_s: float
    rest_s: float
    converged: bool
    aborted: bool
    adjustments: int
    iterations: int
    rows: int
    acceptable_rows: int
    duration_s: float
    running_ticks: int
    events: tuple[dict, ...]
    dataset_ref: str | None
    policy_ref: str | None
    evaluation: dict[str, float] | None
    survey: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "subject_id": self.subject_id,
            "task_id": self.task_id,
            "safety_stage": self.safety_stage,
            "started_at": self.started_at,
            "seed": self.seed,
            "dt": self.dt,
            "n_intervals": self.n_intervals,
            "interval_s": self.interval_s,
            "rest_s": self.rest_s,
            "converged": self.converged,
            "aborted": self.aborted,
            "adjustments": self.adjustments,
            "iterations": self.iterations,
            "rows": self.rows,
            "acceptable_rows": self.acceptable_rows,
            "duration_s": self.duration_s,
            "running_ticks": self.running_ticks,
            "events": list(self.events),
            "dataset_ref": self.dataset_ref,
            "policy_ref": self.policy_ref,
            "evaluation": self.evaluation,
            "survey": dict(self.survey),
        }


def subject_id_for(profile: SubjectProfile) -> str:
    """Stable pseudonymous identifier derived from the profile itself."""
    canonical = json.dumps(profile_to_dict(profile), sort_keys=True)
    return "subj-" + hashlib.sha256(canonical.encode()).hexdigest()[:8]


def session_id_for(cfg: SessionConfig, profile: SubjectProfile) -> str:
    """Deterministic session identifier: same inputs, same id."""
    canonical = json.dumps(
        {
            "task": cfg.task_id,
            "stage": cfg.stage,
            "seed": cfg.seed,
            "dt": cfg.dt,
            "n_intervals": cfg.n_intervals,
            "interval_s": cfg.interval_s,
            "rest_s": cfg.rest_s,
            "subject_id": cfg.subject_id,
            "profile": profile_to_dict(profile),
        },
        sort_keys=True,
    )
    return "sess-" + hashlib.sha256(canonical.encode()).hexdigest()[:12]


def merge_events(transitions: tuple[SafetyTransition, ...], events: tuple[dict, ...]) -> tuple[dict, ...]:
    """Interleave safety transitions with engine events, ordered by time."""
    merged = [dict(kind="transition", **json.loads(tr.to_json_line())) for tr in transitions]
    merged.extend(dict(ev) for ev in events)
    merged.sort(key=lambda ev: ev["t"])
    return tuple(merged)


def _observed_start(traj_start, cfg: SessionConfig, seed: int):
    """Locate the grip site at the script's start point through the perception stub."""
    locator = GripSiteLocator(cfg.locator_sigma, seed=seed)
    observations = [locator.observe(traj_start, t=0.1 * i) for i in range(3)]
    return select_start_point(observations)


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_scripted_session(
    cfg: SessionConfig,
    profile: SubjectProfile,
    out_dir: str | Path | None = None,
    on_tick: Callable[[TickResult], None] | None = None,
) -> tuple[SessionRecord, SessionResult, Policy | None]:
    """Run one full session on virtual time; optionally persist artifacts.

    The subject's RNG seed is taken from the session config so one
    profile file can drive reproducible seed sweeps. An emergency stop
    aborts the run: the partial record is persisted (when out_dir is
    given) and the exception is re-raised with the event log attached.
    """
    task = get_task(cfg.task_id)
    safety = cfg.safety()
    subject = SubjectSimulator(replace(profile, seed=cfg.seed))
    started_at = _timestamp()

    start = _observed_start(task.trajectory.waypoints[0].pos, cfg, cfg.seed)
    offset = tuple(o - p for o, p in zip(start.pos, task.trajectory.waypoints[0].pos))
    trajectory = task.trajectory.translated(offset)

    engine = SessionEngine(
        trajectory,
        subject,
        safety,
        dt=cfg.dt,
        max_adjustments=cfg.max_adjustments,
        stop_when_converged=False,
    )
    expert = ScriptedExpert(gamma=cfg.gamma, v_max=0.8 * safety.v_max, dt=cfg.dt)
    budget_ticks = round(cfg.n_intervals * safety.interval_s / cfg.dt)

    try:
        while engine.running_ticks < budget_ticks and not engine.failed:
            result = engine.tick()
            if on_tick is not None:
                on_tick(result)
            if result.needs_adjustment:
                proposal = expert.propose_adjustment(engine.trajectory, result.stop_index)
                engine.apply_adjustment(proposal)
    except EmergencyStopAborted as abort:
        outcome = engine.result()
        record = build_record(cfg, profile, safety, started_at, outcome, engine, None, aborted=True)
        if out_dir is not None:
            persist_session(Path(out_dir), record, outcome, None)
        raise abort

    outcome = engine.result()
    policy: Policy | None = None
    if len(outcome.dataset.acceptable()) >= MIN_POLICY_ROWS:
        policy = train_policy(
            outcome.dataset, dt=cfg.dt, subject_id=cfg.subject_id or subject_id_for(profile)
        )

    record = build_record(cfg, profile, safety, started_at, outcome, engine, policy)
    if out_dir is not None:
        persist_session(Path(out_dir), record, outcome, policy)
    return record, outcome, policy


def build_record(
    cfg: SessionConfig,
    profile: SubjectProfile,
    safety: SafetyConfig,
    started_at: str,
    outcome: SessionResult,
    engine: SessionEngine,
    policy: Policy | None,
    aborted: bool = False,
    survey: dict[str, int] | None = None,
) -> SessionRecord:
    evaluation = None
    if policy is not None:
        evaluation = evaluate_policy(policy, engine.trajectory)
    return SessionRecord(
        session_id=session_id_for(cfg, profile),
        subject_id=cfg.subject_id or subject_id_for(profile),
        task_id=cfg.task_id,
        safety_stage=cfg.stage,
        started_at=started_at,
        seed=cfg.seed,
        dt=cfg.dt,
        n_intervals=cfg.n_intervals,
        interval_s=safety.interval_s,
        rest_s=safety.rest_s,
        converged=outcome.converged,
        aborted=aborted,
        adjustments=outcome.adjustments,
        iterations=len(outcome.dataset.iterations),
        rows=len(outcome.dataset.rows),
        acceptable_rows=len(outcome.dataset.acceptable()),
        duration_s=engine.t,
        running_ticks=engine.running_ticks,
        events=merge_events(outcome.transitions, outcome.events),
        dataset_ref="dataset.jsonl",
        policy_ref="policy.json" if policy is not None else None,
        evaluation=evaluation,
        survey=survey or {},
    )


def persist_session(
    out_dir: Path, record: SessionRecord, outcome: SessionResult, policy: Policy | None
) -> Path:
    """Write record.json, dataset.jsonl, policy.json, and transitions.jsonl."""
    target = out_dir / record.session_id
    target.mkdir(parents=True, exist_ok=True)
    (target / "record.json").write_text(json.dumps(record.to_dict(), sort_keys=True, indent=2) + "\n")
    outcome.dataset.save(target / "dataset.jsonl")
    with (target / "transitions.jsonl").open("w") as fh:
        for tr in outcome.transitions:
            fh.write(tr.to_json_line())
            fh.write("\n")
    if policy is not None:
        policy.save(target / "policy.json")
    return target
