"""Interactive trajectory personalization.

The engine guides the subject's arm along an expert trajectory one tick
at a time. When the subject signals a stop, the state it stopped in is
labeled bad, everything before it stays acceptable, and an expert (a
scripted stand-in or a remote operator) supplies an adjusted consequent
trajectory that resumes from the last acceptable state. Execution
continues on the spliced trajectory; once the end is reached, a fresh
pass restarts from the beginning, and the session converges on the first
pass that completes without any stop. The collected labeled states then
train a smoothed per-axis spline policy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.interpolate import BSpline

from .safety import Command, Mode, SafetyConfig, SafetyMonitor, SafetyTransition
from .subject import FeedbackKind, SubjectSimulator
from .trajectory import (
    Trajectory,
    Vec3,
    band_fraction,
    concatenate,
    resample,
    rmse,
    time_grid,
)

DEFAULT_DT_S = 0.05
DEFAULT_GAMMA = 0.8
DEFAULT_MAX_ADJUSTMENTS = 20
FINAL_PASS_WEIGHT = 4.0


class Label(Enum):
    ACCEPTABLE = "acceptable"
    BAD = "bad"


@dataclass
class LabeledState:
    """One executed trajectory sample with its subject verdict.

    Mutable on purpose: a state recorded as acceptable is relabeled bad
    when the stop arrives while the arm still dwells on that sample.
    """

    iteration: int
    t: float
    pos: Vec3
    grip: float | None
    label: Label
    force_n: float

    def to_json_obj(self) -> dict:
        return {
            "iter": self.iteration,
            "t": self.t,
            "x": self.pos[0],
            "y": self.pos[1],
            "z": self.pos[2],
            "grip": self.grip,
            "label": self.label.value,
            "force_n": self.force_n,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> LabeledState:
        grip = obj.get("grip")
        return LabeledState(
            int(obj["iter"]),
            float(obj["t"]),
            (float(obj["x"]), float(obj["y"]), float(obj["z"])),
            None if grip is None else float(grip),
            Label(obj["label"]),
            float(obj["force_n"]),
        )


@dataclass(frozen=True)
class Iteration:
    """One execution episode: ends either at a stop or at the trajectory end.

    A stopped iteration carries the sample index of its bad state and,
    except when the adjustment budget ran out first, the expert's
    consequent trajectory. An iteration that reached the end carries
    neither.
    """

    trace: tuple[LabeledState, ...]
    stop_index: int | None = None
    adjustment: Trajectory | None = None
    completed: bool = False

    def __post_init__(self) -> None:
        if self.adjustment is not None and self.stop_index is None:
            raise ValueError("an adjustment requires the stop it answers")

    @property
    def stopped(self) -> bool:
        return self.stop_index is not None

    def bad_states(self) -> tuple[LabeledState, ...]:
        return tuple(r for r in self.trace if r.label is Label.BAD)


@dataclass(frozen=True)
class DemoDataset:
    iterations: tuple[Iteration, ...]

    @property
    def rows(self) -> tuple[LabeledState, ...]:
        return tuple(r for it in self.iterations for r in it.trace)

    def acceptable(self) -> tuple[LabeledState, ...]:
        return tuple(r for r in self.rows if r.label is Label.ACCEPTABLE)

    def save(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            for row in self.rows:
                fh.write(json.dumps(row.to_json_obj()))
                fh.write("\n")

    @staticmethod
    def load(path: str | Path) -> DemoDataset:
        """Rebuild from the line format; adjustment trajectories are not
        part of the serialization and load as None."""
        rows: list[LabeledState] = []
        with Path(path).open() as fh:
            for line in fh:
                if line.strip():
                    rows.append(LabeledState.from_json_obj(json.loads(line)))
        iterations = []
        for index in sorted({r.iteration for r in rows}):
            trace = tuple(r for r in rows if r.iteration == index)
            iterations.append(Iteration(trace=trace))
        return DemoDataset(tuple(iterations))


class EmergencyStopAborted(RuntimeError):
    """Raised when the safety monitor latches EmergencyStop mid-session.

    Not a learning signal: the partial dataset is attached for forensics
    only and must not be used for training.
    """

    def __init__(
        self,
        message: str,
        transitions: Sequence[SafetyTransition],
        rows: Sequence[LabeledState],
        events: Sequence[dict] = (),
    ):
        super().__init__(message)
        self.transitions = tuple(transitions)
        self.partial_rows = tuple(rows)
        self.events = tuple(events)


# -- expert models ------------------------------------------------------------


class ExpertModel(Protocol):
    def propose_adjustment(self, traj: Trajectory, stop_index: int) -> Trajectory:
        """Return the consequent trajectory to resume with after a stop.

        The proposal's first waypoint must sit exactly on the resume
        position: sample stop_index - 1, or sample 0 when the stop hit
        the very first sample. Waypoint times may use any origin; they
        are rebased at the splice.
        """
        ...


def expert_adjust(
    traj: Trajectory,
    stop_index: int,
    anchor: Vec3,
    gamma: float = DEFAULT_GAMMA,
    v_max: float = 0.04,
    dt: float = DEFAULT_DT_S,
) -> Trajectory:
    """Contract the waypoints after a stop toward an anchor point.

    gamma = 1 is the identity adjustment: the remaining trajectory from
    the resume sample is returned untouched. The resume waypoint itself
    is never moved; with a stop at sample 0 there is no prior acceptable
    sample, so the start point stays fixed and only the samples after it
    contract. Segment times are stretched where the contraction would
    otherwise exceed v_max.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    if not (v_max > 0 and dt > 0):
        raise ValueError("v_max and dt must be > 0")
    n = len(traj)
    if not 0 <= stop_index < n:
        raise ValueError(f"stop_index {stop_index} out of range for {n} samples")
    resume = max(stop_index - 1, 0)
    if gamma == 1.0:
        return Trajectory(traj.waypoints[resume:], frame=traj.frame)
    pos = traj.positions()
    grips = traj.grips()
    anchor_arr = np.asarray(anchor, dtype=float)
    tail = pos[resume + 1 :]
    new_tail = anchor_arr + gamma * (tail - anchor_arr)
    points = np.vstack([pos[resume], new_tail])
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    times = np.concatenate([[0.0], np.cumsum(np.maximum(dt, steps / v_max))])
    new_grips = None if grips is None else np.concatenate([[grips[resume]], grips[resume + 1 :]])
    return Trajectory.from_arrays(times, points, new_grips, frame=traj.frame)


@dataclass(frozen=True)
class ScriptedExpert:
    """Deterministic physiotherapist stand-in.

    Contracts the consequent trajectory toward a recovery anchor. With
    no explicit anchor it uses the centroid of the samples the subject
    already tolerated, a crude but serviceable comfort estimate.
    """

    gamma: float = DEFAULT_GAMMA
    anchor: Vec3 | None = None
    v_max: float = 0.04
    dt: float = DEFAULT_DT_S

    def propose_adjustment(self, traj: Trajectory, stop_index: int) -> Trajectory:
        if self.anchor is not None:
            anchor = self.anchor
        else:
            prefix = traj.positions()[: max(stop_index, 1)]
            anchor = tuple(float(v) for v in prefix.mean(axis=0))
        return expert_adjust(traj, stop_index, anchor, self.gamma, self.v_max, self.dt)


# -- tick-level engine ---------------------------------------------------------


@dataclass(frozen=True)
class TickResult:
    t: float
    pos: Vec3
    grip: float | None
    force_n: float
    mode: Mode
    speed_scale: float
    needs_adjustment: bool = False
    stop_index: int | None = None
    pass_completed: bool = False

    def telemetry(self) -> dict:
        return {
            "t": self.t,
            "pos": list(self.pos),
            "grip": self.grip,
            "force_n": self.force_n,
            "mode": self.mode.value,
            "speed_scale": self.speed_scale,
        }


@dataclass(frozen=True)
class SessionResult:
    dataset: DemoDataset
    trajectory: Trajectory
    converged: bool
    adjustments: int
    transitions: tuple[SafetyTransition, ...]
    events: tuple[dict, ...]


class SessionEngine:
    """Step-able executor for one guided training session.

    Call tick() repeatedly; when a result reports needs_adjustment, call
    apply_adjustment() (None resumes with the unchanged consequent)
    before ticking on. Progress only happens while the safety monitor is
    in Running; force is evaluated before any queued command each tick.
    """

    def __init__(
        self,
        trajectory: Trajectory,
        subject: SubjectSimulator,
        cfg: SafetyConfig,
        dt: float = DEFAULT_DT_S,
        max_adjustments: int = DEFAULT_MAX_ADJUSTMENTS,
        stop_when_converged: bool = True,
        stall_timeout_s: float = 5.0,
    ) -> None:
        if dt <= 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.dt = dt
        self.subject = subject
        self.cfg = cfg
        self.max_adjustments = max_adjustments
        self.stop_when_converged = stop_when_converged
        self.monitor = SafetyMonitor(cfg)
        self._traj = resample(trajectory, dt)
        self.t = 0.0
        self.ticks = 0
        self.iterations: list[Iteration] = []
        self.events: list[dict] = []
        self.adjustments = 0
        self.converged = False
        self.failed = False
        self.running_ticks = 0
        self._iteration = 0
        self._episode_rows: list[LabeledState] = []
        self._episode_start = 0
        self._cursor = 0.0
        self._next_record = 0
        self._awaiting_adjustment = False
        self._stop_index: int | None = None
        self._auto_cmds: list[Command] = [Command.START]
        self._pending_external: Command | None = None
        self._measured_force = 0.0
        # Sustained zero progress means the admittance hold is pinned at or
        # above the soft force limit; treat it like a subject stop so the
        # expert gets a chance to adjust instead of spinning forever.
        self._stall_limit = max(1, int(round(stall_timeout_s / dt)))
        self._stall = 0

    # -- public surface --

    @property
    def trajectory(self) -> Trajectory:
        return self._traj

    @property
    def done(self) -> bool:
        return self.failed or (self.converged and self.stop_when_converged)

    @property
    def awaiting_adjustment(self) -> bool:
        return self._awaiting_adjustment

    @property
    def stop_index(self) -> int | None:
        return self._stop_index

    @property
    def resume_index(self) -> int:
        if self._stop_index is None:
            raise RuntimeError("no stop is pending")
        return max(self._stop_index - 1, 0)

    def request_stop(self) -> None:
        """External stop (subject's button rather than force threshold)."""
        if self._awaiting_adjustment or self.done:
            return
        idx = self._current_index()
        self._mark_bad(idx, self._measured_force)
        self._log_feedback("stop", idx, source="api")
        self._begin_hold(idx)

    def tick(self, cmd: Command | None = None) -> TickResult:
        if cmd is not None:
            self._queue_external(cmd)
        if self._auto_cmds:
            effective_cmd = self._auto_cmds.pop(0)
        else:
            effective_cmd, self._pending_external = self._pending_external, None

        idx = self._current_index()
        pos, grip = self._sample(idx)
        force = self.subject.force_at(pos, self.t)
        self._measured_force = force.magnitude
        state = self.monitor.tick(force, pos, self.t, effective_cmd)
        if state.mode is Mode.EMERGENCY_STOP:
            raise EmergencyStopAborted(
                f"emergency stop at t={self.t:.3f}s (force {force.magnitude:.1f} N)",
                self.monitor.transitions,
                self._all_rows(),
                self.events,
            )

        completed = False
        if not self._awaiting_adjustment and not self.done:
            event = self.subject.feedback_step(pos, force, self.t, idx)
            if event is not None:
                self._log_feedback(event.kind.value, event.sample_index, source="subject")
            if event is not None and event.kind is FeedbackKind.STOP:
                self._mark_bad(idx, force.magnitude)
                self._begin_hold(idx)
            elif state.mode is Mode.RUNNING:
                self.running_ticks += 1
                if idx >= self._next_record:
                    self._record(idx, pos, grip, force.magnitude)
                completed = self._advance(idx)

        result = TickResult(
            t=self.t,
            pos=pos,
            grip=grip,
            force_n=force.magnitude,
            mode=state.mode,
            speed_scale=state.speed_scale,
            needs_adjustment=self._awaiting_adjustment,
            stop_index=self._stop_index,
            pass_completed=completed,
        )
        self.t += self.dt
        self.ticks += 1
        return result

    def apply_adjustment(self, consequent: Trajectory | None) -> None:
        """Splice the expert's consequent in and resume.

        None keeps the current consequent unchanged (plain resume). The
        proposal must start exactly at the resume sample's position and
        carry a grip channel iff the session trajectory does.
        """
        if not self._awaiting_adjustment or self._stop_index is None:
            raise RuntimeError("no stop is awaiting an adjustment")
        r = self.resume_index
        if consequent is not None:
            self._validate_proposal(consequent, r)
            if r > 0:
                prefix = Trajectory(self._traj.waypoints[: r + 1], frame=self._traj.frame)
                spliced = concatenate([prefix, consequent])
            else:
                spliced = consequent
            self._traj = resample(spliced, self.dt)
        self._close_episode(stop_index=self._stop_index, adjustment=consequent)
        self.events.append(
            {
                "t": self.t,
                "kind": "adjustment",
                "stop_index": self._stop_index,
                "resume_index": r,
                "identity": consequent is None,
            }
        )
        self._cursor = float(r)
        self._next_record = r + 1
        self._episode_start = r + 1
        self._awaiting_adjustment = False
        self._stop_index = None
        self._stall = 0
        self.adjustments += 1
        self.subject.release_stop()
        self._auto_cmds.append(Command.RESUME)

    def result(self) -> SessionResult:
        iterations = list(self.iterations)
        if self._episode_rows:
            iterations.append(
                Iteration(trace=tuple(self._episode_rows), stop_index=self._stop_index)
            )
        return SessionResult(
            dataset=DemoDataset(tuple(iterations)),
            trajectory=self._traj,
            converged=self.converged,
            adjustments=self.adjustments,
            transitions=tuple(self.monitor.transitions),
            events=tuple(self.events),
        )

    # -- internals --

    def _queue_external(self, cmd: Command) -> None:
        self._pending_external = cmd

    def _current_index(self) -> int:
        return min(int(self._cursor), len(self._traj) - 1)

    def _sample(self, idx: int) -> tuple[Vec3, float | None]:
        w = self._traj.waypoints[idx]
        return w.pos, w.grip

    def _all_rows(self) -> tuple[LabeledState, ...]:
        recorded = [r for it in self.iterations for r in it.trace]
        return tuple(recorded + self._episode_rows)

    def _log_feedback(self, feedback: str, sample_index: int, source: str) -> None:
        self.events.append(
            {
                "t": self.t,
                "kind": "feedback",
                "feedback": feedback,
                "sample_index": sample_index,
                "source": source,
            }
        )

    def _record(self, idx: int, pos: Vec3, grip: float | None, force_n: float) -> None:
        tau = float(self._traj.waypoints[idx].t)
        self._episode_rows.append(
            LabeledState(self._iteration, tau, pos, grip, Label.ACCEPTABLE, force_n)
        )
        self._next_record = idx + 1

    def _mark_bad(self, idx: int, force_n: float) -> None:
        tau = float(self._traj.waypoints[idx].t)
        last = self._episode_rows[-1] if self._episode_rows else None
        if last is not None and last.t == tau:
            last.label = Label.BAD
            last.force_n = force_n
        else:
            pos, grip = self._sample(idx)
            self._episode_rows.append(
                LabeledState(self._iteration, tau, pos, grip, Label.BAD, force_n)
            )
            self._next_record = idx + 1

    def _begin_hold(self, idx: int) -> None:
        self._stop_index = idx
        if self.adjustments >= self.max_adjustments:
            self.failed = True
            self._close_episode(stop_index=idx, adjustment=None)
            return
        self._awaiting_adjustment = True
        self._auto_cmds.append(Command.STOP)

    def _advance(self, idx: int) -> bool:
        last = len(self._traj) - 1
        if self._next_record > last and self._cursor >= last:
            self._finish_pass()
            return True
        scale = self.monitor.speed_scale
        if scale <= 0.0:
            self._stall += 1
            if self._stall >= self._stall_limit:
                self._stall = 0
                self._mark_bad(idx, self._measured_force)
                self._log_feedback("stop", idx, source="stall")
                self._begin_hold(idx)
                return False
        else:
            self._stall = 0
        self._cursor = min(self._cursor + scale, float(last))
        return False

    def _finish_pass(self) -> None:
        # A stop-free episode that started at sample 0 is a fully accepted
        # pass; that is the convergence condition. Episodes resumed mid-way
        # after an adjustment must still be followed by a fresh full pass.
        full_pass = self._episode_start == 0
        self._close_episode(stop_index=None, adjustment=None, completed=True)
        if full_pass:
            self.converged = True
        self._cursor = 0.0
        self._next_record = 0
        self._episode_start = 0

    def _close_episode(
        self,
        stop_index: int | None,
        adjustment: Trajectory | None,
        completed: bool = False,
    ) -> None:
        self.iterations.append(
            Iteration(
                trace=tuple(self._episode_rows),
                stop_index=stop_index,
                adjustment=adjustment,
                completed=completed,
            )
        )
        self._episode_rows = []
        self._iteration += 1

    def _validate_proposal(self, proposal: Trajectory, resume_idx: int) -> None:
        resume_pos = np.asarray(self._traj.waypoints[resume_idx].pos)
        first = np.asarray(proposal.waypoints[0].pos)
        if not np.allclose(first, resume_pos, atol=1e-6):
            raise ValueError(
                f"adjustment must resume from the last acceptable position {tuple(resume_pos)}, "
                f"got {tuple(first)}"
            )
        if proposal.has_grip != self._traj.has_grip:
            raise ValueError("adjustment grip channel must match the session trajectory")


def run_session(
    trajectory: Trajectory,
    subject: SubjectSimulator,
    cfg: SafetyConfig,
    expert: ExpertModel | None = None,
    dt: float = DEFAULT_DT_S,
    max_adjustments: int = DEFAULT_MAX_ADJUSTMENTS,
    on_tick: Callable[[TickResult], None] | None = None,
) -> SessionResult:
    """Drive the engine to convergence (or adjustment exhaustion)."""
    engine = SessionEngine(trajectory, subject, cfg, dt=dt, max_adjustments=max_adjustments)
    if expert is None:
        expert = ScriptedExpert(v_max=0.8 * cfg.v_max, dt=dt)
    while not engine.done:
        result = engine.tick()
        if on_tick is not None:
            on_tick(result)
        if result.needs_adjustment and not engine.failed:
            proposal = expert.propose_adjustment(engine.trajectory, result.stop_index)
            engine.apply_adjustment(proposal)
    return engine.result()


# -- policy -------------------------------------------------------------------


@dataclass(frozen=True)
class Policy:
    """Per-axis penalized cubic spline over trajectory time.

    knots is the full clamped knot vector shared by all channels; coef
    maps channel name (x, y, z and optionally grip) to its coefficients.
    meta carries training provenance: self-fit rmse, iteration count,
    and the subject the policy was personalized for.
    """

    knots: tuple[float, ...]
    coef: dict[str, tuple[float, ...]]
    duration: float
    dt: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        missing = {"x", "y", "z"} - set(self.coef)
        if missing:
            raise ValueError(f"policy must have x, y, z channels, missing {sorted(missing)}")

    @property
    def has_grip(self) -> bool:
        return "grip" in self.coef

    def _spline(self, channel: str) -> BSpline:
        return BSpline(np.asarray(self.knots), np.asarray(self.coef[channel]), 3, extrapolate=False)

    def _clip(self, ts: np.ndarray) -> np.ndarray:
        # Clamp to the fitted span rather than extrapolate.
        return np.clip(np.asarray(ts, dtype=float), self.knots[0], self.knots[-1])

    def predict(self, ts: np.ndarray) -> np.ndarray:
        """Positions at the given times; times are clamped to the fitted span."""
        ts = self._clip(ts)
        return np.stack([self._spline(c)(ts) for c in ("x", "y", "z")], axis=-1)

    def grip_at(self, ts: np.ndarray) -> np.ndarray | None:
        if not self.has_grip:
            return None
        return np.clip(self._spline("grip")(self._clip(ts)), 0.0, 1.0)

    def sample(self, dt: float | None = None) -> Trajectory:
        grid = time_grid(self.knots[0], self.duration, dt or self.dt)
        return Trajectory.from_arrays(grid, self.predict(grid), self.grip_at(grid))

    def save(self, path: str | Path) -> None:
        obj = {
            "kind": "spline-policy",
            "dt": self.dt,
            "duration": self.duration,
            "knots": list(self.knots),
            "coef": {k: list(v) for k, v in sorted(self.coef.items())},
            "meta": self.meta,
        }
        Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")

    @staticmethod
    def load(path: str | Path) -> Policy:
        obj = json.loads(Path(path).read_text())
        return Policy(
            knots=tuple(obj["knots"]),
            coef={k: tuple(v) for k, v in obj["coef"].items()},
            duration=float(obj["duration"]),
            dt=float(obj["dt"]),
            meta=obj.get("meta", {}),
        )


def _second_difference(n: int) -> np.ndarray:
    d = np.zeros((n - 2, n))
    for i in range(n - 2):
        d[i, i : i + 3] = (1.0, -2.0, 1.0)
    return d


def train_policy(
    dataset: DemoDataset,
    dt: float = DEFAULT_DT_S,
    smoothing: float = 1e-6,
    final_pass_weight: float = FINAL_PASS_WEIGHT,
    subject_id: str | None = None,
) -> Policy:
    """Fit the policy splines to the acceptable states.

    The latest pass is up-weighted (4:1 by default) so the personalized
    trajectory dominates over earlier, partially adjusted passes. Sample
    weights are normalized to sum to one, which makes the fit invariant
    to duplicating the dataset, and samples sharing a time stamp are
    merged by weighted mean so repetitions cannot unbalance the system.
    """
    rows = dataset.acceptable()
    if len(rows) < 4:
        raise ValueError(f"need at least 4 acceptable states to fit a policy, got {len(rows)}")
    last_iter = max(r.iteration for r in rows)
    has_grip = rows[0].grip is not None

    weights: dict[float, float] = {}
    sums: dict[float, np.ndarray] = {}
    width = 4 if has_grip else 3
    for r in rows:
        w = final_pass_weight if r.iteration == last_iter else 1.0
        values = np.array([*r.pos, r.grip] if has_grip else [*r.pos])
        weights[r.t] = weights.get(r.t, 0.0) + w
        sums[r.t] = sums.get(r.t, np.zeros(width)) + w * values

    taus = np.array(sorted(weights))
    w = np.array([weights[t] for t in taus])
    w = w / w.sum()
    y = np.stack([sums[t] / weights[t] for t in taus])

    duration = float(taus[-1])
    if duration <= 0:
        raise ValueError("acceptable states must span a positive time range")
    grid = time_grid(taus[0], duration, dt)
    knots = np.concatenate([[grid[0]] * 4, grid[1:-1], [grid[-1]] * 4])
    basis = BSpline.design_matrix(taus, knots, 3).toarray()
    n_coef = basis.shape[1]
    penalty = _second_difference(n_coef)
    bw = basis * w[:, None]
    lhs = basis.T @ bw
    lam = smoothing * np.trace(lhs) / n_coef
    lhs = lhs + lam * (penalty.T @ penalty)
    coef = np.linalg.solve(lhs, bw.T @ y)

    channels = ("x", "y", "z", "grip") if has_grip else ("x", "y", "z")
    policy = Policy(
        knots=tuple(float(k) for k in knots),
        coef={c: tuple(float(v) for v in coef[:, i]) for i, c in enumerate(channels)},
        duration=duration,
        dt=dt,
        meta={},
    )
    final_rows = [r for r in rows if r.iteration == last_iter]
    fit_ts = np.array([r.t for r in final_rows])
    fit_pos = np.array([r.pos for r in final_rows])
    residual = policy.predict(fit_ts) - fit_pos
    training_rmse = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    policy.meta.update(
        {
            "training_rmse_m": training_rmse,
            "iterations": len(dataset.iterations),
            "subject_id": subject_id,
        }
    )
    return policy


def evaluate_policy(policy: Policy, reference: Trajectory, band_radius: float = 0.02) -> dict[str, float]:
    """Fidelity of the policy against a reference trajectory."""
    ref = resample(reference, policy.dt)
    predicted = Trajectory.from_arrays(ref.times(), policy.predict(ref.times()))
    bare_ref = Trajectory.from_arrays(ref.times(), ref.positions())
    return {
        "rmse_m": rmse(predicted, bare_ref),
        "band_fraction": band_fraction(predicted, bare_ref, band_radius),
        "duration_s": policy.duration,
        "samples": float(len(ref)),
    }
