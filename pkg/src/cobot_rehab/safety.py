"""Staged safety monitor: limits, emergency stop, admittance scaling, interval timer.

The monitor is a state machine advanced once per control tick. Force and
workspace are evaluated before any queued command so an emergency can
never be masked by a Resume arriving on the same tick. The 45 N
emergency-stop threshold is inclusive and the EmergencyStop mode is
absorbing until an explicit Reset.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from .subject import ForceReading
from .trajectory import Box

F_SAFE_DEFAULT_N = 45.0
INTERVAL_DEFAULT_S = 300.0
REST_DEFAULT_S = 20.0


class Mode(Enum):
    IDLE = "idle"
    RUNNING = "running"
    SOFT_HOLD = "soft_hold"
    RESTING = "resting"
    EMERGENCY_STOP = "emergency_stop"


class Command(Enum):
    START = "start"
    STOP = "stop"
    RESUME = "resume"
    RESET = "reset"


class CommandRejected(Exception):
    """Raised for commands the current mode refuses (anything but Reset in EmergencyStop)."""


@dataclass(frozen=True)
class SafetyConfig:
    """Per-stage limits plus the fixed emergency threshold and interval schedule."""

    stage: int
    workspace: Box
    v_max: float
    a_max: float
    f_safe: float = F_SAFE_DEFAULT_N
    f_soft: float = 30.0
    interval_s: float = INTERVAL_DEFAULT_S
    rest_s: float = REST_DEFAULT_S

    def __post_init__(self) -> None:
        if self.stage not in (1, 2, 3):
            raise ValueError(f"stage must be 1, 2, or 3, got {self.stage}")
        if not self.v_max > 0:
            raise ValueError(f"v_max must be > 0, got {self.v_max}")
        if not self.a_max > 0:
            raise ValueError(f"a_max must be > 0, got {self.a_max}")
        if not 0 < self.f_soft < self.f_safe:
            raise ValueError(f"need 0 < f_soft < f_safe, got f_soft={self.f_soft}, f_safe={self.f_safe}")
        if not self.interval_s > 0:
            raise ValueError(f"interval_s must be > 0, got {self.interval_s}")
        if self.rest_s < 0:
            raise ValueError(f"rest_s must be >= 0, got {self.rest_s}")


@dataclass(frozen=True)
class SafetyState:
    """Monitor mode, the time that mode was entered, and the admittance speed scale."""

    mode: Mode = Mode.IDLE
    since: float = 0.0
    speed_scale: float = 0.0


@dataclass(frozen=True)
class SafetyTransition:
    """One mode change, logged as a JSON line by the monitor."""

    t: float
    from_mode: Mode
    to_mode: Mode
    cause: str  # force | workspace | command | timer
    force_n: float

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "from": self.from_mode.value,
                "to": self.to_mode.value,
                "cause": self.cause,
                "force_n": self.force_n,
            }
        )


def _speed_scale(force_n: float, cfg: SafetyConfig) -> float:
    # Linear admittance ramp: full speed at zero force, zero speed at f_soft.
    return min(1.0, max(0.0, 1.0 - force_n / cfg.f_soft))


def step(
    state: SafetyState,
    force: ForceReading,
    cmd: Command | None,
    pos: Sequence[float],
    t: float,
    cfg: SafetyConfig,
) -> tuple[SafetyState, SafetyTransition | None]:
    """Advance the monitor one tick.

    Priority order: emergency conditions (force >= f_safe, inclusive, or
    workspace breach), then Stop, then the interval timer, then Resume;
    otherwise the mode is unchanged. Returns the new state and the
    transition record when the mode changed.
    """
    force_n = force.magnitude
    mode = state.mode

    def transition(to: Mode, cause: str) -> tuple[SafetyState, SafetyTransition]:
        scale = _speed_scale(force_n, cfg) if to is Mode.RUNNING else 0.0
        return (
            SafetyState(mode=to, since=t, speed_scale=scale),
            SafetyTransition(t, mode, to, cause, force_n),
        )

    # 1. Emergency conditions are evaluated before any command.
    if mode is not Mode.EMERGENCY_STOP:
        if force_n >= cfg.f_safe:
            return transition(Mode.EMERGENCY_STOP, "force")
        if not cfg.workspace.contains(pos):
            return transition(Mode.EMERGENCY_STOP, "workspace")
    else:
        if cmd is Command.RESET:
            return transition(Mode.IDLE, "command")
        if cmd is not None:
            raise CommandRejected(f"only Reset is accepted in EmergencyStop, got {cmd.value}")
        return state, None

    # 2. Subject/UI soft stop.
    if cmd is Command.STOP:
        if mode is Mode.RUNNING:
            return transition(Mode.SOFT_HOLD, "command")
        cmd = None  # already halted (SoftHold/Resting/Idle): accepted, no-op

    # 3. Interval schedule.
    if mode is Mode.RUNNING and t - state.since >= cfg.interval_s:
        return transition(Mode.RESTING, "timer")
    if mode is Mode.RESTING and t - state.since >= cfg.rest_s:
        return transition(Mode.RUNNING, "timer")

    # 4. Remaining commands.
    if cmd is Command.RESET:
        if mode is Mode.IDLE:
            return state, None
        return transition(Mode.IDLE, "command")
    if cmd is Command.START:
        if mode is not Mode.IDLE:
            raise CommandRejected(f"Start is only accepted in Idle, got mode {mode.value}")
        return transition(Mode.RUNNING, "command")
    if cmd is Command.RESUME:
        if mode is Mode.SOFT_HOLD:
            return transition(Mode.RUNNING, "command")
        return state, None  # accepted, no-op outside SoftHold

    # 5. No transition: refresh the admittance scale in Running.
    if mode is Mode.RUNNING:
        return replace(state, speed_scale=_speed_scale(force_n, cfg)), None
    return state, None


def stage_defaults(stage: int) -> SafetyConfig:
    """Default limit family for the three rehabilitation stages.

    The numbers are configuration defaults; only their monotone ordering
    (stage 1 tightest, stage 3 widest) and the fixed 45 N emergency
    threshold are contractual.
    """
    presets = {
        1: (0.3, 0.05, 0.1),
        2: (0.5, 0.12, 0.25),
        3: (0.7, 0.20, 0.4),
    }
    if stage not in presets:
        raise ValueError(f"stage must be 1, 2, or 3, got {stage}")
    side, v_max, a_max = presets[stage]
    return SafetyConfig(stage=stage, workspace=Box.cube(side), v_max=v_max, a_max=a_max)


class SafetyMonitor:
    """Wraps the pure `step` with state ownership and a transition log."""

    def __init__(self, cfg: SafetyConfig, state: SafetyState | None = None):
        self.cfg = cfg
        self.state = state if state is not None else SafetyState()
        self.transitions: list[SafetyTransition] = []

    def tick(
        self,
        force: ForceReading,
        pos: Sequence[float],
        t: float,
        cmd: Command | None = None,
    ) -> SafetyState:
        new_state, transition = step(self.state, force, cmd, pos, t, self.cfg)
        self.state = new_state
        if transition is not None:
            self.transitions.append(transition)
        return new_state

    @property
    def mode(self) -> Mode:
        return self.state.mode

    @property
    def speed_scale(self) -> float:
        return self.state.speed_scale
