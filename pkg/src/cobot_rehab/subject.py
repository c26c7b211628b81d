"""Parametric stand-in for the training subject.

Models the subject as an axis-aligned range-of-motion (ROM) ellipsoid
with a comfort sub-ellipsoid inside it. Guiding the end-effector beyond
the comfort boundary produces a linear-spring resistance force directed
back toward the ROM center; when that force reaches the subject's stop
threshold the simulated subject presses stop, which is the feedback
signal the imitation loop adapts to.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .trajectory import Vec3, _as_vec3


@dataclass(frozen=True)
class SubjectProfile:
    """Static description of one subject: ROM geometry, resistance, and MVIC references.

    Fields:
        rom_center:     center of the ROM ellipsoid (m).
        rom_radii:      ellipsoid semi-axes (m), all > 0.
        stiffness_k:    resistance spring constant beyond the comfort boundary (N/m).
        comfort_margin: comfort ellipsoid = ROM scaled by this fraction, in (0, 1].
        stop_threshold: resistance magnitude at which the subject presses stop (N).
        mvic:           per-muscle maximum voluntary contraction reference (uV), all > 0.
        noise_sigma:    optional per-tick Gaussian force noise (N), 0 disables.
        seed:           RNG seed for the force noise.
    """

    rom_center: Vec3
    rom_radii: Vec3
    stiffness_k: float
    comfort_margin: float
    stop_threshold: float
    mvic: dict[str, float] = field(default_factory=dict)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rom_center", _as_vec3(self.rom_center, "rom_center"))
        object.__setattr__(self, "rom_radii", _as_vec3(self.rom_radii, "rom_radii"))
        if not all(r > 0 for r in self.rom_radii):
            raise ValueError(f"rom_radii must be > 0 componentwise, got {self.rom_radii}")
        if self.stiffness_k < 0:
            raise ValueError(f"stiffness_k must be >= 0, got {self.stiffness_k}")
        if not 0 < self.comfort_margin <= 1:
            raise ValueError(f"comfort_margin must be in (0, 1], got {self.comfort_margin}")
        if not self.stop_threshold > 0:
            raise ValueError(f"stop_threshold must be > 0, got {self.stop_threshold}")
        if any(v <= 0 for v in self.mvic.values()):
            raise ValueError("all mvic values must be > 0")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass(frozen=True)
class ForceReading:
    """F/T sensor sample. Torque is carried for wire-format stability but fixed at zero."""

    f: Vec3
    torque: Vec3 = (0.0, 0.0, 0.0)
    t: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", _as_vec3(self.f, "f"))
        object.__setattr__(self, "torque", _as_vec3(self.torque, "torque"))

    @property
    def magnitude(self) -> float:
        return math.sqrt(sum(c * c for c in self.f))


class FeedbackKind(Enum):
    STOP = "stop"
    RESUME = "resume"


@dataclass(frozen=True)
class FeedbackEvent:
    t: float
    sample_index: int
    kind: FeedbackKind


def normalized_depth(pos: Sequence[float], profile: SubjectProfile) -> float:
    """Ellipsoid coordinate of `pos`: 0 at the ROM center, 1 on the ROM surface.

    Values <= comfort_margin are comfortable, values in
    (comfort_margin, 1] are straining, values > 1 are beyond the ROM.
    """
    return math.sqrt(
        sum(((p - c) / r) ** 2 for p, c, r in zip(pos, profile.rom_center, profile.rom_radii))
    )


def resistance_force(pos: Sequence[float], profile: SubjectProfile, t: float = 0.0) -> ForceReading:
    """Linear-spring resistance beyond the comfort boundary, directed back toward the ROM center.

    The spring acts on the metric penetration: the Euclidean distance from
    `pos` to the comfort-ellipsoid surface along the ray from the center.
    Inside the comfort region the force is exactly zero.
    """
    d = normalized_depth(pos, profile)
    if d <= profile.comfort_margin:
        return ForceReading((0.0, 0.0, 0.0), t=t)
    delta = tuple(p - c for p, c in zip(pos, profile.rom_center))
    r = math.sqrt(sum(x * x for x in delta))
    # Comfort surface along the center ray sits at fraction comfort_margin/d of r.
    penetration = r * (1.0 - profile.comfort_margin / d)
    magnitude = profile.stiffness_k * penetration
    direction = tuple(-x / r for x in delta)
    return ForceReading(tuple(magnitude * u for u in direction), t=t)  # type: ignore[arg-type]


class SubjectSimulator:
    """Stateful subject advanced once per control tick by a single caller.

    Emits at most one Stop between any Stop/Resume pair. A Resume is
    emitted autonomously once the subject has been comfortable for
    `settle_s` continuous seconds after a Stop; `release_stop` covers the
    orchestrated path where the expert resumes training after adjusting.
    """

    def __init__(self, profile: SubjectProfile, settle_s: float = 1.0):
        self.profile = profile
        self.settle_s = settle_s
        self._rng = np.random.default_rng(profile.seed)
        self._stop_pending = False
        self._comfort_since: float | None = None
        self._last_t: float | None = None

    def force_at(self, pos: Sequence[float], t: float) -> ForceReading:
        """Resistance force at `pos`, plus seeded Gaussian noise when configured."""
        reading = resistance_force(pos, self.profile, t)
        if self.profile.noise_sigma > 0:
            noise = self._rng.normal(0.0, self.profile.noise_sigma, size=3)
            f = tuple(c + n for c, n in zip(reading.f, noise))
            return ForceReading(f, t=t)  # type: ignore[arg-type]
        return reading

    def feedback_step(
        self, pos: Sequence[float], force: ForceReading, t: float, sample_index: int = 0
    ) -> FeedbackEvent | None:
        """Advance the stop/resume state machine one tick; ticks must be in time order."""
        if self._last_t is not None and t < self._last_t:
            raise ValueError(f"feedback_step called out of order: {t} after {self._last_t}")
        self._last_t = t

        if not self._stop_pending:
            if force.magnitude >= self.profile.stop_threshold:
                self._stop_pending = True
                self._comfort_since = None
                return FeedbackEvent(t, sample_index, FeedbackKind.STOP)
            return None

        # Stop pending: wait for a continuous comfortable settle period.
        if normalized_depth(pos, self.profile) <= self.profile.comfort_margin:
            if self._comfort_since is None:
                self._comfort_since = t
            elif t - self._comfort_since >= self.settle_s:
                self._stop_pending = False
                self._comfort_since = None
                return FeedbackEvent(t, sample_index, FeedbackKind.RESUME)
        else:
            self._comfort_since = None
        return None

    def release_stop(self) -> None:
        """Clear a pending stop: the subject releases the button as training resumes."""
        self._stop_pending = False
        self._comfort_since = None

    @property
    def stop_pending(self) -> bool:
        return self._stop_pending


# -- profile file format ------------------------------------------------------


def profile_to_dict(profile: SubjectProfile) -> dict:
    return {
        "rom_center": list(profile.rom_center),
        "rom_radii": list(profile.rom_radii),
        "stiffness_k": profile.stiffness_k,
        "comfort_margin": profile.comfort_margin,
        "stop_threshold": profile.stop_threshold,
        "mvic": dict(profile.mvic),
        "noise_sigma": profile.noise_sigma,
        "seed": profile.seed,
    }


def profile_from_dict(data: dict) -> SubjectProfile:
    try:
        return SubjectProfile(
            rom_center=tuple(data["rom_center"]),
            rom_radii=tuple(data["rom_radii"]),
            stiffness_k=float(data["stiffness_k"]),
            comfort_margin=float(data["comfort_margin"]),
            stop_threshold=float(data["stop_threshold"]),
            mvic={str(k): float(v) for k, v in data.get("mvic", {}).items()},
            noise_sigma=float(data.get("noise_sigma", 0.0)),
            seed=int(data.get("seed", 0)),
        )
    except KeyError as exc:
        raise ValueError(f"subject profile missing required field {exc}") from None


def load_profile(path: str | Path) -> SubjectProfile:
    return profile_from_dict(json.loads(Path(path).read_text()))


def save_profile(profile: SubjectProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile_to_dict(profile), indent=2) + "\n")
