"""HTTP control surface for live training sessions.

One session runs at a time on a background control-loop thread, paced in
wall-clock time (pace = dt by default; pace 0 free-runs for tests). The
API is the only way in: commands go through locked engine calls, state
comes out as an immutable snapshot dict swapped once per tick, and
telemetry fans out over server-sent events.

The adjustment workflow matches the physical setup: a stop (subject
force threshold or POST /v1/session/stop) holds the arm, the operator
stages an adjusted consequent trajectory with POST /v1/session/adjustment,
and POST /v1/session/resume applies it (or resumes unchanged).
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterator

import uvicorn
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .imitation import EmergencyStopAborted, Policy, SessionEngine, train_policy
from .safety import SafetyConfig
from .session import (
    MIN_POLICY_ROWS,
    SessionConfig,
    build_record,
    persist_session,
    session_id_for,
    subject_id_for,
)
from .subject import SubjectProfile, SubjectSimulator, profile_from_dict
from .tasks import TASK_IDS, get_task
from .trajectory import Trajectory, check_limits, trajectory_from_dict, trajectory_to_dict

SURVEY_MIN = 1
SURVEY_MAX = 10


class ApiError(Exception):
    """Error carrying the HTTP status and the wire-format {code, message} body."""

    def __init__(self, status: int, code: str, message: str, **extra: Any):
        super().__init__(message)
        self.status = status
        self.code = code
        self.extra = extra

    def body(self) -> dict:
        return {"code": self.code, "message": str(self), **self.extra}


class Broadcaster:
    """Fan-out of SSE frames to per-subscriber bounded queues (drop-oldest)."""

    def __init__(self, maxsize: int = 256):
        self._maxsize = maxsize
        self._subs: list[queue.Queue] = []
        self._lock = threading.Lock()

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=self._maxsize)
        with self._lock:
            self._subs.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subs:
                self._subs.remove(q)

    def publish(self, event: str, data: dict) -> None:
        frame = f"event: {event}\ndata: {json.dumps(data)}\n\n"
        with self._lock:
            subs = list(self._subs)
        for q in subs:
            try:
                q.put_nowait(frame)
            except queue.Full:
                try:
                    q.get_nowait()  # slowest consumer loses the oldest frame
                except queue.Empty:
                    pass
                try:
                    q.put_nowait(frame)
                except queue.Full:
                    pass


class LiveSession:
    """Owns one engine and its control-loop thread."""

    def __init__(
        self,
        cfg: SessionConfig,
        profile: SubjectProfile,
        data_dir: Path,
        broadcaster: Broadcaster,
        pace: float | None = None,
    ):
        self.cfg = cfg
        self.profile = profile
        self.data_dir = data_dir
        self.broadcaster = broadcaster
        self.pace = cfg.dt if pace is None else pace
        if self.pace < 0:
            raise ApiError(422, "invalid_pace", f"pace must be >= 0, got {self.pace}")

        self.safety: SafetyConfig = cfg.safety()
        self.task = get_task(cfg.task_id)
        self.session_id = session_id_for(cfg, profile)
        subject = SubjectSimulator(replace(profile, seed=cfg.seed))
        self.engine = SessionEngine(
            self.task.trajectory,
            subject,
            self.safety,
            dt=cfg.dt,
            max_adjustments=cfg.max_adjustments,
            stop_when_converged=False,
        )
        self.budget_ticks = round(cfg.n_intervals * self.safety.interval_s / cfg.dt)

        self._lock = threading.Lock()
        self._changed = threading.Condition(self._lock)
        self._staged: Trajectory | None = None
        self._surveys: list[dict] = []
        self._published_transitions = 0
        self._published_events = 0
        self._hold_trajectory: dict | None = None
        self._terminal: str | None = None  # "completed" | "aborted"
        self._error: str | None = None
        self._started_at = _utc_now()
        self._static = {
            "session_id": self.session_id,
            "subject_id": cfg.subject_id or subject_id_for(profile),
            "task": cfg.task_id,
            "task_title": self.task.title,
            "stage": cfg.stage,
            "seed": cfg.seed,
            "dt": cfg.dt,
            "n_intervals": cfg.n_intervals,
            "interval_s": self.safety.interval_s,
            "rest_s": self.safety.rest_s,
            "task_phases": [
                {"name": s.name, "t_start": s.t_start, "t_end": s.t_end}
                for s in self.task.phase_spans()
            ],
            "workspace": {"lo": list(self.safety.workspace.lo), "hi": list(self.safety.workspace.hi)},
            "v_max": self.safety.v_max,
            "f_safe": self.safety.f_safe,
        }
        self.snapshot: dict = {**self._static, "state": "starting", "mode": "idle"}
        self._evaluation: dict | None = None
        self._thread = threading.Thread(target=self._run, name=f"session-{self.session_id}", daemon=True)

    # -- lifecycle --

    def start(self) -> None:
        self._thread.start()

    @property
    def active(self) -> bool:
        return self._terminal is None

    def _run(self) -> None:
        try:
            while True:
                loop_started = time.monotonic()
                with self._lock:
                    if self.engine.running_ticks >= self.budget_ticks or self.engine.failed:
                        self._finalize_locked()
                        return
                    result = self.engine.tick()
                    self._refresh_snapshot_locked(result)
                    self._changed.notify_all()
                self.broadcaster.publish("telemetry", result.telemetry())
                self._publish_transitions()
                self._publish_events()
                if self.pace > 0:
                    elapsed = time.monotonic() - loop_started
                    if elapsed < self.pace:
                        time.sleep(self.pace - elapsed)
        except EmergencyStopAborted as exc:
            with self._lock:
                self._terminal = "aborted"
                self._error = str(exc)
                self._persist_locked(aborted=True)
                self._refresh_snapshot_locked(None)
                self._changed.notify_all()
            self._publish_transitions()
            self._publish_events()
            self.broadcaster.publish("session", {"state": "aborted", "error": str(exc)})
        except Exception as exc:  # pragma: no cover - defensive: surface, don't vanish
            with self._lock:
                self._terminal = "aborted"
                self._error = f"internal error: {exc}"
                self._refresh_snapshot_locked(None)
                self._changed.notify_all()

    def _finalize_locked(self) -> None:
        self._persist_locked(aborted=False)
        self._terminal = "completed"
        self._refresh_snapshot_locked(None)
        self._changed.notify_all()
        self.broadcaster.publish("session", {"state": "completed", "session_id": self.session_id})

    def _persist_locked(self, aborted: bool) -> None:
        outcome = self.engine.result()
        policy: Policy | None = None
        if not aborted and len(outcome.dataset.acceptable()) >= MIN_POLICY_ROWS:
            policy = train_policy(
                outcome.dataset, dt=self.cfg.dt, subject_id=self._static["subject_id"]
            )
        record = build_record(
            self.cfg,
            self.profile,
            self.safety,
            self._started_at,
            outcome,
            self.engine,
            policy,
            aborted=aborted,
            survey=self._survey_summary(),
        )
        self._evaluation = record.evaluation
        target = persist_session(self.data_dir, record, outcome, policy)
        if self._surveys:
            with (target / "survey.jsonl").open("w") as fh:
                for entry in self._surveys:
                    fh.write(json.dumps(entry))
                    fh.write("\n")

    def _publish_transitions(self) -> None:
        transitions = self.engine.monitor.transitions
        while self._published_transitions < len(transitions):
            tr = transitions[self._published_transitions]
            self._published_transitions += 1
            self.broadcaster.publish("transition", json.loads(tr.to_json_line()))

    def _publish_events(self) -> None:
        events = self.engine.events
        while self._published_events < len(events):
            ev = events[self._published_events]
            self._published_events += 1
            self.broadcaster.publish(ev["kind"], ev)

    # -- snapshot --

    def _refresh_snapshot_locked(self, result) -> None:
        engine = self.engine
        holding = engine.awaiting_adjustment
        if holding and self._hold_trajectory is None:
            self._hold_trajectory = trajectory_to_dict(engine.trajectory, dt_hint=self.cfg.dt)
        if not holding:
            self._hold_trajectory = None
        if self._terminal is not None:
            state = self._terminal
        elif holding:
            state = "holding"
        else:
            state = engine.monitor.mode.value
        snap: dict = {
            **self._static,
            "state": state,
            "mode": engine.monitor.mode.value,
            "t": engine.t,
            "tick": engine.ticks,
            "converged": engine.converged,
            "failed": engine.failed,
            "adjustments": engine.adjustments,
            "iteration": len(engine.iterations),
            "running_ticks": engine.running_ticks,
            "budget_ticks": self.budget_ticks,
            "awaiting_adjustment": holding,
            "survey_count": len(self._surveys),
            "survey": self._survey_summary(),
        }
        if result is not None:
            snap.update(
                {
                    "pos": list(result.pos),
                    "grip": result.grip,
                    "force_n": result.force_n,
                    "speed_scale": result.speed_scale,
                }
            )
        elif "pos" in self.snapshot:
            for key in ("pos", "grip", "force_n", "speed_scale"):
                snap[key] = self.snapshot.get(key)
        if holding:
            snap["stop_index"] = engine.stop_index
            snap["resume_index"] = engine.resume_index
            snap["trajectory"] = self._hold_trajectory
        if self._evaluation is not None:
            snap["evaluation"] = self._evaluation
        if self._error is not None:
            snap["error"] = self._error
        self.snapshot = snap

    def _survey_summary(self) -> dict[str, int]:
        latest: dict[str, int] = {}
        for entry in self._surveys:  # append-only: the latest answer per question wins
            latest[entry["question_id"]] = entry["value"]
        return latest

    # -- commands (handler threads; the engine's stop/adjust/resume calls are
    # synchronous, so responses already reflect the new hold state) --

    def stop(self) -> dict:
        with self._lock:
            if self._terminal is not None:
                raise ApiError(409, "not_running", f"session already {self._terminal}")
            if self.engine.awaiting_adjustment:
                return self.snapshot
            self.engine.request_stop()
            self._refresh_snapshot_locked(None)
            return self.snapshot

    def stage_adjustment(self, payload: dict) -> dict:
        try:
            proposal = trajectory_from_dict(payload)
        except (ValueError, TypeError, KeyError) as exc:
            raise ApiError(422, "invalid_trajectory", f"malformed trajectory: {exc}")
        with self._lock:
            if self._terminal is not None:
                raise ApiError(409, "not_running", f"session already {self._terminal}")
            if not self.engine.awaiting_adjustment:
                raise ApiError(409, "not_holding", "no stop is awaiting an adjustment")
            violations = check_limits(proposal, self.safety)
            if violations:
                raise ApiError(
                    422,
                    "limit_violation",
                    "adjustment violates safety limits",
                    violations=[
                        {"kind": v.kind.value, "index": v.index, "magnitude": v.magnitude}
                        for v in violations
                    ],
                )
            resume_pos = self.engine.trajectory.waypoints[self.engine.resume_index].pos
            first = proposal.waypoints[0].pos
            if max(abs(a - b) for a, b in zip(first, resume_pos)) > 1e-6:
                raise ApiError(
                    422,
                    "resume_mismatch",
                    "adjustment must start at the resume position",
                    expected=list(resume_pos),
                    got=list(first),
                )
            if proposal.has_grip != self.engine.trajectory.has_grip:
                raise ApiError(422, "grip_mismatch", "adjustment grip channel must match the task")
            self._staged = proposal
            self._refresh_snapshot_locked(None)
            snap = dict(self.snapshot)
            snap["staged_adjustment"] = True
            return snap

    def resume(self) -> dict:
        with self._lock:
            if self._terminal is not None:
                raise ApiError(409, "not_running", f"session already {self._terminal}")
            if not self.engine.awaiting_adjustment:
                raise ApiError(409, "not_holding", "no stop is awaiting an adjustment")
            try:
                self.engine.apply_adjustment(self._staged)
            except ValueError as exc:
                raise ApiError(422, "invalid_adjustment", str(exc))
            finally:
                self._staged = None
            self._refresh_snapshot_locked(None)
            return self.snapshot

    def add_survey(self, payload: dict) -> dict:
        question_id = payload.get("question_id")
        value = payload.get("value")
        if not isinstance(question_id, str) or not question_id:
            raise ApiError(422, "invalid_survey", "question_id must be a non-empty string")
        if not isinstance(value, int) or isinstance(value, bool) or not SURVEY_MIN <= value <= SURVEY_MAX:
            raise ApiError(
                422,
                "out_of_range",
                f"value must be an integer in [{SURVEY_MIN}, {SURVEY_MAX}], got {value!r}",
            )
        entry = {"question_id": question_id, "value": value}
        comment = payload.get("comment")
        if comment is not None:
            if not isinstance(comment, str):
                raise ApiError(422, "invalid_survey", "comment must be a string")
            entry["comment"] = comment
        with self._lock:
            entry["t"] = self.engine.t
            # Append-only log: a repeated question supersedes the earlier
            # answer by reference; the prior entry is never rewritten.
            entry["supersedes"] = next(
                (
                    i
                    for i in range(len(self._surveys) - 1, -1, -1)
                    if self._surveys[i]["question_id"] == question_id
                ),
                None,
            )
            self._surveys.append(entry)
            self._refresh_snapshot_locked(None)
            return self.snapshot


class SessionManager:
    def __init__(self, data_dir: Path, default_pace: float | None = None):
        self.data_dir = Path(data_dir)
        self.default_pace = default_pace
        self.broadcaster = Broadcaster()
        self._lock = threading.Lock()
        self._live: LiveSession | None = None

    def start_session(self, payload: dict) -> dict:
        cfg, profile, pace = self._parse_start(payload)
        with self._lock:
            if self._live is not None and self._live.active:
                raise ApiError(409, "session_active", "a session is already running")
            live = LiveSession(cfg, profile, self.data_dir, self.broadcaster, pace=pace)
            self._live = live
            live.start()
            return live.snapshot

    def _parse_start(self, payload: dict) -> tuple[SessionConfig, SubjectProfile, float | None]:
        task_id = payload.get("task")
        if task_id not in TASK_IDS:
            raise ApiError(422, "unknown_task", f"task must be one of {list(TASK_IDS)}, got {task_id!r}")
        profile_data = payload.get("profile")
        if not isinstance(profile_data, dict):
            raise ApiError(422, "invalid_profile", "profile must be a subject-profile object")
        try:
            profile = profile_from_dict(profile_data)
        except (ValueError, TypeError) as exc:
            raise ApiError(422, "invalid_profile", str(exc))
        subject_id = payload.get("subject_id")
        if subject_id is not None and not isinstance(subject_id, str):
            raise ApiError(422, "invalid_config", "subject_id must be a string")
        try:
            cfg = SessionConfig(
                task_id=task_id,
                stage=int(payload.get("stage", 1)),
                seed=int(payload.get("seed", profile.seed)),
                dt=float(payload.get("dt", 0.05)),
                n_intervals=int(payload.get("n_intervals", 1)),
                interval_s=_opt_float(payload, "interval_s"),
                rest_s=_opt_float(payload, "rest_s"),
                max_adjustments=int(payload.get("max_adjustments", 20)),
                subject_id=subject_id,
            )
        except ValueError as exc:
            raise ApiError(422, "invalid_config", str(exc))
        pace = self.default_pace
        if "pace" in payload:
            pace = float(payload["pace"])
        return cfg, profile, pace

    def live(self) -> LiveSession:
        with self._lock:
            if self._live is None:
                raise ApiError(404, "no_session", "no session has been started")
            return self._live

    def snapshot(self) -> dict:
        return self.live().snapshot


def _opt_float(payload: dict, key: str) -> float | None:
    value = payload.get(key)
    return None if value is None else float(value)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def create_app(data_dir: str | Path, default_pace: float | None = None) -> FastAPI:
    manager = SessionManager(Path(data_dir), default_pace=default_pace)
    app = FastAPI(title="cobot-rehab", docs_url=None, redoc_url=None)
    app.state.manager = manager
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, exc: ApiError):
        return JSONResponse(exc.body(), status_code=exc.status)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse({"code": "validation_error", "message": str(exc)}, status_code=422)

    @app.get("/v1/session")
    async def get_session():
        return manager.snapshot()

    @app.post("/v1/session", status_code=201)
    async def post_session(payload: dict = Body(...)):
        return manager.start_session(payload)

    @app.post("/v1/session/stop")
    async def post_stop():
        return manager.live().stop()

    @app.post("/v1/session/resume")
    async def post_resume():
        return manager.live().resume()

    @app.post("/v1/session/adjustment")
    async def post_adjustment(payload: dict = Body(...)):
        return manager.live().stage_adjustment(payload)

    @app.post("/v1/session/survey")
    async def post_survey(payload: dict = Body(...)):
        return manager.live().add_survey(payload)

    @app.get("/v1/stream")
    def stream():
        q = manager.broadcaster.subscribe()

        def frames() -> Iterator[str]:
            try:
                yield ": connected\n\n"
                while True:
                    try:
                        yield q.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
            finally:
                manager.broadcaster.unsubscribe(q)

        return StreamingResponse(
            frames(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    return app


def serve(bind: str, data_dir: str | Path, default_pace: float | None = None) -> None:
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"bind must look like HOST:PORT, got {bind!r}")
    app = create_app(data_dir, default_pace=default_pace)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
