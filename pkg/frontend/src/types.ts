/** Client-side mirrors of the session-service v1 payloads. */

export type Vec3 = [number, number, number];

export type Mode = "idle" | "running" | "soft_hold" | "resting" | "emergency_stop";

/** Snapshot lifecycle state: a monitor mode, or a service-level phase. */
export type SessionState = Mode | "starting" | "holding" | "completed" | "aborted";

export interface TelemetryFrame {
  t: number;
  pos: Vec3;
  grip: number | null;
  force_n: number;
  mode: Mode;
  speed_scale: number;
}

export interface Waypoint {
  t: number;
  x: number;
  y: number;
  z: number;
  grip?: number;
}

export interface TrajectoryPayload {
  frame: string;
  dt_hint?: number | null;
  waypoints: Waypoint[];
}

export interface Violation {
  kind: string;
  index: number;
  magnitude: number;
}

export interface PhaseSpan {
  name: string;
  t_start: number;
  t_end: number;
}

export interface WorkspaceBox {
  lo: Vec3;
  hi: Vec3;
}

export interface SessionSnapshot {
  session_id: string;
  subject_id: string;
  task: string;
  task_title: string;
  stage: number;
  seed: number;
  dt: number;
  n_intervals: number;
  interval_s: number;
  rest_s: number;
  task_phases: PhaseSpan[];
  workspace: WorkspaceBox;
  v_max: number;
  f_safe: number;

  state: SessionState;
  mode: Mode;
  t: number;
  tick: number;
  converged: boolean;
  failed: boolean;
  adjustments: number;
  iteration: number;
  running_ticks: number;
  budget_ticks: number;
  awaiting_adjustment: boolean;
  survey_count: number;
  survey: Record<string, number>;

  pos?: Vec3;
  grip?: number | null;
  force_n?: number;
  speed_scale?: number;

  // present while holding
  stop_index?: number;
  resume_index?: number;
  trajectory?: TrajectoryPayload;

  // present once terminal
  evaluation?: Record<string, number> | null;
  error?: string;

  staged_adjustment?: boolean;
}

export interface TransitionEvent {
  t: number;
  from: string;
  to: string;
  cause: string;
  force_n: number;
}

export interface FeedbackEvent {
  t: number;
  kind: "feedback";
  feedback: string;
  sample_index: number;
  source: string;
}

export interface AdjustmentEvent {
  t: number;
  kind: "adjustment";
  stop_index: number | null;
  resume_index: number;
  identity: boolean;
}

export interface SessionEndEvent {
  state: "completed" | "aborted";
  session_id?: string;
  error?: string;
}

export type StreamEvent =
  | { kind: "telemetry"; data: TelemetryFrame }
  | { kind: "transition"; data: TransitionEvent }
  | { kind: "feedback"; data: FeedbackEvent }
  | { kind: "adjustment"; data: AdjustmentEvent }
  | { kind: "session"; data: SessionEndEvent };
