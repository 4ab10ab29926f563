// Wire types mirroring the service's JSON documents.

export type Vec3Tuple = [number, number, number];

export interface SceneObjectDoc {
  name: string;
  role: "obstacle" | "target-surface" | "robot" | "marker";
  center: Vec3Tuple;
  extents: Vec3Tuple;
}

export interface SceneDoc {
  objects: SceneObjectDoc[];
  reachability_sphere: { center: Vec3Tuple; radius: number };
  base_pose: { position: Vec3Tuple; yaw: number };
}

export interface WaypointDoc {
  name: string;
  position: Vec3Tuple;
  provenance: "reference" | "llm" | "human-edit";
}

export interface TrajectoryDoc {
  waypoints: WaypointDoc[];
  start_target: Vec3Tuple;
  end_target: Vec3Tuple;
}

export interface WaypointCheckDoc {
  name: string;
  in_sphere: boolean;
  collides_with: string[];
  reachable_ik: boolean;
}

export interface ReportDoc {
  waypoints: WaypointCheckDoc[];
  arc_ok: boolean;
  endpoints_ok: boolean;
  overall: boolean;
}

export type SessionStatus =
  | "drafting"
  | "awaiting-approval"
  | "approved"
  | "executing"
  | "done"
  | "failed";

export interface HistoryEventDoc {
  event: string;
  timestamp: number;
  detail: Record<string, unknown>;
}

export interface SessionDoc {
  id: string;
  scene_id: string;
  instruction: string;
  status: SessionStatus;
  candidate: TrajectoryDoc | null;
  report: ReportDoc | null;
  history: HistoryEventDoc[];
}

export interface JointDoc {
  name: string;
  dh_a: number;
  dh_d: number;
  dh_alpha: number;
  limit_lo: number;
  limit_hi: number;
}

export interface ClipTrackDoc {
  joint_path: string;
  keys: [number, number][];
}

export interface ClipDoc {
  name: string;
  duration: number;
  direction_signs: number[];
  tracks: ClipTrackDoc[];
}

export type StreamEvent =
  | { type: "status"; status: SessionStatus }
  | {
      type: "state";
      t: number;
      q: number[];
      end_effector: Vec3Tuple;
      executing: boolean;
      halted_reason: string | null;
    };
