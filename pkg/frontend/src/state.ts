// View state: a passive mirror of what the server has confirmed.
//
// The store never invents a status: session status comes only from session
// documents returned by the server or status events from its stream.
// Mutations go through the API and the authoritative response replaces the
// local snapshot; a failed mutation leaves the snapshot untouched.

import type { ArmloopClient } from "./api.js";
import type {
  SceneDoc,
  SessionDoc,
  SessionStatus,
  StreamEvent,
  Vec3Tuple,
} from "./types.js";

export interface RobotPose {
  t: number;
  q: number[];
  endEffector: Vec3Tuple;
}

export interface ViewState {
  sceneId: string | null;
  scene: SceneDoc | null;
  session: SessionDoc | null;
  status: SessionStatus | null;
  robot: RobotPose | null;
  banner: string | null;
  selectedWaypoint: number | null;
}

type Listener = (state: ViewState) => void;

export class SessionStore {
  private state: ViewState = {
    sceneId: null,
    scene: null,
    session: null,
    status: null,
    robot: null,
    banner: null,
    selectedWaypoint: null,
  };
  private listeners: Listener[] = [];
  private streamCancel: (() => void) | null = null;

  constructor(private client: ArmloopClient) {}

  get view(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private patch(partial: Partial<ViewState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Server-confirmed session document replaces the snapshot wholesale. */
  private acceptSession(session: SessionDoc): void {
    this.patch({ session, status: session.status, banner: null });
  }

  async loadScene(sceneText: string): Promise<void> {
    const { scene_id } = await this.client.uploadScene(sceneText);
    const scene = await this.client.getScene(scene_id);
    this.patch({ sceneId: scene_id, scene, session: null, status: null, robot: null });
  }

  async submitInstruction(instruction: string, mode: "reference" | "llm" = "reference"): Promise<void> {
    if (!this.state.sceneId) throw new Error("no scene loaded");
    try {
      const session = await this.client.createSession(this.state.sceneId, instruction, mode);
      this.acceptSession(session);
      this.watch(session.id);
    } catch (err) {
      this.patch({ banner: String(err) });
      throw err;
    }
  }

  /** Drop the live stream subscription (page teardown, tests). */
  dispose(): void {
    this.streamCancel?.();
    this.streamCancel = null;
  }

  /** Attach to the server-push stream; events are authoritative. */
  watch(sessionId: string): void {
    this.streamCancel?.();
    const { done, cancel } = this.client.stream(sessionId, (event) => this.onStreamEvent(event));
    this.streamCancel = cancel;
    done.catch((err) => {
      // connection drop: keep last-known state, surface a banner
      this.patch({ banner: `stream lost: ${err}` });
    });
  }

  private onStreamEvent(event: StreamEvent): void {
    if (event.type === "status") {
      this.patch({ status: event.status });
      if (event.status === "done" || event.status === "failed") {
        void this.refresh();
      }
    } else if (event.type === "state") {
      this.patch({ robot: { t: event.t, q: event.q, endEffector: event.end_effector } });
    }
  }

  async refresh(): Promise<void> {
    if (!this.state.session) return;
    this.acceptSession(await this.client.getSession(this.state.session.id));
  }

  get canEdit(): boolean {
    return this.state.status === "awaiting-approval";
  }

  get canApprove(): boolean {
    return this.canEdit && this.state.session?.report?.overall === true;
  }

  get canExecute(): boolean {
    return this.state.status === "approved";
  }

  selectWaypoint(index: number | null): void {
    this.patch({ selectedWaypoint: index });
  }

  /**
   * Server-confirmed move: the sphere only lands where the PATCH response
   * says it does. On rejection the old snapshot stays and the error shows
   * in the banner.
   */
  async moveWaypoint(index: number, position: Vec3Tuple): Promise<void> {
    const session = this.state.session;
    if (!session) throw new Error("no session");
    try {
      this.acceptSession(await this.client.patchWaypoint(session.id, index, position));
    } catch (err) {
      this.patch({ banner: `edit rejected: ${err}` });
      throw err;
    }
  }

  async approve(): Promise<void> {
    const session = this.state.session;
    if (!session) throw new Error("no session");
    try {
      this.acceptSession(await this.client.approve(session.id));
    } catch (err) {
      this.patch({ banner: `approve rejected: ${err}` });
      throw err;
    }
  }

  async execute(): Promise<void> {
    const session = this.state.session;
    if (!session) throw new Error("no session");
    try {
      this.acceptSession(await this.client.execute(session.id));
    } catch (err) {
      this.patch({ banner: `execute rejected: ${err}` });
      throw err;
    }
  }
}
