"""Human-in-the-loop session engine: plan, preview, approve, execute.

A session walks drafting -> awaiting-approval -> approved -> executing ->
done/failed. Edits drop it back to awaiting-approval; nothing reaches the
robot without an approval, and approval requires a clean validation report.
Sessions optionally persist as append-only NDJSON event logs, one file per
session.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator

from .kinematics import IkConfig, KinematicChain
from .orchestrator import (
    ChatClient,
    ModelConfig,
    ParseFailure,
    TargetResolutionError,
    build_prompt,
    request_waypoints,
    resolve_targets,
)
from .planner import (
    DEFAULT_LIFT_M,
    DEFAULT_WAYPOINT_COUNT,
    Trajectory,
    ValidationReport,
    apply_edit,
    generate_arc_waypoints,
    report_to_doc,
    trajectory_to_doc,
    validate,
)
from .robolink import HaltReason, RobotLink, RobotState, emit_script
from .scene import Scene, Vec3, top_center


class SessionStatus(str, Enum):
    DRAFTING = "drafting"
    AWAITING_APPROVAL = "awaiting-approval"
    APPROVED = "approved"
    EXECUTING = "executing"
    DONE = "done"
    FAILED = "failed"


TERMINAL = (SessionStatus.DONE, SessionStatus.FAILED)


class WrongStateError(RuntimeError):
    """Operation not legal in the session's current status."""


class ValidationFailedError(RuntimeError):
    """Approval refused because the latest report is not clean."""


class UnknownSessionError(KeyError):
    pass


@dataclass(frozen=True)
class HistoryEvent:
    event: str
    timestamp: float
    detail: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {"event": self.event, "timestamp": self.timestamp, "detail": self.detail}


@dataclass
class PlanSession:
    id: str
    scene: Scene
    scene_id: str
    instruction: str
    status: SessionStatus = SessionStatus.DRAFTING
    candidate: Trajectory | None = None
    report: ValidationReport | None = None
    history: list[HistoryEvent] = field(default_factory=list)

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "scene_id": self.scene_id,
            "instruction": self.instruction,
            "status": self.status.value,
            "candidate": trajectory_to_doc(self.candidate) if self.candidate else None,
            "report": report_to_doc(self.report) if self.report else None,
            "history": [h.to_doc() for h in self.history],
        }


class TrajectoryPlanner:
    """Turns (scene, instruction, mode) into a validated candidate.

    Reference mode grounds the instruction onto two target surfaces and runs
    the arc planner between their tops. LLM mode asks the chat client and
    falls back to reference mode when the reply cannot be parsed.
    """

    def __init__(
        self,
        chain: KinematicChain,
        ik_cfg: IkConfig = IkConfig(),
        llm_client: ChatClient | None = None,
        model_cfg: ModelConfig = ModelConfig(),
        waypoint_count: int = DEFAULT_WAYPOINT_COUNT,
        lift: float = DEFAULT_LIFT_M,
    ):
        self.chain = chain
        self.ik_cfg = ik_cfg
        self.llm_client = llm_client
        self.model_cfg = model_cfg
        self.waypoint_count = waypoint_count
        self.lift = lift

    def _reference(self, scene: Scene, instruction: str) -> Trajectory:
        res = resolve_targets(scene, instruction)
        if not res.resolved:
            raise TargetResolutionError("; ".join(res.notes))
        return generate_arc_waypoints(
            scene,
            top_center(res.start),
            top_center(res.end),
            count=self.waypoint_count,
            lift=self.lift,
        )

    def validate(self, scene: Scene, traj: Trajectory) -> ValidationReport:
        return validate(scene, self.chain, traj, self.ik_cfg)

    def plan(
        self, scene: Scene, instruction: str, mode: str
    ) -> tuple[Trajectory, ValidationReport, list[dict]]:
        """Returns (candidate, report, notes); notes become history entries."""
        notes: list[dict] = []
        if mode == "llm":
            if self.llm_client is None:
                raise TargetResolutionError("llm mode requested but no chat client configured")
            bundle = build_prompt(scene, instruction, self.model_cfg)
            try:
                reply = request_waypoints(self.llm_client, bundle, self.model_cfg)
                candidate = reply.parsed
                assert candidate is not None
            except ParseFailure as exc:
                notes.append(
                    {"event": "plan-fallback", "detail": {"reason": str(exc)}}
                )
                candidate = self._reference(scene, instruction)
        elif mode == "reference":
            candidate = self._reference(scene, instruction)
        else:
            raise ValueError(f"unknown plan mode {mode!r}")
        report = self.validate(scene, candidate)
        return candidate, report, notes


class SessionEngine:
    """Owns sessions, serializes their mutations, and fans out events.

    Execution is globally exclusive (one arm): concurrent execute calls
    queue on an internal lock.
    """

    def __init__(
        self,
        planner: TrajectoryPlanner,
        session_dir: str | Path | None = None,
        clock: Callable[[], float] = time.time,
        exec_speed: float = 0.25,
        exec_blend: float = 0.0,
    ):
        self.planner = planner
        self.session_dir = Path(session_dir) if session_dir else None
        if self.session_dir:
            self.session_dir.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self.exec_speed = exec_speed
        self.exec_blend = exec_blend
        self._sessions: dict[str, PlanSession] = {}
        self._lock = threading.RLock()
        self._exec_lock = threading.Lock()
        self._subscribers: dict[str, list[queue.Queue]] = {}

    # -- bookkeeping ---------------------------------------------------

    def _session(self, session_id: str) -> PlanSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSessionError(session_id) from None

    def _record(self, session: PlanSession, event: str, detail: dict | None = None) -> None:
        entry = HistoryEvent(event, self._clock(), detail or {})
        session.history.append(entry)
        if self.session_dir:
            path = self.session_dir / f"{session.id}.ndjson"
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_doc()) + "\n")

    def _set_status(self, session: PlanSession, status: SessionStatus) -> None:
        session.status = status
        self._publish(session.id, {"type": "status", "status": status.value})

    def _publish(self, session_id: str, event: dict) -> None:
        for q in self._subscribers.get(session_id, []):
            q.put(event)

    def subscribe(self, session_id: str) -> queue.Queue:
        """Event queue for one session; seeded with the current status."""
        with self._lock:
            session = self._session(session_id)
            q: queue.Queue = queue.Queue()
            self._subscribers.setdefault(session_id, []).append(q)
            q.put({"type": "status", "status": session.status.value})
            return q

    def unsubscribe(self, session_id: str, q: queue.Queue) -> None:
        with self._lock:
            subscribers = self._subscribers.get(session_id, [])
            if q in subscribers:
                subscribers.remove(q)

    def get(self, session_id: str) -> dict:
        with self._lock:
            return self._session(session_id).snapshot()

    def session_ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)

    # -- session operations ---------------------------------------------

    def create_session(self, scene: Scene, instruction: str, scene_id: str = "scene") -> dict:
        if not instruction.strip():
            from .orchestrator import EmptyInstructionError

            raise EmptyInstructionError("instruction must not be blank")
        with self._lock:
            session = PlanSession(
                id=uuid.uuid4().hex[:12],
                scene=scene,
                scene_id=scene_id,
                instruction=instruction,
            )
            self._sessions[session.id] = session
            self._record(session, "created", {"instruction": instruction, "scene_id": scene_id})
            return session.snapshot()

    def plan(self, session_id: str, mode: str = "reference") -> dict:
        with self._lock:
            session = self._session(session_id)
            if session.status not in (SessionStatus.DRAFTING, SessionStatus.AWAITING_APPROVAL):
                raise WrongStateError(f"cannot plan while {session.status.value}")
            try:
                candidate, report, notes = self.planner.plan(
                    session.scene, session.instruction, mode
                )
            except Exception as exc:
                self._record(session, "plan-failed", {"error": str(exc)})
                self._set_status(session, SessionStatus.FAILED)
                raise
            for note in notes:
                self._record(session, note["event"], note["detail"])
            session.candidate = candidate
            session.report = report
            self._record(
                session,
                "planned",
                {
                    "mode": mode,
                    "overall": report.overall,
                    "trajectory": trajectory_to_doc(candidate),
                    "report": report_to_doc(report),
                },
            )
            self._set_status(session, SessionStatus.AWAITING_APPROVAL)
            return session.snapshot()

    def edit_waypoint(self, session_id: str, index: int, new_pos: Vec3) -> dict:
        with self._lock:
            session = self._session(session_id)
            if session.status is not SessionStatus.AWAITING_APPROVAL:
                raise WrongStateError(f"cannot edit while {session.status.value}")
            assert session.candidate is not None
            edited = apply_edit(session.candidate, index, new_pos)  # IndexError passes through
            session.candidate = edited
            session.report = self.planner.validate(session.scene, edited)
            self._record(
                session,
                "edited",
                {
                    "index": index,
                    "position": list(new_pos.as_tuple()),
                    "overall": session.report.overall,
                    "trajectory": trajectory_to_doc(edited),
                    "report": report_to_doc(session.report),
                },
            )
            self._set_status(session, SessionStatus.AWAITING_APPROVAL)
            return session.snapshot()

    def approve(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            if session.status is not SessionStatus.AWAITING_APPROVAL:
                raise WrongStateError(f"cannot approve while {session.status.value}")
            assert session.report is not None
            if not session.report.overall:
                raise ValidationFailedError("validation report is not clean")
            self._record(session, "approved", {})
            self._set_status(session, SessionStatus.APPROVED)
            return session.snapshot()

    def execute(self, session_id: str, link: RobotLink) -> dict:
        """Upload and run the approved candidate; blocks until terminal."""
        self._begin_execution(session_id)
        return self._stream_execution(session_id, link)

    def start_execution(self, session_id: str, link: RobotLink) -> dict:
        """Like execute, but streams on a background thread."""
        snapshot = self._begin_execution(session_id)
        thread = threading.Thread(
            target=self._stream_execution, args=(session_id, link), daemon=True
        )
        thread.start()
        return snapshot

    def _begin_execution(self, session_id: str) -> dict:
        with self._lock:
            session = self._session(session_id)
            if session.status is not SessionStatus.APPROVED:
                raise WrongStateError(f"cannot execute while {session.status.value}")
            assert session.candidate is not None and session.report is not None
            # safety net behind the approve gate: never drive a dirty plan
            if not session.report.overall:
                raise ValidationFailedError("refusing to execute an unvalidated plan")
            self._record(session, "execution-started", {})
            self._set_status(session, SessionStatus.EXECUTING)
            return session.snapshot()

    def _stream_execution(self, session_id: str, link: RobotLink) -> dict:
        session = self._session(session_id)
        script = emit_script(
            session.candidate, speed=self.exec_speed, blend=self.exec_blend
        )
        final_reason: str | None = None
        error: str | None = None
        with self._exec_lock:  # one arm: executions queue here
            try:
                for state in link.run(script):
                    self._publish(session_id, _state_event(state))
                    if state.halted_reason is not None:
                        final_reason = state.halted_reason.value
            except Exception as exc:
                error = str(exc)
        with self._lock:
            if error is not None:
                self._record(session, "execution-failed", {"error": error})
                self._set_status(session, SessionStatus.FAILED)
            elif final_reason == HaltReason.DONE.value:
                self._record(session, "execution-done", {})
                self._set_status(session, SessionStatus.DONE)
            else:
                self._record(
                    session, "execution-failed", {"reason": final_reason or "no terminal state"}
                )
                self._set_status(session, SessionStatus.FAILED)
            return session.snapshot()


def _state_event(state: RobotState) -> dict:
    return {
        "type": "state",
        "t": state.t,
        "q": list(state.q),
        "end_effector": list(state.end_effector.as_tuple()),
        "executing": state.executing,
        "halted_reason": state.halted_reason.value if state.halted_reason else None,
    }


def load_session_log(session_dir: str | Path, session_id: str) -> list[dict]:
    """Read back one session's append-only event log."""
    path = Path(session_dir) / f"{session_id}.ndjson"
    events = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                events.append(json.loads(line))
    return events


class TeeLink:
    """Wraps a link, recording the script text and every state that flows."""

    def __init__(self, inner: RobotLink):
        self._inner = inner
        self.script_text: str | None = None
        self.states: list[RobotState] = []

    def run(self, script) -> Iterator[RobotState]:
        self.script_text = script.text
        for state in self._inner.run(script):
            self.states.append(state)
            yield state
