"""HTTP face of the session engine, consumed by the browser preview.

Scenes are uploaded as documents, sessions are planned/edited/approved/
executed through REST calls, and each session exposes a server-sent event
stream of status changes and robot states. Executions run against a
spawned wire-protocol simulator so the whole stack, sockets included, is
exercised on every run.
"""

from __future__ import annotations

import json
import queue
import uuid
from contextlib import contextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from . import bundled
from .animation import clip_to_doc, parse_frame_format, parse_track_format
from .kinematics import KinematicChain, serialize_chain
from .orchestrator import (
    EmptyInstructionError,
    ParseFailure,
    TargetResolutionError,
    TransportError,
)
from .robolink import ControllerServer, SimulatedController, TcpRobotLink
from .scene import Scene, SceneSemanticError, SceneSyntaxError, Vec3, load_scene, serialize_scene
from .service import (
    SessionEngine,
    UnknownSessionError,
    ValidationFailedError,
    WrongStateError,
)

TERMINAL_STATUSES = ("done", "failed")


class SessionCreate(BaseModel):
    scene_id: str
    instruction: str
    mode: str = "reference"


class WaypointPatch(BaseModel):
    position: list[float]


@contextmanager
def tcp_sim_link(scene: Scene, chain: KinematicChain, port: int = 0):
    """Spin up a wire-protocol simulator for this scene and connect to it."""
    server = ControllerServer(SimulatedController(scene, chain), port=port)
    bound = server.start()
    link = TcpRobotLink("127.0.0.1", bound)
    try:
        yield link
    finally:
        link.close()
        server.stop()


class _ExecLink:
    """Defers simulator setup until the engine actually streams."""

    def __init__(self, scene: Scene, chain: KinematicChain, port: int):
        self._scene = scene
        self._chain = chain
        self._port = port

    def run(self, script):
        with tcp_sim_link(self._scene, self._chain, self._port) as link:
            yield from link.run(script)


def create_app(
    engine: SessionEngine,
    chain: KinematicChain,
    sim_port: int = 0,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="armloop")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    scenes: dict[str, Scene] = {}

    def get_scene(scene_id: str) -> Scene:
        if scene_id not in scenes:
            raise HTTPException(404, f"unknown scene {scene_id!r}")
        return scenes[scene_id]

    def get_session(session_id: str) -> dict:
        try:
            return engine.get(session_id)
        except UnknownSessionError:
            raise HTTPException(404, f"unknown session {session_id!r}") from None

    @app.post("/scenes")
    async def post_scene(request: Request) -> dict:
        text = (await request.body()).decode("utf-8")
        try:
            scene = load_scene(text)
        except SceneSyntaxError as exc:
            raise HTTPException(422, f"scene syntax: {exc}") from exc
        except SceneSemanticError as exc:
            raise HTTPException(422, f"scene semantics: {exc}") from exc
        scene_id = uuid.uuid4().hex[:8]
        scenes[scene_id] = scene
        return {"scene_id": scene_id, "warnings": list(scene.warnings)}

    @app.get("/scenes/{scene_id}")
    def get_scene_doc(scene_id: str) -> dict:
        return json.loads(serialize_scene(get_scene(scene_id)))

    @app.get("/chain")
    def get_chain_doc() -> list:
        return json.loads(serialize_chain(chain))

    @app.post("/sessions")
    def post_session(body: SessionCreate) -> dict:
        scene = get_scene(body.scene_id)
        try:
            snap = engine.create_session(scene, body.instruction, scene_id=body.scene_id)
        except EmptyInstructionError as exc:
            raise HTTPException(422, str(exc)) from exc
        try:
            return engine.plan(snap["id"], body.mode)
        except ValueError as exc:
            # unknown mode is a caller error; other failures land in the session
            if isinstance(exc, (TargetResolutionError, ParseFailure)):
                return engine.get(snap["id"])
            raise HTTPException(422, str(exc)) from exc
        except TransportError:
            return engine.get(snap["id"])

    @app.get("/sessions/{session_id}")
    def get_session_doc(session_id: str) -> dict:
        return get_session(session_id)

    @app.patch("/sessions/{session_id}/waypoints/{index}")
    def patch_waypoint(session_id: str, index: int, body: WaypointPatch) -> dict:
        get_session(session_id)
        if len(body.position) != 3:
            raise HTTPException(422, "position must be [x, y, z]")
        try:
            return engine.edit_waypoint(session_id, index, Vec3.of(body.position))
        except WrongStateError as exc:
            raise HTTPException(409, str(exc)) from exc
        except IndexError as exc:
            raise HTTPException(404, str(exc)) from exc
        except (TypeError, ValueError) as exc:
            raise HTTPException(422, str(exc)) from exc

    @app.post("/sessions/{session_id}/approve")
    def approve(session_id: str) -> dict:
        get_session(session_id)
        try:
            return engine.approve(session_id)
        except WrongStateError as exc:
            raise HTTPException(409, str(exc)) from exc
        except ValidationFailedError as exc:
            raise HTTPException(422, str(exc)) from exc

    @app.post("/sessions/{session_id}/execute")
    def execute(session_id: str) -> dict:
        snap = get_session(session_id)
        scene = get_scene(snap["scene_id"])
        try:
            return engine.start_execution(session_id, _ExecLink(scene, chain, sim_port))
        except WrongStateError as exc:
            raise HTTPException(409, str(exc)) from exc
        except ValidationFailedError as exc:
            raise HTTPException(422, str(exc)) from exc

    @app.get("/sessions/{session_id}/stream")
    def stream(session_id: str) -> StreamingResponse:
        get_session(session_id)
        q = engine.subscribe(session_id)

        def events():
            try:
                while True:
                    try:
                        item = q.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"event: {item['type']}\ndata: {json.dumps(item)}\n\n"
                    if item["type"] == "status" and item["status"] in TERMINAL_STATUSES:
                        return
            finally:
                engine.unsubscribe(session_id, q)

        return StreamingResponse(events(), media_type="text/event-stream")

    @app.get("/animations")
    def list_animations() -> list[str]:
        return bundled.list_clip_fixtures()

    @app.get("/animations/{name}")
    def get_animation(name: str) -> dict:
        if name not in bundled.list_clip_fixtures():
            raise HTTPException(404, f"unknown clip {name!r}")
        text = bundled.fixture_text(name)
        if name.endswith(".anim.txt"):
            clip = parse_track_format(text)
        else:
            clip = parse_frame_format(text)
            from .animation import frames_to_clip

            clip = frames_to_clip(clip)
        return {"name": name, **clip_to_doc(clip)}

    @app.get("/animations/{name}/raw", response_class=PlainTextResponse)
    def get_animation_raw(name: str) -> str:
        if name not in bundled.list_clip_fixtures():
            raise HTTPException(404, f"unknown clip {name!r}")
        return bundled.fixture_text(name)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
