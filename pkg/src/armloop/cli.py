"""Command-line entry points.

``armloop`` runs one batch session: load a scene, plan a trajectory for an
instruction, validate, (auto-)approve, execute against a spawned simulator,
and write the artifacts. ``armloop-serve`` starts the HTTP service for the
browser preview.

Exit codes for ``armloop``:

    0  execution finished (done)
    2  scene or chain file missing/invalid (argparse usage errors also exit 2)
    3  validation failed and --force not given; nothing executed
    4  execution failed (collision, protocol error, transport, reject)
    5  planning failed (unresolvable targets, blank instruction, bad fixtures)
    6  plan not approved (interactive decline)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundled import default_chain
from .kinematics import ChainFormatError, load_chain
from .orchestrator import (
    EmptyInstructionError,
    ParseFailure,
    ReplayClient,
    TargetResolutionError,
    TransportError,
)
from .planner import doc_to_trajectory, dump_trajectory
from .robolink import (
    ControllerServer,
    HaltReason,
    NackError,
    SimulatedController,
    TcpRobotLink,
    emit_script,
    format_state_line,
)
from .robolink import TransportError as LinkTransportError
from .scene import SceneSemanticError, SceneSyntaxError, load_scene
from .service import SessionEngine, TeeLink, TrajectoryPlanner

EXIT_OK = 0
EXIT_SCENE = 2
EXIT_VALIDATION = 3
EXIT_EXECUTION = 4
EXIT_PLANNING = 5
EXIT_NOT_APPROVED = 6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armloop",
        description="Plan, validate, approve, and execute a waypoint program "
        "for one natural-language instruction.",
    )
    parser.add_argument("--scene", required=True, help="scene document path")
    parser.add_argument("--instruction", required=True, help="what the arm should do")
    parser.add_argument(
        "--mode", choices=("llm", "reference"), default="reference",
        help="candidate source: replayed language model or the reference planner",
    )
    parser.add_argument("--chain", help="chain document path (default: bundled six-axis)")
    parser.add_argument("--yes", action="store_true", help="approve without prompting")
    parser.add_argument(
        "--force", action="store_true",
        help="execute even when validation fails (bypasses the session gate)",
    )
    parser.add_argument("--out", default="armloop-out", help="artifact directory")
    parser.add_argument(
        "--sim-port", type=int, default=0,
        help="simulator port (0 picks a free one; the robot default is 30001)",
    )
    parser.add_argument("--fixtures", help="replay fixture file for --mode llm")
    parser.add_argument("--speed", type=float, default=0.25, help="tool speed m/s")
    parser.add_argument("--count", type=int, default=5, help="reference waypoint count")
    parser.add_argument("--lift", type=float, default=0.1, help="obstacle clearance m")
    return parser


def _report_table(report: dict) -> str:
    rows = []
    for check in report["waypoints"]:
        flags = []
        if not check["in_sphere"]:
            flags.append("outside-sphere")
        if check["collides_with"]:
            flags.append("hits:" + ",".join(check["collides_with"]))
        if not check["reachable_ik"]:
            flags.append("unreachable")
        rows.append(f"  {check['name']}: {'ok' if not flags else ' '.join(flags)}")
    rows.append(f"  arc: {'ok' if report['arc_ok'] else 'flat'}")
    rows.append(f"  endpoints: {'ok' if report['endpoints_ok'] else 'off-target'}")
    rows.append(f"  overall: {'PASS' if report['overall'] else 'FAIL'}")
    return "\n".join(rows)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    scene_path = Path(args.scene)
    if not scene_path.is_file():
        print(f"scene file not found: {scene_path}", file=sys.stderr)
        return EXIT_SCENE
    try:
        scene = load_scene(scene_path.read_text(encoding="utf-8"))
    except (SceneSyntaxError, SceneSemanticError) as exc:
        print(f"bad scene file: {exc}", file=sys.stderr)
        return EXIT_SCENE

    try:
        chain = (
            load_chain(Path(args.chain).read_text(encoding="utf-8"))
            if args.chain
            else default_chain()
        )
    except (OSError, ChainFormatError) as exc:
        print(f"bad chain file: {exc}", file=sys.stderr)
        return EXIT_SCENE

    client = None
    if args.mode == "llm":
        if not args.fixtures:
            print("--mode llm needs --fixtures (live transports are not bundled)", file=sys.stderr)
            return EXIT_PLANNING
        try:
            client = ReplayClient.from_file(args.fixtures)
        except (OSError, ValueError) as exc:
            print(f"bad replay fixture: {exc}", file=sys.stderr)
            return EXIT_PLANNING

    planner = TrajectoryPlanner(
        chain, llm_client=client, waypoint_count=args.count, lift=args.lift
    )
    engine = SessionEngine(
        planner, session_dir=out / "sessions", exec_speed=args.speed
    )

    try:
        sid = engine.create_session(scene, args.instruction, scene_id=scene_path.name)["id"]
        snap = engine.plan(sid, args.mode)
    except (EmptyInstructionError, TargetResolutionError, ParseFailure, TransportError, ValueError) as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING

    (out / "trajectory.json").write_text(
        dump_trajectory(doc_to_trajectory(snap["candidate"])), encoding="utf-8"
    )
    print(f"candidate trajectory ({len(snap['candidate']['waypoints'])} waypoints):")
    print(_report_table(snap["report"]))

    overall = snap["report"]["overall"]
    if not overall and not args.force:
        print("validation failed; re-run with --force to execute anyway", file=sys.stderr)
        return EXIT_VALIDATION

    if overall and not args.yes:
        answer = input("approve and execute? [y/N] ").strip().lower()
        if answer not in ("y", "yes"):
            print("not approved; nothing executed")
            return EXIT_NOT_APPROVED

    server = ControllerServer(SimulatedController(scene, chain), port=args.sim_port)
    port = server.start()
    try:
        tee = TeeLink(TcpRobotLink("127.0.0.1", port))
        if overall:
            engine.approve(sid)
            final = engine.execute(sid, tee)
            status = final["status"]
        else:
            # forced run: skips the approval gate, so drive the link directly
            script = emit_script(
                doc_to_trajectory(snap["candidate"]), speed=args.speed
            )
            try:
                reason = None
                for state in tee.run(script):
                    reason = state.halted_reason
                status = "done" if reason is HaltReason.DONE else "failed"
            except (LinkTransportError, NackError) as exc:
                print(f"execution error: {exc}", file=sys.stderr)
                status = "failed"
    finally:
        server.stop()

    if tee.script_text is not None:
        (out / "program.script").write_text(tee.script_text, encoding="utf-8")
    (out / "states.log").write_text(
        "".join(format_state_line(s) for s in tee.states), encoding="utf-8"
    )

    if tee.states:
        last = tee.states[-1]
        print(
            f"terminal state: {last.halted_reason.value if last.halted_reason else 'run'} "
            f"at t={last.t:.3f}s, end effector "
            f"({last.end_effector.x:.4f}, {last.end_effector.y:.4f}, {last.end_effector.z:.4f})"
        )
    print(f"artifacts in {out}/")
    return EXIT_OK if status == "done" else EXIT_EXECUTION


def serve_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="armloop-serve", description="Run the armloop HTTP service."
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--chain", help="chain document path (default: bundled)")
    parser.add_argument("--fixtures", help="replay fixture file enabling --mode llm sessions")
    parser.add_argument("--session-dir", help="directory for session event logs")
    parser.add_argument("--sim-port", type=int, default=0, help="simulator port per execution")
    parser.add_argument("--ui", help="built frontend directory to serve at /")
    args = parser.parse_args(argv)

    import uvicorn

    from .api import create_app

    try:
        chain = (
            load_chain(Path(args.chain).read_text(encoding="utf-8"))
            if args.chain
            else default_chain()
        )
    except (OSError, ChainFormatError) as exc:
        print(f"bad chain file: {exc}", file=sys.stderr)
        return EXIT_SCENE
    client = ReplayClient.from_file(args.fixtures) if args.fixtures else None
    engine = SessionEngine(
        TrajectoryPlanner(chain, llm_client=client), session_dir=args.session_dir
    )
    app = create_app(engine, chain, sim_port=args.sim_port, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
