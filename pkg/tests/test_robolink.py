from __future__ import annotations

import socket
from types import SimpleNamespace

import numpy as np
import pytest

from armloop.bundled import default_chain, default_scene, fixture_text
from armloop.kinematics import JointConfig, fk
from armloop.planner import generate_arc_waypoints
from armloop.robolink import (
    ControllerServer,
    HaltReason,
    InProcessLink,
    MoveCommand,
    NackError,
    RobotScript,
    RobotState,
    ScriptSyntaxError,
    SimulatedController,
    TcpRobotLink,
    TransportError,
    UnvalidatedTrajectoryError,
    emit_script,
    format_state_line,
    parse_script,
    parse_state_line,
)
from armloop.scene import Vec3, load_scene

START = Vec3(0.5, 0.0, 0.9)
END = Vec3(-0.5, 0.0, 0.9)


@pytest.fixture(scope="module")
def scene():
    return default_scene()


@pytest.fixture(scope="module")
def chain():
    return default_chain()


@pytest.fixture(scope="module")
def arc(scene):
    return generate_arc_waypoints(scene, START, END)


def test_emit_script_fixture(arc):
    script = emit_script(arc)
    lines = script.text.splitlines()
    assert lines[0] == "PROG plan"
    assert lines[-1] == "END"
    moves = lines[1:-1]
    assert len(moves) == 5
    assert moves[0] == "MOVEL 0.5000 0.0000 0.9000 0.2500 0.0000"
    assert emit_script(arc).text == script.text  # deterministic bytes


def test_emit_rejects_empty_and_bad_params(arc):
    with pytest.raises(UnvalidatedTrajectoryError):
        emit_script(SimpleNamespace(waypoints=()))
    with pytest.raises(ValueError):
        emit_script(arc, speed=0.0)
    with pytest.raises(ValueError):
        emit_script(arc, blend=-0.1)


def test_script_parse_round_trip(arc):
    script = emit_script(arc)
    parsed = parse_script(script.text)
    assert parsed == script
    assert parsed.text == script.text


def test_parse_round_trip_on_random_trajectories(scene):
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        traj = SimpleNamespace(
            waypoints=tuple(
                SimpleNamespace(
                    name=f"W{i}", position=Vec3.of(rng.uniform(-1.2, 1.2, 3))
                )
                for i in range(n)
            )
        )
        script = emit_script(traj, speed=float(rng.uniform(0.05, 1.0)))
        assert parse_script(script.text).text == script.text


def test_parse_script_errors():
    with pytest.raises(ScriptSyntaxError) as err:
        parse_script("PROG a\nMOVEL 1 2\nEND\n")
    assert err.value.line == 2
    with pytest.raises(ScriptSyntaxError) as err:
        parse_script("PROG a\nMOVEL 1 2 3 0.25 0\n")
    assert "END" in str(err.value)
    with pytest.raises(ScriptSyntaxError):
        parse_script("HELLO\nEND\n")
    with pytest.raises(ScriptSyntaxError):
        parse_script("PROG a\nMOVEL 1 2 3 0 0\nEND\n")  # zero speed


def test_state_line_round_trip(chain):
    q = JointConfig.of([0.1, -0.2, 0.3, -0.4, 0.5, -0.6])
    state = RobotState(1.008, q, fk(chain, q), executing=True)
    again = parse_state_line(format_state_line(state).rstrip("\n"))
    assert again == state  # repr floats re-parse bit-exactly

    halt = RobotState(2.0, q, fk(chain, q), executing=False, halted_reason=HaltReason.DONE)
    assert parse_state_line(format_state_line(halt).rstrip("\n")) == halt


def run_fixture(scene, chain, script):
    sim = SimulatedController(scene, chain)
    return list(sim.run_script(script))


def test_simulated_execution_reaches_goal(scene, chain, arc):
    states = run_fixture(scene, chain, emit_script(arc))
    assert states[-1].halted_reason is HaltReason.DONE
    assert states[-1].end_effector.distance_to(END) <= 1e-3
    # time strictly increases and only the final record is non-executing
    times = [s.t for s in states]
    assert all(b > a for a, b in zip(times, times[1:]))
    assert all(s.executing for s in states[:-1])
    assert not states[-1].executing
    # every record is fk-consistent
    for s in states[::25]:
        assert s.end_effector.distance_to(fk(chain, s.q)) <= 1e-9


def test_simulator_visits_every_waypoint_in_order(scene, chain, arc):
    states = run_fixture(scene, chain, emit_script(arc))
    cursor = 0
    visit_times = []
    for wp in arc.waypoints:
        while cursor < len(states):
            if states[cursor].end_effector.distance_to(wp.position) <= 1e-3:
                visit_times.append(states[cursor].t)
                break
            cursor += 1
        else:
            pytest.fail(f"never reached {wp.name}")
    assert visit_times == sorted(visit_times)


def test_low_segment_halts_with_collision(chain):
    blocked = load_scene(fixture_text("scene_blocked.json"))
    straight = RobotScript(
        name="low",
        move_commands=(
            MoveCommand(START, 0.25, 0.0),
            MoveCommand(END, 0.25, 0.0),
        ),
    )
    states = list(SimulatedController(blocked, chain).run_script(straight))
    assert states[-1].halted_reason is HaltReason.COLLISION
    assert not states[-1].executing
    # halted at the first penetrating tick: no earlier state is inside a box
    for s in states[:-1]:
        assert all(
            not o.bounds.contains(s.end_effector) for o in blocked.obstacles()
        )


def test_zero_move_program_is_immediately_done(scene, chain):
    states = run_fixture(scene, chain, RobotScript(name="noop", move_commands=()))
    assert len(states) == 1
    assert states[0].halted_reason is HaltReason.DONE
    assert states[0].end_effector.distance_to(fk(chain, chain.home())) <= 1e-12


def test_in_process_link(scene, chain, arc):
    link = InProcessLink(SimulatedController(scene, chain))
    states = list(link.run(emit_script(arc)))
    assert states[-1].halted_reason is HaltReason.DONE


@pytest.fixture()
def server(scene, chain):
    srv = ControllerServer(SimulatedController(scene, chain), port=0)
    srv.start()
    yield srv
    srv.stop()


def test_tcp_round_trip(server, arc):
    with TcpRobotLink("127.0.0.1", server.port) as link:
        assert link.send_program(emit_script(arc)) == "ACK"
        states = list(link.states())
    assert states[-1].halted_reason is HaltReason.DONE
    assert states[-1].end_effector.distance_to(END) <= 1e-3


def test_tcp_nack_reports_line(server):
    with socket.create_connection(("127.0.0.1", server.port), timeout=10) as conn:
        conn.sendall(b"PROG bad\nMOVEL 1 2\nEND\n")
        reply = conn.makefile("r").readline().strip()
    assert reply.startswith("NACK 2")


def test_tcp_busy_rejected(server, arc):
    crawl = emit_script(arc, speed=0.02)  # long enough to overlap
    with TcpRobotLink("127.0.0.1", server.port) as first:
        first.send_program(crawl)
        stream = first.states()
        next(stream)  # executing now
        with TcpRobotLink("127.0.0.1", server.port) as second:
            with pytest.raises(NackError, match="busy"):
                second.send_program(emit_script(arc))
        for state in stream:  # drain so the server frees the arm
            pass
        assert state.halted_reason is HaltReason.DONE


def test_closed_connection_raises_transport_error(scene, chain):
    srv = ControllerServer(SimulatedController(scene, chain), port=0)
    port = srv.start()
    link = TcpRobotLink("127.0.0.1", port)
    srv.stop()
    link.close()
    with pytest.raises(TransportError):
        link.send_program(RobotScript(name="x", move_commands=()))


def test_connect_to_nothing_raises_transport_error():
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        free_port = probe.getsockname()[1]
    with pytest.raises(TransportError):
        TcpRobotLink("127.0.0.1", free_port, timeout=0.5)
