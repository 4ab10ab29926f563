"""Script emission, the line wire protocol, and the simulated controller.

Program grammar (byte-exact):

    PROG <name>\n
    MOVEL <x> <y> <z> <speed> <blend>\n   (4-decimal fixed, one per waypoint)
    END\n

The controller answers ``ACK`` or ``NACK <line> <reason>`` and then streams
``STATE <t> <q1..q6> <x> <y> <z> <flag>`` records, one per simulation tick,
flag one of run/done/collision/protocol-error. State floats use repr
formatting so they re-parse bit-exactly.

The simulated controller drags a Cartesian tracking point along each
straight segment at the commanded speed, re-solving IK every tick seeded by
the previous tick's angles, and halts on the first tick whose end-effector
lands inside an obstacle box.
"""

from __future__ import annotations

import math
import socket
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Protocol

from .kinematics import IkConfig, JointConfig, KinematicChain, fk, ik
from .planner import Trajectory
from .scene import Scene, Vec3, aabb_contains

DEFAULT_SPEED_MPS = 0.25
DEFAULT_BLEND_M = 0.0
DEFAULT_TICK_HZ = 125.0
DEFAULT_PORT = 30001
ARRIVAL_TOL_M = 1e-3

# the simulator tracks its nominal point tighter than the arrival tolerance
# so waypoint visits stay well inside the 1e-3 contract
_SIM_IK = IkConfig(tol_m=1e-4, max_iters=2000)


class UnvalidatedTrajectoryError(ValueError):
    """Refused to emit a program from an empty or non-finite trajectory."""


class ScriptSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.reason = message


class TransportError(RuntimeError):
    """The stream connection failed or closed unexpectedly."""


class NackError(RuntimeError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"controller rejected program at line {line}: {reason}")
        self.line = line
        self.reason = reason


class HaltReason(str, Enum):
    DONE = "done"
    COLLISION = "collision"
    PROTOCOL_ERROR = "protocol-error"


@dataclass(frozen=True)
class MoveCommand:
    target: Vec3
    speed: float
    blend: float


@dataclass(frozen=True)
class RobotScript:
    name: str
    move_commands: tuple[MoveCommand, ...]

    @property
    def text(self) -> str:
        lines = [f"PROG {self.name}"]
        lines += [
            f"MOVEL {m.target.x:.4f} {m.target.y:.4f} {m.target.z:.4f} "
            f"{m.speed:.4f} {m.blend:.4f}"
            for m in self.move_commands
        ]
        lines.append("END")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RobotState:
    t: float
    q: JointConfig
    end_effector: Vec3
    executing: bool
    halted_reason: HaltReason | None = None


def emit_script(
    traj: Trajectory,
    speed: float = DEFAULT_SPEED_MPS,
    blend: float = DEFAULT_BLEND_M,
    name: str = "plan",
) -> RobotScript:
    """One MOVEL per waypoint, in order. The caller is responsible for only
    feeding trajectories whose validation report came back clean."""
    if not traj.waypoints:
        raise UnvalidatedTrajectoryError("trajectory has no waypoints")
    if speed <= 0:
        raise ValueError("speed must be positive")
    if blend < 0:
        raise ValueError("blend must not be negative")
    for w in traj.waypoints:
        if not all(math.isfinite(v) for v in w.position.as_tuple()):
            raise UnvalidatedTrajectoryError(f"non-finite waypoint {w.name}")
    moves = tuple(MoveCommand(w.position, speed, blend) for w in traj.waypoints)
    return RobotScript(name=name, move_commands=moves)


def parse_script(text: str) -> RobotScript:
    """Parse program text; errors carry the offending 1-based line number."""
    lines = text.splitlines()
    if not lines:
        raise ScriptSyntaxError("empty program", 1)
    header = lines[0].split()
    if len(header) != 2 or header[0] != "PROG":
        raise ScriptSyntaxError("expected 'PROG <name>'", 1)
    moves = []
    ended = False
    for lineno, line in enumerate(lines[1:], start=2):
        if ended:
            raise ScriptSyntaxError("content after END", lineno)
        if line == "END":
            ended = True
            continue
        parts = line.split()
        if len(parts) != 6 or parts[0] != "MOVEL":
            raise ScriptSyntaxError("expected 'MOVEL <x> <y> <z> <speed> <blend>'", lineno)
        try:
            x, y, z, speed, blend = (float(p) for p in parts[1:])
        except ValueError:
            raise ScriptSyntaxError("non-numeric MOVEL field", lineno) from None
        if speed <= 0:
            raise ScriptSyntaxError("speed must be positive", lineno)
        if blend < 0:
            raise ScriptSyntaxError("blend must not be negative", lineno)
        moves.append(MoveCommand(Vec3(x, y, z), speed, blend))
    if not ended:
        raise ScriptSyntaxError("missing END", len(lines) + 1)
    return RobotScript(name=header[1], move_commands=tuple(moves))


def format_state_line(state: RobotState) -> str:
    flag = state.halted_reason.value if state.halted_reason else "run"
    qs = " ".join(repr(v) for v in state.q)
    p = state.end_effector
    return f"STATE {state.t!r} {qs} {p.x!r} {p.y!r} {p.z!r} {flag}\n"


def parse_state_line(line: str) -> RobotState:
    parts = line.split()
    if len(parts) != 12 or parts[0] != "STATE":
        raise ValueError(f"not a STATE record: {line!r}")
    t = float(parts[1])
    q = JointConfig.of(float(p) for p in parts[2:8])
    ee = Vec3(float(parts[8]), float(parts[9]), float(parts[10]))
    flag = parts[11]
    if flag == "run":
        return RobotState(t, q, ee, executing=True)
    return RobotState(t, q, ee, executing=False, halted_reason=HaltReason(flag))


class SimulatedController:
    """Executes one program at a time against a scene and a chain.

    Stands in for the vendor control box: straight Cartesian segments
    between waypoints, fixed tick rate, geometric contact stop.
    """

    def __init__(
        self,
        scene: Scene,
        chain: KinematicChain,
        tick_hz: float = DEFAULT_TICK_HZ,
        start_q: JointConfig | None = None,
        ik_cfg: IkConfig = _SIM_IK,
    ):
        if tick_hz <= 0:
            raise ValueError("tick_hz must be positive")
        self.scene = scene
        self.chain = chain
        self.tick_hz = tick_hz
        self.start_q = start_q if start_q is not None else chain.home()
        self.ik_cfg = ik_cfg
        self._obstacles = scene.obstacles()

    def _hit(self, p: Vec3) -> bool:
        return any(aabb_contains(o.bounds, p) for o in self._obstacles)

    def run_script(self, script: RobotScript) -> Iterator[RobotState]:
        dt = 1.0 / self.tick_hz
        q = self.start_q
        ee = fk(self.chain, q)
        t = 0.0
        if not script.move_commands:
            yield RobotState(t, q, ee, executing=False, halted_reason=HaltReason.DONE)
            return
        nominal = ee
        for move in script.move_commands:
            while nominal.distance_to(move.target) > 0.0:
                step = move.speed * dt
                delta = move.target - nominal
                dist = delta.norm()
                if dist <= step:
                    nominal = move.target
                else:
                    nominal = nominal + delta.scaled(step / dist)
                t += dt
                sol = ik(self.chain, nominal, seed=q, cfg=self.ik_cfg)
                if not sol.converged:
                    yield RobotState(
                        t, sol.q, fk(self.chain, sol.q),
                        executing=False, halted_reason=HaltReason.PROTOCOL_ERROR,
                    )
                    return
                q = sol.q
                ee = fk(self.chain, q)
                if self._hit(ee):
                    yield RobotState(
                        t, q, ee, executing=False, halted_reason=HaltReason.COLLISION
                    )
                    return
                yield RobotState(t, q, ee, executing=True)
        t += dt
        yield RobotState(t, q, ee, executing=False, halted_reason=HaltReason.DONE)


class RobotLink(Protocol):
    """Anything that can take a program and stream back execution states."""

    def run(self, script: RobotScript) -> Iterator[RobotState]: ...


class InProcessLink:
    """Direct, socket-free link to a simulated controller."""

    def __init__(self, controller: SimulatedController):
        self._controller = controller
        self._lock = threading.Lock()

    def run(self, script: RobotScript) -> Iterator[RobotState]:
        if not self._lock.acquire(blocking=False):
            raise NackError(0, "busy")
        try:
            yield from self._controller.run_script(script)
        finally:
            self._lock.release()


class ControllerServer:
    """Serves the wire protocol for one SimulatedController over TCP.

    One program executes at a time; a program arriving during execution is
    refused with ``NACK 0 busy``. Each connection may submit any number of
    programs in sequence.
    """

    def __init__(
        self,
        controller: SimulatedController,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
    ):
        self.controller = controller
        self.host = host
        self.port = port
        self._sock: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._exec_lock = threading.Lock()
        self._stopping = threading.Event()

    def start(self) -> int:
        """Bind, begin accepting, and return the bound port."""
        self._sock = socket.create_server((self.host, self.port))
        self.port = self._sock.getsockname()[1]
        accept = threading.Thread(target=self._accept_loop, daemon=True)
        accept.start()
        self._threads.append(accept)
        return self.port

    def stop(self) -> None:
        self._stopping.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass

    def __enter__(self) -> "ControllerServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    def _accept_loop(self) -> None:
        assert self._sock is not None
        while not self._stopping.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            worker = threading.Thread(target=self._serve, args=(conn,), daemon=True)
            worker.start()
            self._threads.append(worker)

    def _serve(self, conn: socket.socket) -> None:
        reader = conn.makefile("r", encoding="utf-8", newline="\n")
        writer = conn.makefile("w", encoding="utf-8", newline="\n")
        try:
            while not self._stopping.is_set():
                program = self._read_program(reader, writer)
                if program is None:
                    return
                if not self._exec_lock.acquire(blocking=False):
                    writer.write("NACK 0 busy\n")
                    writer.flush()
                    continue
                try:
                    writer.write("ACK\n")
                    writer.flush()
                    for state in self.controller.run_script(program):
                        writer.write(format_state_line(state))
                        writer.flush()  # one record per flush: atomic lines
                finally:
                    self._exec_lock.release()
        except (OSError, ValueError):
            pass  # client went away
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def _read_program(self, reader, writer) -> RobotScript | None:
        lines: list[str] = []
        while True:
            raw = reader.readline()
            if not raw:
                return None
            line = raw.rstrip("\n")
            if not lines and not line.startswith("PROG"):
                writer.write("NACK 1 expected PROG header\n")
                writer.flush()
                continue
            lines.append(line)
            if line == "END":
                break
        try:
            return parse_script("\n".join(lines) + "\n")
        except ScriptSyntaxError as exc:
            writer.write(f"NACK {exc.line} {exc.reason}\n")
            writer.flush()
            return self._read_program(reader, writer)


class TcpRobotLink:
    """Client side of the wire protocol."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        try:
            self._conn = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._reader = self._conn.makefile("r", encoding="utf-8", newline="\n")
        self._writer = self._conn.makefile("w", encoding="utf-8", newline="\n")

    def close(self) -> None:
        for stream in (self._reader, self._writer):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self._conn.close()
        except OSError:
            pass

    def __enter__(self) -> "TcpRobotLink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def send_program(self, script: RobotScript) -> str:
        """Upload the program text; block until the controller answers."""
        try:
            self._writer.write(script.text)
            self._writer.flush()
            reply = self._reader.readline()
        except (OSError, ValueError) as exc:
            raise TransportError(f"connection lost during upload: {exc}") from exc
        if not reply:
            raise TransportError("connection closed before acknowledgment")
        reply = reply.rstrip("\n")
        if reply == "ACK":
            return reply
        if reply.startswith("NACK"):
            parts = reply.split(" ", 2)
            line = int(parts[1]) if len(parts) > 1 and parts[1].isdigit() else 0
            reason = parts[2] if len(parts) > 2 else "rejected"
            raise NackError(line, reason)
        raise TransportError(f"unexpected controller reply {reply!r}")

    def states(self) -> Iterator[RobotState]:
        """Yield STATE records until the terminal one."""
        while True:
            try:
                raw = self._reader.readline()
            except (OSError, ValueError) as exc:
                raise TransportError(f"connection lost mid-stream: {exc}") from exc
            if not raw:
                raise TransportError("connection closed mid-stream")
            state = parse_state_line(raw.rstrip("\n"))
            yield state
            if not state.executing:
                return

    def run(self, script: RobotScript) -> Iterator[RobotState]:
        self.send_program(script)
        yield from self.states()
