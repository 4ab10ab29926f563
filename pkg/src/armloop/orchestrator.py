"""Scene-conditioned prompt assembly and constrained reply parsing.

The model is asked for a fenced WAYPOINTS block instead of executable code,
so replies stay parseable and auditable. A replay client keyed by prompt
digest makes every run reproducible offline; live transports implement the
same one-method interface.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .planner import Provenance, Trajectory, Waypoint
from .scene import Scene, SceneObject, Vec3

Message = tuple[str, str]  # (role, content)

SYSTEM_CONTEXT_TEMPLATE = (
    "You are controlling a robot arm named {robot}. "
    "You should first establish the mesh boundaries of the objects in the scene. "
    "Do not move the robot.\n"
    "Reply with exactly one fenced code block labeled WAYPOINTS. Inside the "
    "block write one waypoint per line, in travel order, as `name: (x, y, z)` "
    "with coordinates in meters relative to the robot base. Use a unique name "
    "per waypoint."
)

GOAL_CONSTRAINT_TEMPLATE = (
    "Your goal is to find at least 5 waypoints that allows the robot end point "
    "to move from the TOP surface of {start} to the TOP surface of {end}."
)
ENDPOINT_CONSTRAINT = "The first and final waypoint should be the start and end destinations."
COLLISION_CONSTRAINT = (
    "The middle waypoints should allow the robot to travel in air but these "
    "waypoints should avoid colliding with all objects (like table) in the scene."
)
ARC_CONSTRAINT = "The middle waypoints should form some sort of arc or curve."
SPHERE_CONSTRAINT = "The robot's end point can not reach beyond the reachability sphere."

CORRECTIVE_MESSAGE = (
    "Your previous reply could not be parsed. Reply again with exactly one "
    "fenced code block labeled WAYPOINTS containing one `name: (x, y, z)` "
    "line per waypoint."
)

_STOPWORDS = frozenset(
    "a an the and or to from of between move go then top surface robot arm "
    "with on in at it this that please pick place program create make do".split()
)


class EmptyInstructionError(ValueError):
    """The user instruction was blank."""


class TransportError(RuntimeError):
    """The chat client could not produce a reply."""


class TargetResolutionError(ValueError):
    """The instruction names no resolvable pair of target surfaces."""


@dataclass(frozen=True)
class ModelConfig:
    model_name: str = "gpt4-1106-preview"
    temperature: float = 0.1
    max_tokens: int = 1024

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "note"
    message: str
    line: int | None = None

    def __str__(self) -> str:
        at = f" (line {self.line})" if self.line is not None else ""
        return f"{self.severity}: {self.message}{at}"


class ParseFailure(ValueError):
    """Reply text had no usable WAYPOINTS block."""

    def __init__(self, message: str, diagnostics: tuple[Diagnostic, ...] = ()):
        detail = "; ".join(str(d) for d in diagnostics)
        super().__init__(message if not detail else f"{message}: {detail}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class PromptBundle:
    system_context: str
    scene_summary: str
    user_instruction: str
    constraints: tuple[str, ...]
    diagnostics: tuple[str, ...] = ()

    def render(self) -> str:
        parts = [self.system_context, self.scene_summary]
        parts += list(self.constraints)
        parts.append(self.user_instruction)
        return "\n\n".join(p for p in parts if p)

    def messages(self) -> tuple[Message, ...]:
        user = "\n\n".join(
            p for p in (self.scene_summary, *self.constraints, self.user_instruction) if p
        )
        return (("system", self.system_context), ("user", user))


@dataclass(frozen=True)
class LlmReply:
    raw_text: str
    parsed: Trajectory | None
    parse_diagnostics: tuple[Diagnostic, ...] = field(default=())

    def __post_init__(self):
        if self.parsed is not None and any(
            d.severity == "error" for d in self.parse_diagnostics
        ):
            raise ValueError("a parsed reply cannot carry error diagnostics")


class ChatClient(Protocol):
    """One in-flight request at a time; raises TransportError on failure."""

    def send(self, messages: Sequence[Message], config: ModelConfig) -> str: ...


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _fmt_vec(v: Vec3) -> str:
    return f"({v.x:.3f}, {v.y:.3f}, {v.z:.3f})"


def summarize_scene(scene: Scene, instruction: str) -> str:
    """Deterministic scene digest biased toward what the instruction mentions.

    Always lists the robot and the reach sphere; adds every object whose name
    shares a token with the instruction, plus all obstacles. An empty
    instruction lists everything.
    """
    wanted = set(_tokens(instruction))
    robot = scene.robot
    lines = [
        f"- {robot.name} (robot): center={_fmt_vec(robot.bounds.center)} "
        f"extents={_fmt_vec(robot.bounds.extents)}",
        f"- reachability sphere: center={_fmt_vec(scene.sphere.center)} "
        f"radius={scene.sphere.radius:.3f}",
    ]
    for obj in scene.objects:
        if obj is robot:
            continue
        mentioned = not wanted or bool(wanted & set(_tokens(obj.name)))
        if mentioned or obj.role.value == "obstacle":
            lines.append(
                f"- {obj.name} ({obj.role.value}): center={_fmt_vec(obj.bounds.center)} "
                f"extents={_fmt_vec(obj.bounds.extents)}"
            )
    return "\n".join(lines)


@dataclass(frozen=True)
class TargetResolution:
    start: SceneObject | None
    end: SceneObject | None
    notes: tuple[str, ...] = ()

    @property
    def resolved(self) -> bool:
        return self.start is not None and self.end is not None


def resolve_targets(scene: Scene, instruction: str) -> TargetResolution:
    """Ground the instruction onto two target surfaces by token overlap.

    The two best-scoring surfaces win (ties broken by scene order); the one
    mentioned first in the instruction becomes the start. Instruction tokens
    that match no object at all are reported in the notes.
    """
    instr_tokens = _tokens(instruction)
    instr_set = set(instr_tokens)

    all_object_tokens = set()
    for obj in scene.objects:
        all_object_tokens |= set(_tokens(obj.name))
    notes = tuple(
        f"no scene object matches {tok!r}"
        for tok in dict.fromkeys(instr_tokens)
        if tok not in all_object_tokens and tok not in _STOPWORDS
    )

    scored = []
    for order, obj in enumerate(scene.target_surfaces()):
        score = len(instr_set & set(_tokens(obj.name)))
        if score > 0:
            scored.append((-score, order, obj))
    scored.sort(key=lambda item: item[:2])
    if len(scored) < 2:
        return TargetResolution(
            None,
            None,
            notes + ("instruction does not name two target surfaces",),
        )
    a, b = scored[0][2], scored[1][2]

    def first_mention(obj: SceneObject, other: SceneObject) -> int:
        own = set(_tokens(obj.name))
        distinct = own - set(_tokens(other.name))
        for pool in (distinct, own):
            hits = [i for i, tok in enumerate(instr_tokens) if tok in pool]
            if hits:
                return min(hits)
        return len(instr_tokens)

    if first_mention(b, a) < first_mention(a, b):
        a, b = b, a
    return TargetResolution(a, b, notes)


def build_prompt(
    scene: Scene, instruction: str, cfg: ModelConfig = ModelConfig()
) -> PromptBundle:
    """Instantiate the waypoint-task template for this scene and instruction."""
    if not instruction.strip():
        raise EmptyInstructionError("instruction must not be blank")
    res = resolve_targets(scene, instruction)
    start_name = res.start.name if res.start is not None else "the start surface"
    end_name = res.end.name if res.end is not None else "the end surface"
    constraints = (
        GOAL_CONSTRAINT_TEMPLATE.format(start=start_name, end=end_name),
        ENDPOINT_CONSTRAINT,
        COLLISION_CONSTRAINT,
        ARC_CONSTRAINT,
        SPHERE_CONSTRAINT,
    )
    return PromptBundle(
        system_context=SYSTEM_CONTEXT_TEMPLATE.format(robot=scene.robot.name),
        scene_summary=summarize_scene(scene, instruction),
        user_instruction=instruction,
        constraints=constraints,
        diagnostics=res.notes,
    )


_BLOCK_RE = re.compile(r"```[ \t]*WAYPOINTS[ \t]*\n(.*?)```", re.DOTALL)
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_WAYPOINT_LINE_RE = re.compile(
    rf"^\s*([A-Za-z0-9_.-]+)\s*:\s*\(\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*\)\s*$"
)


def parse_waypoint_reply(raw: str) -> Trajectory:
    """Extract the last WAYPOINTS block and build a trajectory from it."""
    blocks = _BLOCK_RE.findall(raw)
    if not blocks:
        raise ParseFailure(
            "no WAYPOINTS block in reply",
            (Diagnostic("error", "expected a fenced block labeled WAYPOINTS"),),
        )
    errors: list[Diagnostic] = []
    waypoints: list[Waypoint] = []
    seen = set()
    for lineno, line in enumerate(blocks[-1].splitlines(), start=1):
        if not line.strip():
            continue
        m = _WAYPOINT_LINE_RE.match(line)
        if not m:
            errors.append(
                Diagnostic("error", f"expected 'name: (x, y, z)', got {line.strip()!r}", lineno)
            )
            continue
        name = m.group(1)
        if name in seen:
            errors.append(Diagnostic("error", f"duplicate waypoint name {name!r}", lineno))
            continue
        seen.add(name)
        waypoints.append(
            Waypoint(
                name=name,
                position=Vec3(float(m.group(2)), float(m.group(3)), float(m.group(4))),
                provenance=Provenance.LLM,
            )
        )
    if errors:
        raise ParseFailure("unparseable waypoint lines", tuple(errors))
    if not waypoints:
        raise ParseFailure(
            "WAYPOINTS block is empty", (Diagnostic("error", "no waypoint lines"),)
        )
    return Trajectory(
        waypoints=tuple(waypoints),
        start_target=waypoints[0].position,
        end_target=waypoints[-1].position,
    )


def request_waypoints(
    client: ChatClient, bundle: PromptBundle, cfg: ModelConfig = ModelConfig()
) -> LlmReply:
    """Send the prompt, parse the reply, retry once with a corrective nudge."""
    messages = bundle.messages()
    raw = client.send(messages, cfg)
    try:
        return LlmReply(raw_text=raw, parsed=parse_waypoint_reply(raw))
    except ParseFailure as first:
        retry_messages = messages + (("assistant", raw), ("user", CORRECTIVE_MESSAGE))
        raw2 = client.send(retry_messages, cfg)
        try:
            parsed = parse_waypoint_reply(raw2)
        except ParseFailure as second:
            merged = tuple(
                Diagnostic(d.severity, f"attempt {i}: {d.message}", d.line)
                for i, failure in enumerate((first, second), start=1)
                for d in failure.diagnostics
            )
            raise ParseFailure("reply unparseable after corrective retry", merged) from second
        notes = (
            Diagnostic("note", "first reply was unparseable; corrective retry succeeded"),
        )
        return LlmReply(raw_text=raw2, parsed=parsed, parse_diagnostics=notes)


def prompt_digest(messages: Sequence[Message]) -> str:
    """Stable digest of a rendered message list; the replay fixture key."""
    canonical = "\n".join(f"[{role}]\n{content}" for role, content in messages)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReplayClient:
    """Deterministic stand-in for a live model: digest of the prompt in,
    canned reply out. Used by every offline test and demo run."""

    def __init__(self, replies: dict[str, str], default: str | None = None):
        self._replies = dict(replies)
        self._default = default

    @classmethod
    def from_file(cls, path) -> "ReplayClient":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(doc.get("replies", {}), doc.get("default"))

    def send(self, messages: Sequence[Message], config: ModelConfig) -> str:
        key = prompt_digest(messages)
        if key in self._replies:
            return self._replies[key]
        if self._default is not None:
            return self._default
        raise TransportError(f"replay fixture has no reply for digest {key[:12]}...")


def write_replay_fixture(path, replies: dict[str, str], default: str | None = None) -> None:
    doc: dict = {"replies": replies}
    if default is not None:
        doc["default"] = default
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
