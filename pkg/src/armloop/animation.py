"""Keyframe clips for expressive arm gestures, in two text formats.

Track format: one line per joint, `path,(t,r),(t,r),...` with seconds and
radians, plus optional `<name> clockwise direction: (v)` lines that record
per-joint direction multipliers. Frame format: bracketed rows of six joint
offsets, one row per frame at a uniform interval; non-bracket lines are
treated as instruction text and skipped.

Playback is linear interpolation in joint space with constant extrapolation
outside the keyed range. Direction signs are rig context: they ride along in
prompts and only multiply in when a clip is turned into robot commands.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .kinematics import JointConfig, KinematicChain, clamp_to_limits

JOINT_PATHS = (
    "Robot/z-up/root/__base",
    "Robot/z-up/root/__base/__shoulder",
    "Robot/z-up/root/__base/__shoulder/__elbow",
    "Robot/z-up/root/__base/__shoulder/__elbow/__wrist-1",
    "Robot/z-up/root/__base/__shoulder/__elbow/__wrist-1/__wrist-2",
    "Robot/z-up/root/__base/__shoulder/__elbow/__wrist-1/__wrist-2/__wrist-3",
)

_CANONICAL_LEAVES = ("base", "shoulder", "elbow", "wrist1", "wrist2", "wrist3")

DEFAULT_FRAME_INTERVAL_S = 0.5


class ClipParseError(ValueError):
    """Clip text rejected; carries 1-based line and column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        at = ""
        if line is not None:
            at = f"line {line}" + (f", column {column}" if column is not None else "")
            at = f" ({at})"
        super().__init__(message + at)
        self.line = line
        self.column = column


def joint_index(path_or_name: str) -> int | None:
    """Map a hierarchy path or bare joint name onto the 0..5 joint order."""
    leaf = path_or_name.rsplit("/", 1)[-1]
    key = re.sub(r"[^a-z0-9]", "", leaf.lower())
    try:
        return _CANONICAL_LEAVES.index(key)
    except ValueError:
        return None


@dataclass(frozen=True)
class KeyframeTrack:
    joint_path: str
    keys: tuple[tuple[float, float], ...]  # (seconds, radians)

    def __post_init__(self):
        if not self.keys:
            raise ValueError(f"track {self.joint_path!r} has no keys")
        times = [t for t, _ in self.keys]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"track {self.joint_path!r} timestamps not increasing")
        if times[0] < 0:
            raise ValueError(f"track {self.joint_path!r} starts before t=0")

    def value_at(self, t: float) -> float:
        keys = self.keys
        if t <= keys[0][0]:
            return keys[0][1]
        if t >= keys[-1][0]:
            return keys[-1][1]
        for (t0, v0), (t1, v1) in zip(keys, keys[1:]):
            if t0 <= t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        raise AssertionError("unreachable: keys are ordered")


@dataclass(frozen=True)
class AnimationClip:
    tracks: tuple[KeyframeTrack, ...]
    direction_signs: tuple[float, float, float, float, float, float] = (1.0,) * 6

    def __post_init__(self):
        paths = [t.joint_path for t in self.tracks]
        if len(set(paths)) != len(paths):
            raise ValueError("duplicate joint paths in clip")
        if len(self.tracks) > 6:
            raise ValueError("a clip addresses at most 6 joints")
        if any(s not in (1.0, -1.0) for s in self.direction_signs):
            raise ValueError("direction signs must be +1 or -1")

    @property
    def duration(self) -> float:
        return max((t.keys[-1][0] for t in self.tracks), default=0.0)


@dataclass(frozen=True)
class FrameClip:
    frames: tuple[tuple[float, float, float, float, float, float], ...]
    frame_interval: float

    def __post_init__(self):
        if self.frame_interval <= 0:
            raise ValueError("frame_interval must be positive")
        if any(len(f) != 6 for f in self.frames):
            raise ValueError("every frame needs exactly 6 joint values")


_NUM = r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"
_PAIR_RE = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*\)")
_DIRECTION_RE = re.compile(
    rf"^\s*(\S+)\s+clockwise direction:\s*\(\s*({_NUM})\s*\)\s*$"
)
_FRAME_ROW_RE = re.compile(r"^\s*\[(.*)\]\s*$")


def parse_track_format(text: str) -> AnimationClip:
    """Parse track-format clip text into an AnimationClip."""
    tracks: list[KeyframeTrack] = []
    signs = [1.0] * 6
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _DIRECTION_RE.match(line)
        if m:
            idx = joint_index(m.group(1))
            if idx is None:
                raise ClipParseError(f"unknown joint {m.group(1)!r}", line=lineno)
            value = float(m.group(2))
            if value not in (1.0, -1.0):
                raise ClipParseError(
                    f"direction sign must be +1 or -1, got {value}", line=lineno
                )
            signs[idx] = value
            continue
        path, sep, rest = line.partition(",")
        if not sep or not path.strip():
            raise ClipParseError("expected 'path,(t,r),...'", line=lineno, column=1)
        keys = []
        rest_offset = (len(raw) - len(raw.lstrip())) + len(path) + 1
        pos = 0
        while pos < len(rest):
            if rest[pos] in ", \t":
                pos += 1
                continue
            m = _PAIR_RE.match(rest, pos)
            if not m:
                raise ClipParseError(
                    "malformed (timestamp,rotation) pair",
                    line=lineno,
                    column=rest_offset + pos + 1,
                )
            keys.append((float(m.group(1)), float(m.group(2))))
            pos = m.end()
        if not keys:
            raise ClipParseError("track has no keyframes", line=lineno)
        times = [t for t, _ in keys]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ClipParseError("timestamps must be strictly increasing", line=lineno)
        try:
            tracks.append(KeyframeTrack(path.strip(), tuple(keys)))
        except ValueError as exc:
            raise ClipParseError(str(exc), line=lineno) from exc
    try:
        return AnimationClip(tuple(tracks), tuple(signs))
    except ValueError as exc:
        raise ClipParseError(str(exc)) from exc


_SIGN_NAMES = ("__base", "__shoulder", "__elbow", "__wrist-1", "__wrist-2", "__wrist-3")


def serialize_track_format(clip: AnimationClip) -> str:
    """Inverse of parse_track_format for values representable at 3 decimals."""
    lines = []
    for idx, sign in enumerate(clip.direction_signs):
        if sign != 1.0:
            lines.append(f"{_SIGN_NAMES[idx]} clockwise direction: ({sign:.1f})")
    for track in clip.tracks:
        pairs = ",".join(f"({t:.3f},{r:.3f})" for t, r in track.keys)
        lines.append(f"{track.joint_path},{pairs}")
    return "\n".join(lines) + "\n"


def parse_frame_format(text: str, frame_interval: float = DEFAULT_FRAME_INTERVAL_S) -> FrameClip:
    """Parse frame-format clip text; non-bracket lines are instruction text."""
    if frame_interval <= 0:
        raise ValueError("frame_interval must be positive")
    frames = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _FRAME_ROW_RE.match(line)
        if not m:
            continue  # instruction / commentary line
        cells = [c.strip() for c in m.group(1).split(",")]
        if len(cells) != 6:
            raise ClipParseError(f"frame row has {len(cells)} values, expected 6", line=lineno)
        try:
            frames.append(tuple(float(c) for c in cells))
        except ValueError as exc:
            raise ClipParseError(f"non-numeric frame value: {exc}", line=lineno) from exc
    if not frames:
        raise ClipParseError("no frame rows found")
    return FrameClip(tuple(frames), frame_interval)


def frames_to_clip(fc: FrameClip) -> AnimationClip:
    """Re-key uniform frames onto the six canonical joint tracks."""
    if not fc.frames:
        raise ValueError("cannot convert an empty frame clip")
    tracks = []
    for j in range(6):
        keys = tuple(
            (i * fc.frame_interval, frame[j]) for i, frame in enumerate(fc.frames)
        )
        tracks.append(KeyframeTrack(JOINT_PATHS[j], keys))
    return AnimationClip(tuple(tracks))


def sample(clip: AnimationClip, t: float, chain: KinematicChain | None = None) -> JointConfig:
    """Joint angles at time t: per-track lerp, constant outside the keyed
    range, zero for joints without a track; clamped when a chain is given."""
    values = [0.0] * 6
    for track in clip.tracks:
        idx = joint_index(track.joint_path)
        if idx is None:
            continue
        values[idx] = track.value_at(t)
    q = JointConfig.of(values)
    if chain is not None:
        q = clamp_to_limits(chain, q)
    return q


def command_stream(
    clip: AnimationClip,
    rate_hz: float,
    chain: KinematicChain | None = None,
):
    """Yield (t, JointConfig) pairs over the clip duration for execution,
    with direction signs multiplied in."""
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    dt = 1.0 / rate_hz
    steps = max(1, int(round(clip.duration * rate_hz)) + 1)
    for i in range(steps):
        t = min(i * dt, clip.duration)
        raw = sample(clip, t)
        signed = JointConfig.of(v * s for v, s in zip(raw, clip.direction_signs))
        if chain is not None:
            signed = clamp_to_limits(chain, signed)
        yield t, signed


ANIMATOR_PREAMBLE = (
    "You're an animator who will be provided the joints on a rigged 3D model "
    "of a robotic arm, and you have to rotate the joints to produce the "
    "requested animation. The joints will be given as a JSON string that "
    "outlines the object hierarchy. \n"
    "You have to output a string that specifies the rotation of movement for "
    "each joint.\n\n"
    "Each subsequent line of the string starts with the joint name, then each "
    "vector in the format (timestamp,rotation), specifing a key frame for the "
    "animation. Rotation is in radians."
)

DEFAULT_RIG = (
    "name:Robot,children:[name:z-up,children:[name:root,children:[name:__base,"
    "rotation:(0.0),children:[name:__shoulder,rotation:(0.0),children:"
    "[name:__elbow,rotation:(0.0),children:[name:__wrist-1,rotation:(0.0),"
    "children:[name:__wrist-2,rotation:(0.0),children:[name:__wrist-3,"
    "rotation:(0.0)]]]]]]]]\n"
    "__base clockwise direction: (1.0)\n"
    "__shoulder clockwise direction: (1.0)\n"
    "__elbow clockwise direction: (-1.0)\n"
    "__wrist-1 clockwise direction: (1.0)\n"
    "__wrist-2 clockwise direction: (1.0)\n"
    "__wrist-3 clockwise direction: (1.0)"
)


def _example_block(instruction: str, clip_text: str) -> str:
    return (
        "# Example:\n"
        "The object you will animate is a **robot**.\n"
        f"Object JSON:\n{DEFAULT_RIG}\n\n"
        f"Instruction: {instruction}\n\n"
        f"{clip_text.rstrip()}"
    )


def build_animation_prompt(instruction: str, rig_description: str | None = None):
    """Few-shot gesture prompt: animator framing, two worked examples, the
    rig to animate, then the instruction. Pair with ModelConfig defaults
    (temperature 0.1) when sending."""
    from .bundled import fixture_text
    from .orchestrator import EmptyInstructionError, PromptBundle

    if not instruction.strip():
        raise EmptyInstructionError("instruction must not be blank")
    if rig_description is None:
        rig_description = DEFAULT_RIG
    examples = (
        _example_block("animate the robot to bow", fixture_text("bow.anim.txt")),
        _example_block(
            "animate the robot shaking as if it's saying no", fixture_text("shake.anim.txt")
        ),
    )
    return PromptBundle(
        system_context=ANIMATOR_PREAMBLE + "\n\n" + "\n\n".join(examples),
        scene_summary=(
            "The object you will animate is a **robot**.\n"
            f"Object JSON:\n{rig_description}"
        ),
        user_instruction=f"Instruction: {instruction}",
        constraints=(),
    )


def clip_to_doc(clip: AnimationClip) -> dict:
    return {
        "duration": clip.duration,
        "direction_signs": list(clip.direction_signs),
        "tracks": [
            {"joint_path": t.joint_path, "keys": [[k, v] for k, v in t.keys]}
            for t in clip.tracks
        ],
    }
