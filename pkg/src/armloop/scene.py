"""Semantic workspace model: named boxes, the robot base, and a reach sphere.

Everything lives in a right-handed, z-up frame with lengths in meters and
angles in radians. Scene values are immutable after loading; "changing" the
world means loading a new scene.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum


class SceneSyntaxError(ValueError):
    """Scene text is not well-formed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SceneSemanticError(ValueError):
    """Scene text parsed but violates a model invariant."""


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise SceneSemanticError(f"non-finite component in {self!r}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def distance_to(self, other: "Vec3") -> float:
        return (self - other).norm()

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @staticmethod
    def of(seq) -> "Vec3":
        x, y, z = (float(v) for v in seq)
        return Vec3(x, y, z)


def lerp(a: Vec3, b: Vec3, t: float) -> Vec3:
    return Vec3(
        a.x + (b.x - a.x) * t,
        a.y + (b.y - a.y) * t,
        a.z + (b.z - a.z) * t,
    )


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box given by center and half-sizes."""

    center: Vec3
    extents: Vec3

    def __post_init__(self):
        if min(self.extents.x, self.extents.y, self.extents.z) < 0:
            raise SceneSemanticError(f"negative extents {self.extents!r}")

    @property
    def min(self) -> Vec3:
        return self.center - self.extents

    @property
    def max(self) -> Vec3:
        return self.center + self.extents

    def contains(self, p: Vec3) -> bool:
        lo, hi = self.min, self.max
        return (
            lo.x <= p.x <= hi.x
            and lo.y <= p.y <= hi.y
            and lo.z <= p.z <= hi.z
        )


class Role(str, Enum):
    OBSTACLE = "obstacle"
    TARGET_SURFACE = "target-surface"
    ROBOT = "robot"
    MARKER = "marker"


@dataclass(frozen=True)
class SceneObject:
    name: str
    bounds: Aabb
    role: Role

    def __post_init__(self):
        if not self.name:
            raise SceneSemanticError("object with empty name")
        if self.role in (Role.OBSTACLE, Role.TARGET_SURFACE):
            e = self.bounds.extents
            if max(e.x, e.y, e.z) <= 0:
                raise SceneSemanticError(
                    f"{self.role.value} {self.name!r} has no positive extent"
                )


@dataclass(frozen=True)
class ReachabilitySphere:
    center: Vec3
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise SceneSemanticError(f"nonpositive sphere radius {self.radius}")

    def contains(self, p: Vec3) -> bool:
        return p.distance_to(self.center) <= self.radius

    def closest_point(self, p: Vec3) -> Vec3:
        d = p - self.center
        n = d.norm()
        if n <= self.radius:
            return p
        return self.center + d.scaled(self.radius / n)


@dataclass(frozen=True)
class BasePose:
    position: Vec3
    yaw: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.yaw):
            raise SceneSemanticError("non-finite base yaw")


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    sphere: ReachabilitySphere
    base_pose: BasePose
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        names = [o.name for o in self.objects]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise SceneSemanticError(f"duplicate object names: {sorted(dupes)}")
        robots = [o for o in self.objects if o.role is Role.ROBOT]
        if len(robots) != 1:
            raise SceneSemanticError(
                f"scene must contain exactly one robot object, found {len(robots)}"
            )

    @property
    def robot(self) -> SceneObject:
        return next(o for o in self.objects if o.role is Role.ROBOT)

    def obstacles(self) -> tuple[SceneObject, ...]:
        return tuple(o for o in self.objects if o.role is Role.OBSTACLE)

    def target_surfaces(self) -> tuple[SceneObject, ...]:
        return tuple(o for o in self.objects if o.role is Role.TARGET_SURFACE)

    def find(self, name: str) -> SceneObject:
        for o in self.objects:
            if o.name == name:
                return o
        raise KeyError(name)


def top_center(obj: SceneObject) -> Vec3:
    """Center of the box's top face: where things get placed on a surface."""
    b = obj.bounds
    return Vec3(b.center.x, b.center.y, b.center.z + b.extents.z)


def sphere_contains(s: ReachabilitySphere, p: Vec3) -> bool:
    return s.contains(p)


def sphere_closest_point(s: ReachabilitySphere, p: Vec3) -> Vec3:
    return s.closest_point(p)


def aabb_contains(b: Aabb, p: Vec3) -> bool:
    return b.contains(p)


_OBJECT_KEYS = {"name", "role", "center", "extents"}
_SPHERE_KEYS = {"center", "radius"}
_BASE_KEYS = {"position", "yaw"}
_TOP_KEYS = {"objects", "reachability_sphere", "base_pose"}


def _vec(raw, where: str) -> Vec3:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise SceneSemanticError(f"{where}: expected [x, y, z], got {raw!r}")
    try:
        return Vec3.of(raw)
    except (TypeError, ValueError) as exc:
        raise SceneSemanticError(f"{where}: {exc}") from exc


def load_scene(source: str) -> Scene:
    """Parse a scene document (JSON text, schema below) into a Scene.

    Schema: {"objects": [{"name", "role", "center", "extents"}, ...],
    "reachability_sphere": {"center", "radius"}, "base_pose": {"position",
    "yaw"}}. Unknown keys are ignored and reported in Scene.warnings.
    """
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SceneSyntaxError(exc.msg, line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise SceneSemanticError("top level must be an object")

    warnings = [f"unknown key {k!r} ignored" for k in raw if k not in _TOP_KEYS]

    if "objects" not in raw or not isinstance(raw["objects"], list):
        raise SceneSemanticError("missing 'objects' array")
    objects = []
    for i, entry in enumerate(raw["objects"]):
        where = f"objects[{i}]"
        if not isinstance(entry, dict):
            raise SceneSemanticError(f"{where}: expected an object")
        warnings += [
            f"{where}: unknown key {k!r} ignored" for k in entry if k not in _OBJECT_KEYS
        ]
        missing = {"name", "role", "center", "extents"} - entry.keys()
        if missing:
            raise SceneSemanticError(f"{where}: missing {sorted(missing)}")
        try:
            role = Role(entry["role"])
        except ValueError:
            raise SceneSemanticError(
                f"{where}: unknown role {entry['role']!r}"
            ) from None
        objects.append(
            SceneObject(
                name=str(entry["name"]),
                bounds=Aabb(
                    center=_vec(entry["center"], where),
                    extents=_vec(entry["extents"], where),
                ),
                role=role,
            )
        )

    if "reachability_sphere" not in raw or not isinstance(raw["reachability_sphere"], dict):
        raise SceneSemanticError("missing 'reachability_sphere'")
    sp = raw["reachability_sphere"]
    warnings += [
        f"reachability_sphere: unknown key {k!r} ignored" for k in sp if k not in _SPHERE_KEYS
    ]
    if "radius" not in sp:
        raise SceneSemanticError("reachability_sphere: missing 'radius'")
    sphere = ReachabilitySphere(
        center=_vec(sp.get("center", [0.0, 0.0, 0.0]), "reachability_sphere"),
        radius=float(sp["radius"]),
    )

    bp = raw.get("base_pose", {})
    if not isinstance(bp, dict):
        raise SceneSemanticError("base_pose: expected an object")
    warnings += [f"base_pose: unknown key {k!r} ignored" for k in bp if k not in _BASE_KEYS]
    base_pose = BasePose(
        position=_vec(bp.get("position", [0.0, 0.0, 0.0]), "base_pose"),
        yaw=float(bp.get("yaw", 0.0)),
    )

    return Scene(
        objects=tuple(objects),
        sphere=sphere,
        base_pose=base_pose,
        warnings=tuple(warnings),
    )


def serialize_scene(scene: Scene) -> str:
    """Emit the scene back in the document schema; round-trips via load_scene."""
    doc = {
        "objects": [
            {
                "name": o.name,
                "role": o.role.value,
                "center": list(o.bounds.center.as_tuple()),
                "extents": list(o.bounds.extents.as_tuple()),
            }
            for o in scene.objects
        ],
        "reachability_sphere": {
            "center": list(scene.sphere.center.as_tuple()),
            "radius": scene.sphere.radius,
        },
        "base_pose": {
            "position": list(scene.base_pose.position.as_tuple()),
            "yaw": scene.base_pose.yaw,
        },
    }
    return json.dumps(doc, indent=2) + "\n"
