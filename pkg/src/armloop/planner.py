"""Reference waypoint planner and trajectory validator.

The planner lerps between two surface points, lifts interior samples above
the tallest obstacle, and clamps them back into the reach sphere. Endpoints
are never touched, so the emitted path always starts and ends exactly on its
targets. The validator re-checks everything a candidate trajectory (from the
planner, a language model, or a human edit) must satisfy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

from .kinematics import IkConfig, KinematicChain, ik
from .scene import Scene, Vec3, aabb_contains, lerp, sphere_closest_point, sphere_contains

DEFAULT_WAYPOINT_COUNT = 5
DEFAULT_LIFT_M = 0.1
# how big the preview renders each waypoint sphere; not used for planning
WAYPOINT_DISPLAY_SCALE = 0.1

ENDPOINT_TOL_M = 1e-9


class DegenerateCountError(ValueError):
    """Fewer than two waypoints requested."""


class InvalidEndpointError(ValueError):
    """A requested endpoint lies outside the reachability sphere."""


class TrajectoryFormatError(ValueError):
    """Trajectory document text is malformed."""


class Provenance(str, Enum):
    REFERENCE = "reference"
    LLM = "llm"
    HUMAN_EDIT = "human-edit"


@dataclass(frozen=True)
class Waypoint:
    name: str
    position: Vec3
    provenance: Provenance


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[Waypoint, ...]
    start_target: Vec3
    end_target: Vec3

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        names = [w.name for w in self.waypoints]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate waypoint names in {names}")

    def __len__(self) -> int:
        return len(self.waypoints)

    def positions(self) -> tuple[Vec3, ...]:
        return tuple(w.position for w in self.waypoints)


@dataclass(frozen=True)
class WaypointCheck:
    name: str
    in_sphere: bool
    collides_with: tuple[str, ...]
    reachable_ik: bool

    @property
    def clean(self) -> bool:
        return self.in_sphere and not self.collides_with and self.reachable_ik


@dataclass(frozen=True)
class ValidationReport:
    waypoints: tuple[WaypointCheck, ...]
    arc_ok: bool
    endpoints_ok: bool

    @property
    def overall(self) -> bool:
        return (
            all(w.clean for w in self.waypoints) and self.arc_ok and self.endpoints_ok
        )


def generate_arc_waypoints(
    scene: Scene,
    start: Vec3,
    end: Vec3,
    count: int = DEFAULT_WAYPOINT_COUNT,
    lift: float = DEFAULT_LIFT_M,
) -> Trajectory:
    """Evenly sample the start-to-end segment, lifting interior samples.

    An interior sample whose height is at or below the tallest obstacle top
    gets raised to that top plus `lift`, then projected back into the reach
    sphere. The two endpoints pass through unmodified.
    """
    if count < 2:
        raise DegenerateCountError(f"need at least 2 waypoints, got {count}")
    for label, p in (("start", start), ("end", end)):
        if not sphere_contains(scene.sphere, p):
            raise InvalidEndpointError(f"{label} point {p.as_tuple()} outside reach sphere")

    obstacle_tops = [o.bounds.max.z for o in scene.obstacles()]
    max_top = max(obstacle_tops) if obstacle_tops else None

    waypoints = []
    for i in range(count):
        t = i / (count - 1)
        p = lerp(start, end, t)
        if 0 < i < count - 1:
            if max_top is not None and p.z <= max_top:
                p = Vec3(p.x, p.y, max_top + lift)
            p = sphere_closest_point(scene.sphere, p)
        waypoints.append(Waypoint(f"Waypoint_{i}", p, Provenance.REFERENCE))
    return Trajectory(tuple(waypoints), start_target=start, end_target=end)


def validate(
    scene: Scene,
    chain: KinematicChain,
    traj: Trajectory,
    ik_cfg: IkConfig = IkConfig(),
) -> ValidationReport:
    """Check every waypoint for reach-sphere membership, box collisions, and
    IK reachability; check the path forms an arc and hits its targets.

    Endpoint waypoints may touch target surfaces (that is where they rest);
    every other box contact is a collision. IK solves are seeded from the
    previous waypoint's solution so adjacent solves stay cheap.
    """
    solid = [o for o in scene.objects if o.role.value in ("obstacle", "target-surface")]
    last = len(traj) - 1
    seed = chain.home()
    checks = []
    for i, wp in enumerate(traj.waypoints):
        hits = []
        for obj in solid:
            if not aabb_contains(obj.bounds, wp.position):
                continue
            if i in (0, last) and obj.role.value == "target-surface":
                continue  # resting contact with its own surface
            hits.append(obj.name)
        sol = ik(chain, wp.position, seed=seed, cfg=ik_cfg)
        if sol.converged:
            seed = sol.q
        checks.append(
            WaypointCheck(
                name=wp.name,
                in_sphere=sphere_contains(scene.sphere, wp.position),
                collides_with=tuple(hits),
                reachable_ik=sol.converged,
            )
        )

    first_z = traj.waypoints[0].position.z
    last_z = traj.waypoints[last].position.z
    arc_ok = any(
        wp.position.z > max(first_z, last_z) for wp in traj.waypoints[1:last]
    )
    endpoints_ok = (
        traj.waypoints[0].position.distance_to(traj.start_target) <= ENDPOINT_TOL_M
        and traj.waypoints[last].position.distance_to(traj.end_target) <= ENDPOINT_TOL_M
    )
    return ValidationReport(tuple(checks), arc_ok=arc_ok, endpoints_ok=endpoints_ok)


def apply_edit(traj: Trajectory, index: int, new_pos: Vec3) -> Trajectory:
    """Move one waypoint, marking it human-edited. Validity is not enforced
    here; run validate() on the result."""
    if not 0 <= index < len(traj):
        raise IndexError(f"waypoint index {index} out of range 0..{len(traj) - 1}")
    moved = replace(traj.waypoints[index], position=new_pos, provenance=Provenance.HUMAN_EDIT)
    waypoints = list(traj.waypoints)
    waypoints[index] = moved
    return replace(traj, waypoints=tuple(waypoints))


# --- trajectory interchange document ---------------------------------------


def trajectory_to_doc(traj: Trajectory) -> dict:
    return {
        "waypoints": [
            {
                "name": w.name,
                "position": list(w.position.as_tuple()),
                "provenance": w.provenance.value,
            }
            for w in traj.waypoints
        ],
        "start_target": list(traj.start_target.as_tuple()),
        "end_target": list(traj.end_target.as_tuple()),
    }


def doc_to_trajectory(doc: dict) -> Trajectory:
    try:
        waypoints = tuple(
            Waypoint(
                name=str(w["name"]),
                position=Vec3.of(w["position"]),
                provenance=Provenance(w["provenance"]),
            )
            for w in doc["waypoints"]
        )
        return Trajectory(
            waypoints=waypoints,
            start_target=Vec3.of(doc["start_target"]),
            end_target=Vec3.of(doc["end_target"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TrajectoryFormatError(f"bad trajectory document: {exc}") from exc


def dump_trajectory(traj: Trajectory) -> str:
    return json.dumps(trajectory_to_doc(traj), indent=2) + "\n"


def load_trajectory(text: str) -> Trajectory:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TrajectoryFormatError(f"line {exc.lineno}: {exc.msg}") from exc
    return doc_to_trajectory(doc)


def report_to_doc(report: ValidationReport) -> dict:
    return {
        "waypoints": [
            {
                "name": c.name,
                "in_sphere": c.in_sphere,
                "collides_with": list(c.collides_with),
                "reachable_ik": c.reachable_ik,
            }
            for c in report.waypoints
        ],
        "arc_ok": report.arc_ok,
        "endpoints_ok": report.endpoints_ok,
        "overall": report.overall,
    }
