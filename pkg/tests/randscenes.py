"""Randomized pick-and-place scenes for the planner/validator closure tests.

Every emitted scene satisfies the closure preconditions: both endpoints sit
on obstacle-free target surfaces inside the reach sphere, and the lifted
interior height stays inside the sphere. Rejection sampling keeps the
generator honest - the predicates below are the public geometry ops.
"""

from __future__ import annotations

import math

import numpy as np

from armloop.planner import DEFAULT_LIFT_M, DEFAULT_WAYPOINT_COUNT
from armloop.scene import (
    Aabb,
    BasePose,
    ReachabilitySphere,
    Role,
    Scene,
    SceneObject,
    Vec3,
    aabb_contains,
    lerp,
    sphere_contains,
    top_center,
)

SPHERE_RADIUS = 1.3


def random_task_scene(rng: np.random.Generator) -> tuple[Scene, Vec3, Vec3]:
    """One random scene plus the start/end surface points for the planner."""
    while True:
        built = _try_build(rng)
        if built is not None:
            return built


def _try_build(rng):
    stools = []
    for i in range(2):
        rho = rng.uniform(0.35, 0.8)
        ang = rng.uniform(0, 2 * math.pi) if i == 0 else stools[0][1] + rng.uniform(
            math.pi / 3, math.pi
        )
        height = rng.uniform(0.25, 0.85)
        ext = Vec3(rng.uniform(0.08, 0.18), rng.uniform(0.08, 0.18), height / 2)
        center = Vec3(rho * math.cos(ang), rho * math.sin(ang), height / 2)
        stools.append((rho, ang, SceneObject(f"Stool_{i + 1}", Aabb(center, ext), Role.TARGET_SURFACE)))

    top = rng.uniform(max(s[2].bounds.max.z for s in stools), 1.0)
    obs_center = Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), top / 2)
    obs_ext = Vec3(rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5), top / 2)
    table = SceneObject("Table", Aabb(obs_center, obs_ext), Role.OBSTACLE)

    robot = SceneObject("Arm", Aabb(Vec3(0, 0, 0.3), Vec3(0.1, 0.1, 0.3)), Role.ROBOT)
    scene = Scene(
        objects=(robot, stools[0][2], stools[1][2], table),
        sphere=ReachabilitySphere(Vec3(0, 0, 0), SPHERE_RADIUS),
        base_pose=BasePose(Vec3(0, 0, 0), 0.0),
    )

    start = top_center(stools[0][2])
    end = top_center(stools[1][2])
    if not (sphere_contains(scene.sphere, start) and sphere_contains(scene.sphere, end)):
        return None
    if aabb_contains(table.bounds, start) or aabb_contains(table.bounds, end):
        return None
    # lifted interior samples must stay inside the sphere
    lifted_z = top + DEFAULT_LIFT_M
    n = DEFAULT_WAYPOINT_COUNT
    for i in range(1, n - 1):
        p = lerp(start, end, i / (n - 1))
        if not sphere_contains(scene.sphere, Vec3(p.x, p.y, lifted_z)):
            return None
    return scene, start, end
