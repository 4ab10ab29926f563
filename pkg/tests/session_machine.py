"""Shared driver for randomized session state-machine property tests.

The stub planner answers instantly with a canned candidate whose validity is
random, and the recording link counts how often the robot is actually
driven, so the safety assertions (no execution without approval, no approval
of a dirty report) can run over tens of thousands of event sequences fast.
"""

from __future__ import annotations

import pytest

from armloop.kinematics import JointConfig
from armloop.planner import (
    Provenance,
    Trajectory,
    ValidationReport,
    Waypoint,
    WaypointCheck,
)
from armloop.robolink import HaltReason, RobotState
from armloop.scene import Vec3
from armloop.service import ValidationFailedError, WrongStateError

OPS = ("plan", "edit", "approve", "execute", "get")


def make_candidate(valid: bool) -> tuple[Trajectory, ValidationReport]:
    traj = Trajectory(
        waypoints=(
            Waypoint("Waypoint_0", Vec3(0.4, 0, 0.5), Provenance.REFERENCE),
            Waypoint("Waypoint_1", Vec3(0.0, 0.2, 0.9), Provenance.REFERENCE),
            Waypoint("Waypoint_2", Vec3(-0.4, 0, 0.5), Provenance.REFERENCE),
        ),
        start_target=Vec3(0.4, 0, 0.5),
        end_target=Vec3(-0.4, 0, 0.5),
    )
    checks = tuple(
        WaypointCheck(w.name, True, () if valid else ("Table",), True)
        for w in traj.waypoints
    )
    return traj, ValidationReport(checks, arc_ok=True, endpoints_ok=True)


class StubPlanner:
    """Instant planner; validity of the 'world' flips per plan call."""

    def __init__(self, chain, rng):
        self.chain = chain
        self.rng = rng
        self.valid_next = True

    def plan(self, scene, instruction, mode):
        valid = bool(self.rng.random() < 0.7)
        self.valid_next = valid
        traj, report = make_candidate(valid)
        return traj, report, []

    def validate(self, scene, traj):
        return make_candidate(self.valid_next)[1]


class RecordingLink:
    def __init__(self):
        self.runs = 0

    def run(self, script):
        self.runs += 1
        q = JointConfig.zeros()
        yield RobotState(0.0, q, Vec3(0, 0, 0), executing=True)
        yield RobotState(
            0.1, q, Vec3(0, 0, 0), executing=False, halted_reason=HaltReason.DONE
        )


def run_random_session(engine, scene, link, rng, instruction="between Stool_1 and Stool_2"):
    """One random event sequence; asserts every safety property inline."""
    sid = engine.create_session(scene, instruction)["id"]
    approved_with_clean_report = False
    for _ in range(int(rng.integers(3, 10))):
        op = OPS[int(rng.integers(0, len(OPS)))]
        before = engine.get(sid)
        hist_len = len(before["history"])
        try:
            if op == "plan":
                engine.plan(sid, "reference")
            elif op == "edit":
                engine.edit_waypoint(sid, 1, Vec3(0.0, 0.1, 0.8))
            elif op == "approve":
                engine.approve(sid)
                assert before["report"]["overall"] is True, "approved a dirty report"
                approved_with_clean_report = True
            elif op == "execute":
                engine.execute(sid, link)
                assert approved_with_clean_report, "executed without approval"
            else:
                engine.get(sid)
        except (WrongStateError, ValidationFailedError):
            after = engine.get(sid)
            assert after["status"] == before["status"], "rejected op changed status"
            assert len(after["history"]) == hist_len, "rejected op touched history"
            continue
        after = engine.get(sid)
        if op != "get":
            assert len(after["history"]) > hist_len, "legal op must append history"
            if before["status"] in ("done", "failed"):
                pytest.fail("terminal state accepted an operation")
