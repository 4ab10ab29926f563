from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from armloop.api import create_app
from armloop.bundled import default_chain, fixture_text
from armloop.service import SessionEngine, TrajectoryPlanner

INSTRUCTION = "between Stool_1 and Stool_2"


@pytest.fixture()
def client():
    chain = default_chain()
    engine = SessionEngine(TrajectoryPlanner(chain))
    app = create_app(engine, chain)
    with TestClient(app) as tc:
        yield tc


def upload_scene(client, name="scene_stools.json") -> str:
    r = client.post("/scenes", content=fixture_text(name))
    assert r.status_code == 200, r.text
    return r.json()["scene_id"]


def make_session(client, scene_id, instruction=INSTRUCTION, mode="reference") -> dict:
    r = client.post(
        "/sessions",
        json={"scene_id": scene_id, "instruction": instruction, "mode": mode},
    )
    assert r.status_code == 200, r.text
    return r.json()


def read_stream_until_terminal(client, session_id) -> list[dict]:
    events = []
    with client.stream("GET", f"/sessions/{session_id}/stream") as response:
        assert response.status_code == 200
        for line in response.iter_lines():
            if line.startswith("data: "):
                events.append(json.loads(line[len("data: "):]))
    return events


def test_scene_upload_and_fetch(client):
    scene_id = upload_scene(client)
    doc = client.get(f"/scenes/{scene_id}").json()
    names = [o["name"] for o in doc["objects"]]
    assert names == ["Arm", "Stool_1", "Stool_2", "Table", "Plant"]
    assert doc["reachability_sphere"]["radius"] == 1.3


def test_scene_rejections(client):
    assert client.post("/scenes", content="{nope").status_code == 422
    assert client.get("/scenes/missing").status_code == 404
    no_robot = json.loads(fixture_text("scene_stools.json"))
    no_robot["objects"] = [o for o in no_robot["objects"] if o["role"] != "robot"]
    assert client.post("/scenes", content=json.dumps(no_robot)).status_code == 422


def test_chain_endpoint(client):
    doc = client.get("/chain").json()
    assert len(doc) == 6
    assert doc[0]["name"] == "base"


def test_session_lifecycle_over_http(client):
    scene_id = upload_scene(client)
    snap = make_session(client, scene_id)
    sid = snap["id"]
    assert snap["status"] == "awaiting-approval"
    assert len(snap["candidate"]["waypoints"]) == 5
    assert snap["report"]["overall"] is True

    got = client.get(f"/sessions/{sid}").json()
    assert got == snap

    patched = client.patch(
        f"/sessions/{sid}/waypoints/2", json={"position": [0.0, 0.0, 1.2]}
    )
    assert patched.status_code == 200
    body = patched.json()
    assert body["candidate"]["waypoints"][2]["provenance"] == "human-edit"
    assert body["report"]["overall"] is True

    assert client.post(f"/sessions/{sid}/approve").json()["status"] == "approved"

    # edits are locked once approved
    locked = client.patch(
        f"/sessions/{sid}/waypoints/2", json={"position": [0.0, 0.0, 1.1]}
    )
    assert locked.status_code == 409

    r = client.post(f"/sessions/{sid}/execute")
    assert r.status_code == 200
    assert r.json()["status"] == "executing"

    events = read_stream_until_terminal(client, sid)
    statuses = [e["status"] for e in events if e["type"] == "status"]
    assert statuses[-1] == "done"
    states = [e for e in events if e["type"] == "state"]
    assert states, "no robot states streamed"
    final = states[-1]
    assert final["halted_reason"] == "done"
    ee = final["end_effector"]
    assert abs(ee[0] - (-0.5)) < 1e-3 and abs(ee[1]) < 1e-3 and abs(ee[2] - 0.9) < 1e-3

    assert client.get(f"/sessions/{sid}").json()["status"] == "done"


def test_session_error_paths(client):
    scene_id = upload_scene(client)
    r = client.post(
        "/sessions", json={"scene_id": "missing", "instruction": INSTRUCTION}
    )
    assert r.status_code == 404
    r = client.post("/sessions", json={"scene_id": scene_id, "instruction": "  "})
    assert r.status_code == 422
    r = client.post(
        "/sessions",
        json={"scene_id": scene_id, "instruction": INSTRUCTION, "mode": "psychic"},
    )
    assert r.status_code == 422

    # unresolvable targets: session comes back failed rather than an HTTP error
    snap = make_session(client, scene_id, instruction="do a flip")
    assert snap["status"] == "failed"

    assert client.get("/sessions/missing").status_code == 404
    assert client.post("/sessions/missing/approve").status_code == 404


def test_approve_blocked_on_dirty_report(client):
    scene_id = upload_scene(client, "scene_blocked.json")
    snap = make_session(client, scene_id)
    sid = snap["id"]
    assert snap["report"]["overall"] is False
    r = client.post(f"/sessions/{sid}/approve")
    assert r.status_code == 422
    r = client.post(f"/sessions/{sid}/execute")
    assert r.status_code == 409  # still awaiting approval


def test_patch_validation_errors(client):
    scene_id = upload_scene(client)
    sid = make_session(client, scene_id)["id"]
    r = client.patch(f"/sessions/{sid}/waypoints/2", json={"position": [1.0, 2.0]})
    assert r.status_code == 422
    r = client.patch(f"/sessions/{sid}/waypoints/99", json={"position": [0, 0, 1]})
    assert r.status_code == 404


def test_animation_endpoints(client):
    names = client.get("/animations").json()
    assert "bow.anim.txt" in names and "saying_yes.frames.txt" in names

    bow = client.get("/animations/bow.anim.txt").json()
    assert bow["duration"] == 5.020
    elbow = bow["tracks"][2]
    assert elbow["keys"][2] == [2.020, -1.519]

    yes = client.get("/animations/saying_yes.frames.txt").json()
    assert len(yes["tracks"]) == 6
    assert yes["tracks"][2]["keys"][1] == [0.5, 1.0]

    raw = client.get("/animations/bow.anim.txt/raw")
    assert raw.text == fixture_text("bow.anim.txt")

    assert client.get("/animations/nope.anim.txt").status_code == 404
