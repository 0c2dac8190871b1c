"""Service endpoints, error mapping, and the event push channel."""

from __future__ import annotations

import base64
import threading

import pytest
from fastapi.testclient import TestClient

from chainweave.project import Project, canonical_json
from chainweave.service import OrchestratorService, build_app

from conftest import FixedClock, InProcessHost, cohort_artifact, solid_png
from test_engine import small_graph, small_spec


@pytest.fixture
def service(tmp_path):
    project = Project(id="demo", workflow=small_spec(), graph=small_graph())
    from chainweave.project import save_project, write_artifact

    save_project(project, tmp_path / "project.json")
    write_artifact(tmp_path / "artifacts", cohort_artifact("cohort"))

    def host_factory(project):
        host = InProcessHost([t.id for t in project.graph.tools])
        host.echo[("t1", "out")] = "in"
        return host

    return OrchestratorService(
        project,
        project_path=tmp_path / "project.json",
        host_factory=host_factory,
        clock=FixedClock(),
    )


@pytest.fixture
def client(service):
    return TestClient(build_app(service))


def test_get_workflow_and_graph(client):
    workflow = client.get("/api/v1/workflow").json()
    assert [s["id"] for s in workflow["steps"]] == ["s1", "s2", "s3"]
    graph = client.get("/api/v1/graph").json()
    assert {t["id"] for t in graph["tools"]} == {"t1", "t2", "t3"}
    assert client.get("/api/v1/validation").json()["ok"] is True


def test_link_roundtrip_byte_exact(client, service):
    before = canonical_json(client.get("/api/v1/graph").json())
    body = {
        "id": "lx",
        "source": "t2",
        "target": "t3",
        "kind": "dataflow",
        "data": {"sourceChannel": "out", "targetChannel": "in", "pipeline": "identity"},
    }
    created = client.post("/api/v1/graph/links", json=body)
    assert created.status_code == 200
    fetched = client.get("/api/v1/graph").json()
    added = [l for l in fetched["links"] if l["id"] == "lx"]
    assert added == [body]
    deleted = client.delete("/api/v1/graph/links/lx")
    assert deleted.status_code == 200
    after = canonical_json(client.get("/api/v1/graph").json())
    assert after == before


def test_link_error_mapping(client):
    missing = client.post(
        "/api/v1/graph/links",
        json={"id": "lx", "source": "t1", "target": "ghost", "kind": "activation"},
    )
    assert missing.status_code == 400
    assert missing.json()["code"] == "DANGLING_REFERENCE"
    duplicate = client.post(
        "/api/v1/graph/links",
        json={"id": "l3", "source": "t1", "target": "t2", "kind": "activation"},
    )
    assert duplicate.status_code == 400
    assert duplicate.json()["code"] == "DUPLICATE_ID"


def test_pipeline_and_layout_mutations(client):
    response = client.put(
        "/api/v1/graph/pipelines/slim",
        json={"steps": [{"op": "select-columns", "names": ["age"]}]},
    )
    assert response.status_code == 200
    assert any(p["id"] == "slim" for p in response.json()["pipelines"])
    response = client.put(
        "/api/v1/graph/layouts",
        json={
            "id": "vx", "step": "s2", "toolset": "B", "template": "custom",
            "regions": [[0, 0, 0.5, 1], [0.5, 0, 0.5, 1]],
            "slots": ["t1", "t2"],
        },
    )
    assert response.status_code == 200
    assert any(a["id"] == "vx" for a in response.json()["layouts"])


def test_session_walkthrough_with_events(client):
    assert client.post("/api/v1/session").status_code == 200
    record = client.post("/api/v1/session/enter-step", json={"step": "s1"}).json()
    assert record["seq"] == 1 and record["step"] == "s1"

    illegal = client.post("/api/v1/session/enter-step", json={"step": "s3"})
    assert illegal.status_code == 400
    assert illegal.json()["code"] == "ILLEGAL_TRANSITION"

    client.post("/api/v1/session/notes", json={"text": "collected"})
    client.post("/api/v1/session/status", json={"status": "done"})
    image = base64.b64encode(solid_png((7, 7, 7))).decode("ascii")
    capture = client.post(
        "/api/v1/session/captures", json={"label": "view", "imageBase64": image}
    ).json()

    client.post("/api/v1/session/enter-step", json={"step": "s2"})
    session = client.get("/api/v1/session").json()
    assert session["currentSeq"] == 2
    assert len(session["records"]) == 2
    assert session["records"][0]["status"] == "done"
    assert session["records"][0]["captures"][0]["id"] == capture["id"]

    results = client.get("/api/v1/session/results").json()
    assert [g["seq"] for g in results] == [1]

    with client.websocket_connect("/api/v1/events?since=0") as ws:
        kinds = []
        seqs = []
        while len(kinds) < 7:
            event = ws.receive_json()
            kinds.append(event["kind"])
            seqs.append(event["seq"])
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
    assert kinds[0] == "tool-state-changed"
    assert "step-entered" in kinds
    assert "note-added" in kinds
    assert "capture-added" in kinds
    assert "status-changed" in kinds


def test_event_replay_from_since(client, service):
    client.post("/api/v1/session")
    client.post("/api/v1/session/enter-step", json={"step": "s1"})
    total = len(service.events)
    assert total >= 2
    with client.websocket_connect(f"/api/v1/events?since={total - 2}") as ws:
        first = ws.receive_json()
        assert first["seq"] == total - 1
        second = ws.receive_json()
        assert second["seq"] == total


def test_composition_endpoints(client):
    client.post("/api/v1/session")
    client.post("/api/v1/session/enter-step", json={"step": "s1"})
    red = base64.b64encode(solid_png((200, 0, 0))).decode("ascii")
    blue = base64.b64encode(solid_png((0, 0, 200))).decode("ascii")
    c1 = client.post("/api/v1/session/captures", json={"label": "a", "imageBase64": red}).json()
    c2 = client.post("/api/v1/session/captures", json={"label": "b", "imageBase64": blue}).json()

    comp = client.post("/api/v1/compositions", json={"canvas": [128, 128], "title": "t"}).json()
    for cid, region in ((c1["id"], [0, 0, 0.75, 0.75]), (c2["id"], [0.25, 0.25, 0.75, 0.75])):
        placed = client.post(
            f"/api/v1/compositions/{comp['id']}/placements",
            json={"capture": cid, "region": region},
        )
        assert placed.status_code == 200
    exported = client.post(f"/api/v1/compositions/{comp['id']}/export").json()
    assert exported["manifest"]["placements"][0]["step"] == "s1"
    png = base64.b64decode(exported["png"])
    from conftest import png_pixel

    assert png_pixel(png, 64, 64) == (0, 0, 200)  # overlap shows higher z


def test_concurrent_mutations_serialize(client, service):
    client.post("/api/v1/session")
    client.post("/api/v1/session/enter-step", json={"step": "s1"})
    errors = []

    def add_notes(tag):
        for i in range(10):
            response = client.post(
                "/api/v1/session/notes", json={"text": f"{tag}-{i}"}
            )
            if response.status_code != 200:
                errors.append(response.text)

    threads = [threading.Thread(target=add_notes, args=(t,)) for t in ("a", "b", "c")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    session = client.get("/api/v1/session").json()
    assert len(session["records"][0]["notes"]) == 30
    seqs = [e["seq"] for e in service.events.since(0)]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_save_project_canonical(client, service, tmp_path):
    first = client.post("/api/v1/project/save")
    assert first.status_code == 200
    content_1 = (tmp_path / "project.json").read_bytes()
    client.post("/api/v1/project/save")
    content_2 = (tmp_path / "project.json").read_bytes()
    assert content_1 == content_2
