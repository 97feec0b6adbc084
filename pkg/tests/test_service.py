"""Live session API: turn protocol, validation, context, persistence."""

import json

import pytest
from fastapi.testclient import TestClient

from partcl.service import create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(journal_dir=str(tmp_path / "journal"))
    with TestClient(app) as c:
        c.journal_dir = tmp_path / "journal"
        yield c


def _create(client, problem="grid", options=None):
    body = {"problem": problem,
            "options": options or {"selection": "smallest", "seed": 0}}
    r = client.post("/sessions", json=body)
    assert r.status_code == 201, r.text
    return r.json()


class TestLifecycle:
    def test_create_initial_state(self, client):
        state = _create(client)
        assert state["phase"] == "awaiting-improvement"
        assert state["t"] == 1
        assert state["weights"] == [0.0] * 24
        assert all(v == 0 for v in state["x"].values())

    def test_create_with_custom_initial(self, client):
        r = client.post("/sessions", json={
            "problem": "grid",
            "options": {"initial": {f"n{r_}{c}": (r_ + c) % 2
                                    for r_ in range(4) for c in range(4)}},
        })
        assert r.status_code == 201
        x = r.json()["x"]
        assert x["n00"] == 0 and x["n01"] == 1

    def test_create_with_infeasible_initial(self, client):
        # schedule an activity in an unavailable slot
        assignment = {f"day{d}_slot{s}": 0 for d in range(7) for s in range(5)}
        assignment["day0_slot2"] = 1
        r = client.post("/sessions", json={"problem": "training",
                                           "options": {"initial": assignment}})
        assert r.status_code == 422
        body = r.json()
        assert body["code"] == "infeasible_initial"
        assert "availability_day0_slot2" in body["details"]

    def test_unknown_problem(self, client):
        r = client.post("/sessions", json={"problem": "nope"})
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_problem"

    def test_catalog(self, client):
        r = client.get("/problems")
        ids = {p["id"] for p in r.json()}
        assert {"grid", "training", "hotel"} <= ids

    def test_delete(self, client):
        state = _create(client)
        sid = state["session_id"]
        assert client.delete(f"/sessions/{sid}").status_code == 200
        assert client.get(f"/sessions/{sid}/state").status_code == 404


class TestTurns:
    def test_recommendation_idempotent(self, client):
        sid = _create(client)["session_id"]
        a = client.get(f"/sessions/{sid}/recommendation").json()
        b = client.get(f"/sessions/{sid}/recommendation").json()
        assert a == b

    def test_accept_as_is_is_satisfied(self, client):
        sid = _create(client)["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        r = client.post(f"/sessions/{sid}/improvement",
                        json={"assignment": rec["assignment"]})
        body = r.json()
        assert body["accepted"] and body["satisfied"]
        assert body["clean_streak"] == 1

    def test_improvement_updates_weights(self, client):
        sid = _create(client)["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        changed = dict(rec["assignment"])
        key = sorted(changed)[0]
        changed[key] = 1 - changed[key]
        r = client.post(f"/sessions/{sid}/improvement",
                        json={"assignment": changed})
        assert r.json()["accepted"]
        state = client.get(f"/sessions/{sid}/state").json()
        assert any(w != 0 for w in state["weights"])
        assert state["trace"][0]["satisfied"] is False

    def test_wrong_part_variables_rejected(self, client):
        sid = _create(client)["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        r = client.post(f"/sessions/{sid}/improvement",
                        json={"assignment": {"n00": 0}})
        assert r.status_code == 422
        assert r.json()["code"] == "protocol"
        # the pending turn is unchanged
        assert client.get(f"/sessions/{sid}/recommendation").json() == rec

    def test_infeasible_improvement_names_constraint(self, client):
        state = _create(client, problem="training",
                        options={"selection": "smallest"})
        sid = state["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        bad = {k: 3 for k in rec["assignment"]}  # swimming in blocked slots
        r = client.post(f"/sessions/{sid}/improvement",
                        json={"assignment": bad})
        assert r.status_code == 422
        body = r.json()
        assert body["code"] == "infeasible"
        assert any("availability" in name for name in body["details"])
        assert client.get(f"/sessions/{sid}/recommendation").json() == rec

    def test_convergence_after_two_clean_sweeps(self, client):
        sid = _create(client)["session_id"]
        for turn in range(8):  # 2n with n = 4 parts
            rec = client.get(f"/sessions/{sid}/recommendation").json()
            r = client.post(f"/sessions/{sid}/improvement",
                            json={"assignment": rec["assignment"]})
            body = r.json()
        assert body["converged"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        assert rec["phase"] == "converged"
        assert "final" in rec
        r = client.post(f"/sessions/{sid}/improvement",
                        json={"assignment": {}})
        assert r.status_code == 409

    def test_conflict_when_turn_in_flight(self, client):
        sid = _create(client)["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        store = client.app.state.store
        session = store.get(sid)
        assert session.lock.acquire(blocking=False)
        try:
            r = client.post(f"/sessions/{sid}/improvement",
                            json={"assignment": rec["assignment"]})
            assert r.status_code == 409
            assert r.json()["code"] == "conflict"
        finally:
            session.lock.release()


class TestContext:
    def test_grid_context_has_network_neighbors(self, client):
        sid = _create(client)["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        ctx = rec["context"]
        from partcl.gai import build_gai_network
        from partcl.problems import build_grid
        model = build_grid()
        net = build_gai_network(model)
        part = model.part_by_name(rec["part_name"]).index
        expected = {model.parts[q].name for q in net.neighbors(part)}
        assert set(ctx["neighbors"]) == expected
        assert ctx["global_summaries"] == {}  # grid features are all local

    def test_hotel_context_has_global_summaries_and_gauges(self, client):
        state = _create(client, problem="hotel",
                        options={"selection": "smallest"})
        sid = state["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        ctx = rec["context"]
        from partcl.problems import build_hotel
        model = build_hotel()
        global_names = {f.name for f in model.features
                        if f.index < 20}  # the aggregate block
        assert global_names <= set(ctx["global_summaries"])
        assert ctx["gauges"][0]["label"] == "budget used"
        assert ctx["gauges"][0]["unit"] == "%"
        # every network neighbor of the recommended part appears
        assert len(ctx["neighbors"]) == model.num_parts - 1

    def test_training_context_shows_adjacent_days(self, client):
        state = _create(client, problem="training",
                        options={"selection": "smallest"})
        sid = state["session_id"]
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        names = set(rec["context"]["neighbors"])
        part = rec["part_name"]
        d = int(part.removeprefix("day"))
        expected = {f"day{q}" for q in (d - 1, d + 1) if 0 <= q <= 6}
        assert names == expected


class TestPersistence:
    def test_restart_replays_journal(self, client):
        sid = _create(client)["session_id"]
        for _ in range(3):
            rec = client.get(f"/sessions/{sid}/recommendation").json()
            assignment = dict(rec["assignment"])
            key = sorted(assignment)[0]
            assignment[key] = 1 - assignment[key]
            client.post(f"/sessions/{sid}/improvement",
                        json={"assignment": assignment})
        before = client.get(f"/sessions/{sid}/state").json()

        app2 = create_app(journal_dir=str(client.journal_dir))
        with TestClient(app2) as c2:
            after = c2.get(f"/sessions/{sid}/state").json()
        assert after["t"] == before["t"]
        assert after["weights"] == before["weights"]
        assert after["x"] == before["x"]
        assert after["phase"] == before["phase"]

    def test_deleted_sessions_stay_deleted(self, client):
        sid = _create(client)["session_id"]
        client.delete(f"/sessions/{sid}")
        app2 = create_app(journal_dir=str(client.journal_dir))
        with TestClient(app2) as c2:
            assert c2.get(f"/sessions/{sid}/state").status_code == 404


class TestStaticAssets:
    def test_built_client_served_when_present(self, tmp_path):
        static = tmp_path / "dist"
        static.mkdir()
        (static / "index.html").write_text("<html><body>client</body></html>")
        app = create_app(static_dir=str(static))
        with TestClient(app) as c:
            assert c.get("/ui/").status_code == 200
            assert "client" in c.get("/ui/").text

    def test_no_mount_without_directory(self):
        app = create_app(static_dir=None)
        with TestClient(app) as c:
            assert c.get("/ui/").status_code == 404
