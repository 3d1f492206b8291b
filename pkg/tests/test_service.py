import math

import pytest
from fastapi.testclient import TestClient

from dyncm.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    assert client.get("/health").json()["status"] == "ok"


def test_check_degrees(client):
    body = client.post("/check", json={"degrees": [3, 4] * 50}).json()
    assert body["ell"] == 350 and body["mode"] == "R*"
    assert {c["name"] for c in body["checks"]}


def test_check_model(client):
    body = client.post("/check", json={"model": "bivalued", "n": 10_000, "d1": 3, "d2": 4,
                                       "frac1": 0.5}).json()
    assert body["ell"] == 35_000
    assert body["statistics"]["c_stat"] == pytest.approx(1.081266324737945, abs=1e-12)


def test_graph_spec_validation(client):
    assert client.post("/check", json={}).status_code == 422
    assert client.post("/check", json={"degrees": [3, 3], "model": "regular", "n": 2}).status_code == 422
    assert client.post("/check", json={"degrees": [3, 3, 3]}).status_code == 422


def test_simulate(client):
    req = {"graph": {"degrees": [3, 4] * 10}, "t": 8, "k": 3, "seed": 4, "record_trace": True}
    a = client.post("/simulate", json=req).json()
    b = client.post("/simulate", json=req).json()
    assert a == b and len(a["trajectory"]) == 9 and a["trace"]
    assert client.post("/simulate", json={**req, "x": 10_000}).status_code == 422
    assert client.post("/simulate", json={**req, "alpha": 0.1}).status_code == 422


def test_profile_and_jobs(client):
    req = {"n": 200, "regime": "subcritical", "c_grid": [0.5, "1.5*c_stat"], "N": 500, "seed": 3}
    body = client.post("/profile", json=req).json()
    assert len(body["rows"]) == 2 and body["csv"].startswith("regime,n,ell")
    job = client.post("/jobs", json=req)
    assert job.status_code == 202
    jid = job.json()["id"]
    for _ in range(200):
        st = client.get(f"/jobs/{jid}").json()
        if st["status"] in ("done", "failed"):
            break
        import time
        time.sleep(0.05)
    assert st["status"] == "done" and st["result"]["csv"] == body["csv"]
    assert client.get("/jobs/nope").status_code == 404


def test_profile_zero_replicas_null_fields(client):
    body = client.post("/profile", json={"n": 200, "c_grid": [1.0], "N": 0}).json()
    row = body["rows"][0]
    assert row["tv_raw"] is None and math.isclose(row["theory"], math.exp(-0.5))


def test_exact(client):
    body = client.post("/exact").json()
    assert body["ok"] and len(body["checks"]) == 9


def test_reset_law(client):
    body = client.post("/reset-law", json={"degrees": [3, 3, 2], "k": 2, "t": 2}).json()
    law = {tuple(e["T"]): e["p"] for e in body["law"]}
    assert law[()] == pytest.approx(1 / 12) and law[(1, 2)] == pytest.approx(1 / 3)
    assert body["total"] == pytest.approx(1, abs=1e-12)
    assert client.post("/reset-law", json={"degrees": [3, 3, 3, 3], "k": 2, "t": 2}).status_code == 422
