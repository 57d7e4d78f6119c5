import pytest
from fastapi.testclient import TestClient

from thermomap.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app, raise_server_exceptions=False)


DESK_HW = {
    "n_tiles": 4, "crossbar_dim": 32, "clusters_per_tile": 3,
    "parasitics": {"r_wordline_seg": 150.0, "r_bitline_seg": 150.0,
                   "i_required": 2e-5},
}

SYNTH = {"pattern": "feedforward", "layers": [12, 10, 8], "rate_hz": 40000.0,
         "seed": 21, "hot_fraction": 0.3, "hot_multiplier": 8.0}


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["version"]


def test_default_hardware_document(client):
    doc = client.get("/defaults/hardware").json()
    assert doc["n_tiles"] == 4
    assert doc["crossbar_dim"] == 128
    assert doc["pcm"]["r_set"] == pytest.approx(10e3)


def test_synth_endpoint(client):
    resp = client.post("/synth", json={"pattern": "feedforward",
                                       "layers": [784, 100, 10], "rate_hz": 0.0})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["synapses"]) == 79_400
    assert len(body["neurons"]) == 894


def test_validate_hardware_ok_and_bad(client):
    ok = client.post("/validate/hardware", json={"hardware": DESK_HW}).json()
    assert ok == {"valid": True, "error_class": None, "message": None}
    bad = client.post("/validate/hardware",
                      json={"hardware": {"crossbar_dims": 4}}).json()
    assert bad["valid"] is False
    assert bad["error_class"] == "config-error"
    assert "crossbar_dims" in bad["message"]


def test_run_with_synth(client):
    resp = client.post("/run", json={
        "synth": SYNTH, "hardware": DESK_HW,
        "techniques": ["thermal", "perf-baseline"],
        "max_iter": 4, "seed": 3, "include_traces": True})
    assert resp.status_code == 200
    body = resp.json()
    assert body["schema_version"] == 1
    assert [t["technique"] for t in body["techniques"]] == ["thermal", "perf-baseline"]
    thermal = body["techniques"][0]
    assert thermal["energy"]["total_energy_j"] == pytest.approx(
        thermal["energy"]["spike_energy_j"] + thermal["energy"]["routing_energy_j"]
        + thermal["energy"]["leakage_energy_j"])
    assert thermal["compile_time_seconds"] >= 0
    assert thermal["trace"]
    assert body["deltas"]["temperature_reduction_k"] > 0


def test_run_with_inline_workload(client):
    workload = {
        "window_seconds": 1.0,
        "neurons": [{"id": "a", "kind": "input"}, {"id": "b", "kind": "output"}],
        "synapses": [{"pre": "a", "post": "b", "weight": 0.8, "spike_count": 250000}],
    }
    resp = client.post("/run", json={"workload": workload, "hardware": DESK_HW,
                                     "techniques": ["thermal"], "max_iter": 1})
    assert resp.status_code == 200
    body = resp.json()
    assert body["workload"]["synapses"] == 1
    assert body["techniques"][0]["energy"]["max_avg_temperature_k"] > 298.0


def test_run_requires_exactly_one_source(client):
    resp = client.post("/run", json={"techniques": ["thermal"]})
    assert resp.status_code == 400
    assert resp.json()["error_class"] == "config-error"
    both = client.post("/run", json={
        "synth": SYNTH,
        "workload": {"window_seconds": 1.0, "neurons": [], "synapses": []},
    })
    assert both.status_code == 400


def test_run_infeasible_maps_to_422(client):
    resp = client.post("/run", json={
        "synth": {"pattern": "feedforward", "layers": [784, 100, 10], "rate_hz": 1.0},
        "techniques": ["thermal"], "max_iter": 1})
    assert resp.status_code == 422
    assert resp.json()["error_class"] == "infeasible-workload"


def test_request_schema_rejects_unknown_fields(client):
    resp = client.post("/run", json={"synth": SYNTH, "bogus_field": 1})
    assert resp.status_code == 422  # pydantic validation, not a tool error


def test_sweep_endpoint(client):
    resp = client.post("/sweep", json={
        "run": {"synth": SYNTH, "hardware": DESK_HW, "seed": 5},
        "iters": [1, 4]})
    assert resp.status_code == 200
    rows = resp.json()["rows"]
    assert [r["max_iter"] for r in rows] == [1, 4]
    assert rows[1]["max_avg_temp_k"] <= rows[0]["max_avg_temp_k"]
