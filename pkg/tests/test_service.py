import json
import socket
import threading
import time

import pytest
from fastapi.testclient import TestClient

from semipert import __version__
from semipert.service import app

COARSE = {"h_s": 1.0 / 32.0, "seed": 5}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["version"] == __version__


def test_default_config_endpoint(client):
    resp = client.get("/config/defaults")
    assert resp.status_code == 200
    body = resp.json()
    assert body["b"] == 1.0
    assert body["kernel"] == "uniform"


def test_verify_endpoint(client):
    resp = client.post("/suites/verify", json=COARSE)
    assert resp.status_code == 200
    body = resp.json()
    assert body["suite"] == "verify"
    assert body["exit_code"] == 0
    assert body["passed"] is True
    assert "verify_summary.json" in body["files"]
    titles = [rep["title"] for rep in body["reports"]]
    assert "semigroup_axioms" in titles


def test_config_guard_maps_to_422(client):
    resp = client.post("/suites/resolvent", json=dict(COARSE, t0=1.0))
    assert resp.status_code == 422
    assert "contraction" in resp.json()["detail"]


def test_unknown_field_maps_to_422(client):
    resp = client.post("/suites/verify", json=dict(COARSE, bogus=1))
    assert resp.status_code == 422


def test_unknown_suite_is_404(client):
    resp = client.post("/suites/frobnicate", json=COARSE)
    assert resp.status_code in (404, 422)


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def live_server():
    import uvicorn

    port = _free_port()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15.0
    import httpx
    url = f"http://127.0.0.1:{port}"
    while time.monotonic() < deadline:
        try:
            if httpx.get(url + "/health", timeout=1.0).status_code == 200:
                break
        except httpx.HTTPError:
            time.sleep(0.05)
    else:
        pytest.fail("live server did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=10.0)


def test_cli_talks_to_live_server(tmp_path, live_server, capsys):
    from semipert.cli import main

    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(COARSE))
    out = tmp_path / "remote_out"
    code = main(["contraction", "--config", str(cfg), "--out", str(out),
                 "--server", live_server])
    assert code == 0
    assert (out / "contraction.csv").exists()
    assert "suite contraction: PASS" in capsys.readouterr().out

    code = main(["resolvent", "--config", str(cfg), "--out", str(out),
                 "--server", live_server, "--t0", "1.0"])
    assert code == 2
    assert "config error" in capsys.readouterr().err
