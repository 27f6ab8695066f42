"""Wire-contract tests: schema conformance on recorded fixtures, parameter
echo, and version refusal. No model weights involved."""

from __future__ import annotations

import base64
import io
import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from autostudio_bridge.config import BridgeConfig
from autostudio_bridge.service import create_app
from autostudio_bridge.wire import WireError, validate_request, validate_response

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture()
def client():
    return TestClient(create_app(BridgeConfig(backbone="stub")))


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text())


def test_recorded_request_fixture_is_schema_valid():
    validate_request(load_fixture("draw_request.json"))


def test_recorded_response_fixture_is_schema_valid():
    validate_response(load_fixture("draw_response.json"))


def test_draw_matches_recorded_fixture(client):
    request = load_fixture("draw_request.json")
    resp = client.post("/draw", json=request)
    assert resp.status_code == 200
    body = resp.json()
    validate_response(body)
    assert body == load_fixture("draw_response.json")


def test_response_image_dims_match_frame(client):
    request = load_fixture("draw_request.json")
    body = client.post("/draw", json=request).json()
    image = Image.open(io.BytesIO(base64.b64decode(body["image"])))
    assert image.size == (256, 192)


def test_params_passthrough_in_diagnostics(client):
    request = load_fixture("draw_request.json")
    request["params"] = {"r": 0.5, "alpha": 0.9, "beta": 0.1, "steps": 20, "guidance": "on"}
    body = client.post("/draw", json=request).json()
    assert body["diagnostics"]["params_echo"] == {
        "r": 0.5, "alpha": 0.9, "beta": 0.1, "steps": 20,
    }
    # injection indices follow the same reverse-step convention as the engine
    assert body["diagnostics"]["injected_steps"] == list(range(19, 9, -1))


def test_unknown_schema_version_is_400(client):
    request = load_fixture("draw_request.json")
    request["schema"] = "autostudio-draw@99"
    resp = client.post("/draw", json=request)
    assert resp.status_code == 400
    assert "schema version" in resp.json()["detail"]


def test_malformed_request_is_400(client):
    request = load_fixture("draw_request.json")
    del request["subjects"]
    assert client.post("/draw", json=request).status_code == 400
    request2 = load_fixture("draw_request.json")
    request2["subjects"][0]["box"] = [1, 2, 3]
    assert client.post("/draw", json=request2).status_code == 400


def test_capabilities_shape(client):
    body = client.get("/capabilities").json()
    assert body["schema"] == "autostudio-draw@1"
    assert body["backbone"] == "stub"
    assert body["extractor"] == {"detection": False, "segmentation": False}
    assert "generate" in body["modes"]


def test_per_subject_ids_subset_of_request(client):
    request = load_fixture("draw_request.json")
    body = client.post("/draw", json=request).json()
    request_ids = {s["id"] for s in request["subjects"]}
    assert {p["id"] for p in body["per_subject"]} <= request_ids
    # a user-reference embedding passes through untouched
    dog = [p for p in body["per_subject"] if p["id"] == "2"][0]
    assert dog["embedding"]["provenance"] == "user-reference"


def test_edit_mode_merges_prior_image(client):
    request = load_fixture("draw_request.json")
    prior = Image.new("RGB", (256, 192), (1, 2, 3))
    buf = io.BytesIO()
    prior.save(buf, format="PNG")
    request["mode"] = "edit"
    request["prior_image"] = base64.b64encode(buf.getvalue()).decode("ascii")
    request["edit_region"] = [144, 48, 96, 128]
    body = client.post("/draw", json=request).json()
    import numpy as np

    out = np.asarray(Image.open(io.BytesIO(base64.b64decode(body["image"]))).convert("RGB"))
    assert (out[0, 0] == [1, 2, 3]).all()          # outside region: prior pixels
    assert not (out[100, 180] == [1, 2, 3]).all()  # inside region: regenerated


def test_wire_error_type():
    with pytest.raises(WireError):
        validate_request({"schema": "autostudio-draw@1"})
