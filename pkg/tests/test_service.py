"""HTTP service tests: endpoint contracts, error codes with diagnostics,
and byte-level render parity with the in-process library."""
import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image
import io

from procsplat.citygen import AssetLibrary, CityConfig, DecorationConfig, RegionProfile
from procsplat.core import Camera
from procsplat.render import RenderConfig, render
from procsplat.service import create_app, image_to_png_bytes, render_slots, scene_stats
from procsplat.synthetic import DEMO_CODE, demo_code, demo_manifest, demo_target_assets
from procsplat.grammar import parse
from procsplat.citygen import generate_building

SMALL_SQUARE = [[0.0, 0.0], [36.0, 0.0], [36.0, 20.0], [0.0, 20.0]]


@pytest.fixture(scope="module")
def library():
    return AssetLibrary(demo_manifest(), demo_target_assets(),
                        codes=[demo_code()])


@pytest.fixture(scope="module")
def client(library):
    cfg = CityConfig(
        road_interval=12.0,
        profiles=(RegionProfile(width_range=(6.0, 9.0), depth_range=(4.4, 4.4),
                                height_range=(3.0, 4.0), setback=1.0,
                                spacing=2.0),),
        decoration=DecorationConfig(kinds=()),
    )
    app = create_app(library, city_config=cfg)
    return TestClient(app)


def demo_camera(size=64):
    return Camera.look_at((10.0, -8.0, 5.0), (3.0, 2.2, 1.5), fx=90.0,
                          width=size, height=size).to_json()


def test_get_assets(client):
    body = client.get("/assets").json()
    assert {a["id"] for a in body["assets"]} == {"C", "W", "P"}
    assert body["codes"] == ["Demo"]


def test_get_code_and_unknown_building(client):
    ok = client.get("/code/Demo")
    assert ok.status_code == 200
    assert "building Demo" in ok.json()["code"]
    assert client.get("/code/Nothing").status_code == 404


def test_assemble_returns_stats(client):
    r = client.post("/assemble", json={"code": DEMO_CODE})
    assert r.status_code == 200
    body = r.json()
    assert body["scene_id"].startswith("scene-")
    assert body["stats"]["n_gaussians"] == 84 * 18
    assert body["stats"]["n_instances"] == 84
    job = client.get(f"/jobs/{body['job_id']}").json()
    assert job["status"] == "done"
    assert job["artifacts"]["scene_id"] == body["scene_id"]


def test_assemble_with_dims_changes_counts(client):
    narrow = client.post("/assemble", json={"code": DEMO_CODE,
                                            "dims": [6.0, 4.4, 3.0]}).json()
    wide = client.post("/assemble", json={"code": DEMO_CODE,
                                          "dims": [7.6, 4.4, 3.0]}).json()
    assert (wide["stats"]["n_instances"] - narrow["stats"]["n_instances"]) == 12


def test_assemble_syntax_error_carries_span(client):
    r = client.post("/assemble", json={"code": "building X {\n  level L { C"})
    assert r.status_code == 400
    detail = r.json()["detail"]
    assert detail["error"] == "ParseError"
    assert detail["line"] >= 1 and detail["col"] >= 1


def test_assemble_rejects_bad_dims(client):
    r = client.post("/assemble", json={"code": DEMO_CODE, "dims": [1, 2]})
    assert r.status_code == 400
    r = client.post("/assemble", json={"code": DEMO_CODE,
                                       "dims": [0.1, 0.1, 0.1]})
    assert r.status_code == 400  # infeasible for the fixed corner tokens


def test_malformed_body_is_400(client):
    r = client.post("/assemble", content=b'"just a string"',
                    headers={"content-type": "application/json"})
    assert r.status_code == 400
    r = client.post("/assemble", json={})
    assert r.status_code == 400


def test_render_matches_in_process_bytes(client, library):
    scene_id = client.post("/assemble",
                           json={"code": DEMO_CODE, "seed": 3}).json()["scene_id"]
    r = client.post("/render", json={"scene_id": scene_id,
                                     "camera": demo_camera()})
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    assert r.content[:8] == b"\x89PNG\r\n\x1a\n"

    scene = generate_building(demo_code(), None, library, seed=3)
    cam = Camera.from_json(demo_camera())
    expected = image_to_png_bytes(render(scene, cam, RenderConfig()).image)
    assert r.content == expected

    img = Image.open(io.BytesIO(r.content))
    assert img.size == (64, 64)


def test_render_is_stateless_across_scenes(client):
    a = client.post("/assemble", json={"code": DEMO_CODE,
                                       "dims": [6.0, 4.4, 3.0]}).json()["scene_id"]
    b = client.post("/assemble", json={"code": DEMO_CODE,
                                       "dims": [9.2, 4.4, 3.0]}).json()["scene_id"]
    cam = demo_camera()
    first_a = client.post("/render", json={"scene_id": a, "camera": cam}).content
    first_b = client.post("/render", json={"scene_id": b, "camera": cam}).content
    again_a = client.post("/render", json={"scene_id": a, "camera": cam}).content
    assert first_a == again_a
    assert first_a != first_b


def test_render_unknown_scene_404(client):
    r = client.post("/render", json={"scene_id": "scene-999999",
                                     "camera": demo_camera()})
    assert r.status_code == 404


def test_render_bad_camera_400(client):
    scene_id = client.post("/assemble",
                           json={"code": DEMO_CODE}).json()["scene_id"]
    r = client.post("/render", json={"scene_id": scene_id,
                                     "camera": {"fx": 1.0}})
    assert r.status_code == 400


def test_layout_endpoint(client):
    r = client.post("/layout", json={"boundary": SMALL_SQUARE,
                                     "primary_roads": [], "seed": 1})
    assert r.status_code == 200
    body = r.json()
    assert len(body["blocks"]) == 1
    assert len(body["placements"]) >= 1
    for p in body["placements"]:
        assert p["code_id"] == "Demo"


def test_layout_rejects_bad_boundary(client):
    r = client.post("/layout", json={"boundary": [[0, 0], [1, 1]]})
    assert r.status_code == 400
    bowtie = [[0, 0], [10, 10], [10, 0], [0, 10]]
    r = client.post("/layout", json={"boundary": bowtie})
    assert r.status_code == 400


def test_city_from_raw_payload_and_from_layout(client):
    raw = {"boundary": SMALL_SQUARE, "primary_roads": []}
    first = client.post("/city", json={"layout": raw, "seed": 7})
    assert first.status_code == 200
    body = first.json()
    assert body["stats"]["n_gaussians"] > 0

    # feeding the returned layout back assembles the identical city
    second = client.post("/city", json={"layout": body["layout"]})
    assert second.status_code == 200
    assert second.json()["stats"] == body["stats"]

    r = client.post("/render", json={"scene_id": body["scene_id"],
                                     "camera": demo_camera()})
    assert r.status_code == 200


def test_jobs_unknown_404(client):
    assert client.get("/jobs/job-424242").status_code == 404


def test_render_slots_env(monkeypatch):
    monkeypatch.setenv("PROCSPLAT_THREADS", "2")
    assert render_slots() == 2
    monkeypatch.setenv("PROCSPLAT_THREADS", "junk")
    assert render_slots() == 4
    monkeypatch.delenv("PROCSPLAT_THREADS")
    assert render_slots() == 4


def test_scene_stats_shape(library):
    scene = generate_building(demo_code(), None, library, seed=0)
    stats = scene_stats(scene)
    assert stats["gaussians_per_asset"] == {"C": 24 * 18, "W": 30 * 18,
                                            "P": 30 * 18}
    assert len(stats["bbox"]["min"]) == 3
