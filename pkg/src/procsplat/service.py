"""Local HTTP service for the editing workshop.

Exposes the fitted asset library to a companion UI: browse assets and code,
assemble buildings from edited code, plan and assemble toy cities, and render
any assembled scene to PNG.  Scenes are immutable once registered, so renders
are stateless with respect to each other; the environment variable
PROCSPLAT_THREADS caps how many renders run at once.
"""
from __future__ import annotations

import io
import itertools
import os
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image

from .assembly import Scene
from .citygen import (
    AssetLibrary,
    CityConfig,
    CityGenError,
    CityLayout,
    assemble_city,
    generate_building,
    generate_layout,
    parse_layout_input,
)
from .core import Camera, InvalidParameterError
from .grammar import GrammarError, parse, serialize
from .ply import load_checkpoint
from .render import RenderConfig, render

DEFAULT_THREADS = 4


def render_slots() -> int:
    """How many renders may run concurrently (PROCSPLAT_THREADS, default 4)."""
    raw = os.environ.get("PROCSPLAT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return DEFAULT_THREADS


def image_to_png_bytes(image: np.ndarray) -> bytes:
    """Quantize a float image in [0, 1] to 8-bit PNG bytes.

    The single shared encoder: every PNG the package emits goes through
    here, so service responses and files written by the CLI are
    byte-identical for the same float image.
    """
    quantized = np.clip(np.asarray(image) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quantized).save(buf, format="PNG")
    return buf.getvalue()


@dataclass
class JobState:
    """Bookkeeping for one request the UI may poll."""

    id: str
    kind: str                       # fit | assemble | generate
    status: str = "queued"          # queued -> running -> done | failed
    progress: float = 0.0
    artifacts: "dict[str, str]" = field(default_factory=dict)
    error: "str | None" = None

    _ORDER = ("queued", "running", "done", "failed")

    def advance(self, status: str):
        if self._ORDER.index(status) < self._ORDER.index(self.status):
            raise ValueError(f"job status may not move {self.status} -> {status}")
        self.status = status

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "status": self.status,
                "progress": self.progress, "artifacts": self.artifacts,
                "error": self.error}


class SceneRegistry:
    """Immutable scenes and job records behind one lock."""

    def __init__(self):
        self._lock = threading.Lock()
        self._scenes: "dict[str, Scene]" = {}
        self._jobs: "dict[str, JobState]" = {}
        self._counter = itertools.count(1)

    def add_scene(self, scene: Scene) -> str:
        with self._lock:
            scene_id = f"scene-{next(self._counter):06d}"
            self._scenes[scene_id] = scene
            return scene_id

    def scene(self, scene_id: str) -> Scene:
        with self._lock:
            if scene_id not in self._scenes:
                raise KeyError(scene_id)
            return self._scenes[scene_id]

    def new_job(self, kind: str) -> JobState:
        with self._lock:
            job = JobState(id=f"job-{next(self._counter):06d}", kind=kind)
            self._jobs[job.id] = job
            return job

    def job(self, job_id: str) -> JobState:
        with self._lock:
            if job_id not in self._jobs:
                raise KeyError(job_id)
            return self._jobs[job_id]


def scene_stats(scene: Scene) -> dict:
    counts = {aid: 0 for aid in scene.asset_order}
    for aid, n in zip(scene.asset_order,
                      np.bincount(scene.asset_index,
                                  minlength=len(scene.asset_order))):
        counts[aid] = int(n)
    p = scene.gaussians.positions
    return {
        "n_gaussians": len(scene),
        "n_instances": len(scene.transforms),
        "gaussians_per_asset": counts,
        "bbox": {"min": p.min(axis=0).tolist(), "max": p.max(axis=0).tolist()},
    }


def load_library(library_dir: str) -> AssetLibrary:
    """Open a fitted checkpoint directory as a generation library."""
    return AssetLibrary.from_checkpoint(load_checkpoint(library_dir))


def _bad_request(payload) -> HTTPException:
    detail = payload.to_json() if hasattr(payload, "to_json") else {
        "error": "BadRequest", "message": str(payload)}
    return HTTPException(status_code=400, detail=detail)


def _field(body: dict, name: str, kind, default=_bad_request):
    if not isinstance(body, dict):
        raise _bad_request("request body must be a JSON object")
    if name not in body:
        if default is not _bad_request:
            return default
        raise _bad_request(f"missing required field {name!r}")
    value = body[name]
    if kind is not None and not isinstance(value, kind):
        raise _bad_request(f"field {name!r} has the wrong type")
    return value


def create_app(library: AssetLibrary,
               render_config: RenderConfig = RenderConfig(),
               city_config: CityConfig = CityConfig()) -> FastAPI:
    """Build the service around one immutable asset library."""
    app = FastAPI(title="procsplat workshop")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    registry = SceneRegistry()
    render_gate = threading.Semaphore(render_slots())

    @app.exception_handler(RequestValidationError)
    def on_malformed_body(request, exc):
        detail = {"error": "BadRequest", "message": "malformed request body"}
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.get("/assets")
    def get_assets():
        return {"assets": [s.to_json() for s in library.manifest],
                "variance_pools": {k: len(v)
                                   for k, v in library.variance_pools.items()},
                "codes": [c.building_id for c in library.codes]}

    @app.get("/code/{building}")
    def get_code(building: str):
        for code in library.codes:
            if code.building_id == building:
                return {"building": building, "code": serialize(code)}
        raise HTTPException(status_code=404,
                            detail=f"unknown building {building!r}")

    @app.post("/assemble")
    def post_assemble(body: dict):
        text = _field(body, "code", str)
        dims = _field(body, "dims", list, None)
        seed = int(_field(body, "seed", int, 0))
        if dims is not None:
            if len(dims) != 3 or not all(isinstance(v, (int, float)) and v > 0
                                         for v in dims):
                raise _bad_request("dims must be three positive numbers")
            dims = tuple(float(v) for v in dims)
        try:
            code = parse(text)
            scene = generate_building(code, dims, library, seed=seed)
        except GrammarError as err:
            raise _bad_request(err) from err
        job = registry.new_job("assemble")
        scene_id = registry.add_scene(scene)
        job.advance("running")
        job.progress = 1.0
        job.artifacts["scene_id"] = scene_id
        job.advance("done")
        return {"scene_id": scene_id, "job_id": job.id,
                "stats": scene_stats(scene)}

    @app.post("/render")
    def post_render(body: dict):
        scene_id = _field(body, "scene_id", str)
        cam_json = _field(body, "camera", dict)
        try:
            scene = registry.scene(scene_id)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown scene {scene_id!r}") from None
        try:
            cam = Camera.from_json(cam_json)
        except (InvalidParameterError, KeyError, TypeError, ValueError) as err:
            raise _bad_request(f"bad camera: {err}") from err
        with render_gate:
            out = render(scene, cam, render_config)
        return Response(content=image_to_png_bytes(out.image),
                        media_type="image/png")

    @app.post("/layout")
    def post_layout(body: dict):
        seed = int(_field(body, "seed", int, 0))
        try:
            boundary, roads = parse_layout_input(body)
            layout = generate_layout(boundary, roads, library, city_config,
                                     seed=seed)
        except CityGenError as err:
            raise _bad_request(err) from err
        return layout.to_json()

    @app.post("/city")
    def post_city(body: dict):
        layout_json = _field(body, "layout", dict)
        seed = int(_field(body, "seed", int, 0))
        try:
            if "placements" in layout_json:
                layout = CityLayout.from_json(layout_json)
            else:
                boundary, roads = parse_layout_input(layout_json)
                layout = generate_layout(boundary, roads, library, city_config,
                                         seed=seed)
            scene = assemble_city(layout, library)
        except (CityGenError, GrammarError, KeyError, TypeError,
                ValueError) as err:
            if isinstance(err, HTTPException):
                raise
            raise _bad_request(err) from err
        job = registry.new_job("generate")
        scene_id = registry.add_scene(scene)
        job.advance("running")
        job.progress = 1.0
        job.artifacts["scene_id"] = scene_id
        job.advance("done")
        return {"scene_id": scene_id, "job_id": job.id,
                "stats": scene_stats(scene), "layout": layout.to_json()}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            return registry.job(job_id).to_json()
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown job {job_id!r}") from None

    return app


def serve(library_dir: str, port: int = 8731, host: str = "127.0.0.1"):
    """Load a checkpoint directory and run the workshop service."""
    import uvicorn

    app = create_app(load_library(library_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")


__all__ = [
    "JobState",
    "SceneRegistry",
    "create_app",
    "image_to_png_bytes",
    "load_library",
    "render_slots",
    "scene_stats",
    "serve",
]
