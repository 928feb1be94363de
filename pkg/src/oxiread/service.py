"""Stateless HTTP wrapper around the reading pipeline.

Two routes: POST /read and GET /health. A read request carries exactly one
input mode: `scene` parameters (the deterministic generator plus optional
mock noise, useful for testing and demos) or inline `detections` (one set per
captured rotation, as produced by a real detector). Responses embed the
same reading payload the CLI writes, so the two surfaces never drift.

Status mapping: 422 malformed body, 400 semantically invalid input,
500 backend fault, 200 otherwise (including readable failures, which are a
result, not a server error).
"""

from __future__ import annotations

import time

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator

from .detections import (
    Detection,
    DetectionSet,
    DetectorBackend,
    GlyphClass,
    MockDetector,
    NoiseModel,
    ReplayBackend,
    ZERO_NOISE,
)
from .geometry import BBox, ImageDims
from .synthgen import DisplayKind, LayoutKind, generate_scene
from .vitals import FailureReason, ReadFailure, read_vitals
from .formats import reading_payload


class NoiseBody(BaseModel):
    dropout: float = 0.0
    jitter: float = 0.0
    confusion_180: float = 0.0
    conf_spread: float = 0.0


class SceneBody(BaseModel):
    layout: str
    display: str
    spo2: int
    pr: int
    orientation: int = 0
    seed: int = 0
    extra_group: bool = False
    scale: float = 1.0


class DetectionBody(BaseModel):
    glyph: str
    confidence: float
    box: list[float] = Field(min_length=4, max_length=4)


class DetectionSetBody(BaseModel):
    rotation: int
    width: float
    height: float
    detections: list[DetectionBody]


class ReadRequest(BaseModel):
    request_id: str
    scene: SceneBody | None = None
    noise: NoiseBody | None = None
    seed: int = 0
    detections: list[DetectionSetBody] | None = None
    auto_orient: bool = True

    @model_validator(mode="after")
    def _exactly_one_input_mode(self):
        if (self.scene is None) == (self.detections is None):
            raise ValueError("provide exactly one of 'scene' or 'detections'")
        return self


def _replay_backend(bodies: list[DetectionSetBody]) -> ReplayBackend:
    sets: dict[int, DetectionSet] = {}
    captured = None
    for body in bodies:
        if body.rotation in sets:
            raise ValueError(f"duplicate detection set for rotation {body.rotation}")
        detections = tuple(
            Detection(GlyphClass.from_token(d.glyph), BBox(*d.box), d.confidence)
            for d in body.detections
        )
        ds = DetectionSet(detections, ImageDims(body.width, body.height), body.rotation)
        if captured is None:
            captured = ds.dims.rotated(body.rotation)
        elif ds.dims != captured.rotated(body.rotation):
            raise ValueError("detection sets disagree about image dims")
        sets[body.rotation] = ds
    return ReplayBackend(sets=sets, dims=captured)


def create_app(detector: DetectorBackend | None = None) -> FastAPI:
    """Build the app. `detector` plugs in external inference for scene
    requests; without it, scenes are served by the deterministic mock."""
    app = FastAPI(title="oxiread")

    @app.get("/health")
    def handle_health():
        return {
            "status": "ok",
            "capability": "full" if detector is not None else "mock-only",
            "modes": ["scene", "detections"],
            "resolutions": [640, 1280],
        }

    @app.post("/read")
    def handle_read(req: ReadRequest):
        started = time.perf_counter()
        try:
            if req.scene is not None:
                params = req.scene
                image = generate_scene(
                    LayoutKind(params.layout),
                    DisplayKind(params.display),
                    params.spo2,
                    params.pr,
                    params.orientation,
                    params.seed,
                    extra_group=params.extra_group,
                    scale=params.scale,
                )
                noise = ZERO_NOISE if req.noise is None else NoiseModel(
                    dropout=req.noise.dropout,
                    jitter=req.noise.jitter,
                    confusion_180=req.noise.confusion_180,
                    conf_spread=req.noise.conf_spread,
                )
                backend = detector if detector is not None else MockDetector(noise=noise, seed=req.seed)
            else:
                backend = _replay_backend(req.detections)
                image = None
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})

        result = read_vitals(backend, image, auto_orient=req.auto_orient)
        body = {
            "request_id": req.request_id,
            "result": reading_payload(result),
            "elapsed_ms": (time.perf_counter() - started) * 1000.0,
        }
        if isinstance(result, ReadFailure) and result.reason is FailureReason.BACKEND_ERROR:
            return JSONResponse(status_code=500, content=body)
        return body

    return app


app = create_app()
