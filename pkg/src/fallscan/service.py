"""Session-oriented HTTP facade over the analysis pipeline.

The analyst UI iterates ROI / cutoff / arrow scale interactively, so the
expensive stages (detect, track, stabilize) are cached per session under a
content-hash key of everything upstream of the cutoff; re-filtering and
rendering are recomputed per request. Responses reuse the exact pipeline
code paths, so service output matches CLI output byte for byte.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from . import pipeline
from .errors import FallscanError, InvalidIndex, InvalidPair, UnknownSession
from .image import ImageGray, ImageRGB, Roi, adjust_brightness, crop_roi, gray_to_u8
from .motion import filter_by_threshold, threshold_sweep
from .pipeline import AnalysisParams, FrameStore, PairAnalysis, analyze_pair, find_plateaus, recommend_plateau
from PIL import Image as PILImage


@dataclass
class Session:
    id: str
    store: FrameStore
    cache: dict[str, PairAnalysis] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionRegistry:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, store: FrameStore) -> Session:
        s = Session(id=uuid.uuid4().hex, store=store)
        with self._lock:
            self._sessions[s.id] = s
        return s

    def get(self, session_id: str) -> Session:
        with self._lock:
            s = self._sessions.get(session_id)
        if s is None:
            raise UnknownSession(f"no session {session_id}")
        return s


def _cache_key(params: AnalysisParams, frame_a: int, frame_b: int) -> str:
    """Hash of everything upstream of the cutoff/rendering stages."""
    upstream = {
        "roi": None if params.roi is None else params.roi.to_json(),
        "detector": params.detector.to_json(),
        "tracker": params.tracker.to_json(),
        "robust_fit": params.robust_fit.to_json(),
        "seed": params.seed,
        "fb_filter": params.fb_filter,
        "pair": [frame_a, frame_b],
    }
    blob = json.dumps(upstream, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _error_response(status: int, code: str, message: str, detail: dict | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail or {}},
    )


class CreateSessionRequest(BaseModel):
    frames_dir: str
    fps: float = pipeline.DEFAULT_FPS


class AnalyzeRequest(BaseModel):
    pair: tuple[int, int]
    params: dict = {}


class SweepRequest(BaseModel):
    pair: tuple[int, int]
    params: dict = {}
    ts_grid: list[float] | None = None


def _session_info(s: Session) -> dict:
    return {
        "id": s.id,
        "frame_count": s.store.frame_count,
        "width": s.store.width,
        "height": s.store.height,
        "fps": s.store.fps,
    }


def _cached_analysis(session: Session, params: AnalysisParams, a: int, b: int) -> PairAnalysis:
    key = _cache_key(params, a, b)
    with session.lock:
        hit = session.cache.get(key)
    if hit is not None:
        return hit
    gray_a = session.store.load_gray(a, params.roi)
    gray_b = session.store.load_gray(b, params.roi)
    pa = pipeline.compute_pair_analysis(gray_a, gray_b, params)
    with session.lock:
        # idempotent insert: same key always maps to the same value
        session.cache.setdefault(key, pa)
    return pa


def create_app(runs_root: str | Path = "runs") -> FastAPI:
    """Build the service; analysis artifacts persist under runs_root."""
    app = FastAPI(title="fallscan analysis service")
    registry = SessionRegistry()
    runs = Path(runs_root)
    runs.mkdir(parents=True, exist_ok=True)

    @app.exception_handler(FallscanError)
    async def _fallscan_error(_, exc: FallscanError):
        status = 404 if isinstance(exc, UnknownSession) else 422
        if isinstance(exc, (InvalidIndex, InvalidPair)):
            status = 422
        return _error_response(status, exc.code, str(exc))

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        store = FrameStore.open(req.frames_dir, fps=req.fps)
        s = registry.create(store)
        return _session_info(s)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_info(registry.get(session_id))

    @app.get("/sessions/{session_id}/frames/{index}")
    def get_frame(session_id: str, index: int, roi: str | None = None, gain: float | None = None):
        s = registry.get(session_id)
        img = s.store.load(index)
        if roi:
            parts = [int(v) for v in roi.split(",")]
            if len(parts) != 4:
                return _error_response(422, "bad_roi", f"roi must be X,Y,W,H, got {roi!r}")
            img = crop_roi(img, Roi(*parts))
        if gain is not None:
            img = adjust_brightness(img, gain)
        buf = io.BytesIO()
        if isinstance(img, ImageGray):
            PILImage.fromarray(gray_to_u8(img), mode="L").save(buf, format="PNG")
        else:
            PILImage.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/sessions/{session_id}/analyze")
    def analyze(session_id: str, req: AnalyzeRequest):
        s = registry.get(session_id)
        params = AnalysisParams.from_json(req.params)
        a, b = req.pair
        if a == b:
            raise InvalidPair(f"frame pair must be distinct, got ({a}, {b})")
        s.store._check_index(a)
        s.store._check_index(b)
        name = pipeline.params_hash(params, a, b)
        existing = runs / name / "result.json"
        if existing.is_file():
            # identical run already persisted; the payload is deterministic
            body = json.loads(existing.read_text())
        else:
            # heavy stages come from the session cache; rendering and
            # persistence go through the same path as the CLI, so the
            # on-disk artifacts are byte-identical
            pa = _cached_analysis(s, params, a, b)
            result = analyze_pair(s.store, a, b, params, out_root=runs, precomputed=pa)
            body = result.to_json()
        body["artifact_urls"] = {
            k: f"/artifacts/{name}/{v}" for k, v in body["artifacts"].items()
        }
        return body

    @app.post("/sessions/{session_id}/sweep")
    def sweep(session_id: str, req: SweepRequest):
        s = registry.get(session_id)
        params = AnalysisParams.from_json(req.params)
        a, b = req.pair
        if a == b:
            raise InvalidPair(f"frame pair must be distinct, got ({a}, {b})")
        s.store._check_index(a)
        s.store._check_index(b)
        from .motion import DEFAULT_SWEEP_GRID

        grid = req.ts_grid if req.ts_grid is not None else list(DEFAULT_SWEEP_GRID)
        pa = _cached_analysis(s, params, a, b)
        sw = threshold_sweep(pa.vectors, grid, a, b)
        plateaus = find_plateaus(sw)
        rec = recommend_plateau(plateaus)
        return {
            "sweep": sw.to_json(),
            "counts": [e.surviving_count for e in sw.entries],
            "ts_grid": [e.ts for e in sw.entries],
            "plateaus": [p.to_json() for p in plateaus],
            "recommended": None if rec is None else rec.to_json(),
        }

    @app.get("/artifacts/{run}/{name}")
    def artifact(run: str, name: str):
        path = (runs / run / name).resolve()
        if not str(path).startswith(str(runs.resolve())) or not path.is_file():
            return _error_response(404, "artifact_not_found", f"{run}/{name}")
        media = "image/png" if name.endswith(".png") else "application/json"
        return FileResponse(path, media_type=media)

    return app
