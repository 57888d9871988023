"""HTTP API for the browser annotation client.

Endpoints: GET /healthz, GET /cases, GET /cases/{id}/slice,
POST /cases/{id}/points, POST /cases/{id}/segment?mode=, GET /cases/{id}/result.

Sessions (submitted points, last result) persist as JSON files under
<data_dir>/sessions so the API is stateless across restarts. Segmentation
jobs run on a background thread, one per case; overlays are returned as
per-z-slice run-length encodings over the x-fastest flattened slice.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse

from . import pipeline, randomwalker
from .points import ExtremePointSet, PointError, SLOT_NAMES
from .volume import Mask, Volume, load_volume

_AXES = {"x": 0, "y": 1, "z": 2}


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def slice_bytes(v: Volume, axis: int, index: int) -> tuple[bytes, dict]:
    """8-bit slice, windowed to [0,255] by the volume-global min/max.

    The slice keeps the two remaining axes in (lower, higher) axis order and
    is flattened with the lower axis fastest; a constant volume maps to all
    zeros with window [c, c].
    """
    plane = np.take(v.data, index, axis=axis).astype(np.float64)
    lo, hi = float(v.data.min()), float(v.data.max())
    if hi > lo:
        scaled = np.clip((plane - lo) / (hi - lo) * 255.0, 0.0, 255.0)
    else:
        scaled = np.zeros_like(plane)
    meta = {"window": [lo, hi], "shape": list(plane.shape)}
    return scaled.astype(np.uint8).ravel(order="F").tobytes(), meta


def encode_overlay(mask: np.ndarray) -> list[dict]:
    """Run-length encoding per z slice: runs of 1s as [start, length] over
    the x-fastest flattened (nx*ny) slice. Slices with no runs are omitted."""
    out = []
    nx, ny, nz = mask.shape
    for k in range(nz):
        flat = mask[:, :, k].ravel(order="F").astype(np.int8)
        diff = np.diff(np.concatenate([[0], flat, [0]]))
        starts = np.flatnonzero(diff == 1)
        ends = np.flatnonzero(diff == -1)
        if len(starts):
            out.append({"index": k,
                        "runs": [[int(s), int(e - s)] for s, e in zip(starts, ends)]})
    return out


class _CaseSession:
    def __init__(self, case_id: str, data_dir: Path):
        self.case_id = case_id
        self.lock = threading.Lock()
        self.job_running = False
        self.session_path = data_dir / "sessions" / f"{case_id}.json"
        self.result_path = data_dir / "sessions" / f"{case_id}_result.json"

    def load_points(self) -> dict:
        if self.session_path.exists():
            return json.loads(self.session_path.read_text()).get("points", {})
        return {}

    def save_points(self, points: dict) -> None:
        self.session_path.parent.mkdir(parents=True, exist_ok=True)
        self.session_path.write_text(json.dumps({"points": points}))


def create_app(data_dir: Path, config: pipeline.PipelineConfig | None = None) -> FastAPI:
    data_dir = Path(data_dir)
    if config is None:
        cfg_path = data_dir / "config.json"
        config = (pipeline.PipelineConfig.from_json(cfg_path.read_text())
                  if cfg_path.exists() else pipeline.PipelineConfig())

    app = FastAPI(title="extremeseg")
    sessions: dict[str, _CaseSession] = {}
    sessions_lock = threading.Lock()

    def case_ids() -> list[str]:
        ids = []
        for p in sorted(data_dir.glob("*.json")):
            if p.stem == "config" or p.stem.endswith("_gt"):
                continue
            try:
                header = json.loads(p.read_text())
            except json.JSONDecodeError:
                continue
            if header.get("dtype") == "f32" and p.with_suffix(".raw").exists():
                ids.append(p.stem)
        return ids

    def get_case(case_id: str) -> Volume | None:
        if case_id not in case_ids():
            return None
        v = load_volume(data_dir / case_id)
        return v if isinstance(v, Volume) else None

    def session_of(case_id: str) -> _CaseSession:
        with sessions_lock:
            if case_id not in sessions:
                sessions[case_id] = _CaseSession(case_id, data_dir)
            return sessions[case_id]

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/cases")
    def list_cases():
        out = []
        for cid in case_ids():
            header = json.loads((data_dir / f"{cid}.json").read_text())
            out.append({"id": cid, "dims": header["dims"], "spacing": header["spacing_mm"]})
        return out

    @app.get("/cases/{case_id}/slice")
    def get_slice(case_id: str, axis: str = Query(...), index: int = Query(...)):
        v = get_case(case_id)
        if v is None:
            return _error(404, f"unknown case {case_id}")
        if axis not in _AXES:
            return _error(422, f"axis must be one of x, y, z, got {axis!r}")
        ax = _AXES[axis]
        if not 0 <= index < v.dims[ax]:
            return _error(404, f"slice index {index} out of range for axis {axis}")
        body, meta = slice_bytes(v, ax, index)
        return Response(content=body, media_type="application/octet-stream", headers={
            "X-Window-Lo": str(meta["window"][0]),
            "X-Window-Hi": str(meta["window"][1]),
            "X-Shape": ",".join(str(s) for s in meta["shape"]),
        })

    @app.post("/cases/{case_id}/points")
    async def post_points(case_id: str, request: Request):
        v = get_case(case_id)
        if v is None:
            return _error(404, f"unknown case {case_id}")
        try:
            body = await request.json()
            incoming = body["points"]
        except (json.JSONDecodeError, KeyError, TypeError):
            return _error(422, "body must be {\"points\": {...}}")
        sess = session_of(case_id)
        merged = sess.load_points()
        for name, coords in incoming.items():
            if name not in SLOT_NAMES:
                return _error(422, f"unknown point slot {name!r}")
            if not (isinstance(coords, list) and len(coords) == 3):
                return _error(422, f"point {name} must be an [x,y,z] triple")
            merged[name] = [int(c) for c in coords]
        if len(merged) < len(SLOT_NAMES):
            sess.save_points(merged)
            return {"state": "incomplete", "points": merged}
        try:
            pts = ExtremePointSet(**{n: tuple(merged[n]) for n in SLOT_NAMES})
            pts.validate_inside(v.dims)
        except PointError as e:
            return _error(422, str(e))
        sess.save_points(merged)
        return {"state": "ready", "points": merged}

    def run_job(case_id: str, mode: str, job_id: str):
        sess = session_of(case_id)
        v = get_case(case_id)
        pts = ExtremePointSet(**{n: tuple(sess.load_points()[n]) for n in SLOT_NAMES})
        result = {"job": job_id, "mode": mode, "status": "done"}
        try:
            if mode == "init":
                prob, box = pipeline.initial_pseudo_label(v, pts, config)
                mask = pipeline.paste_to_full(
                    randomwalker.threshold(prob, 0.5).data, box, v.dims, v.spacing)
                rounds = []
            else:
                cases, records = pipeline.run_detailed([(v, pts)], config)
                mask = cases[0].full_mask()
                rounds = [json.loads(r.to_json()) for r in records]
            result["overlay"] = encode_overlay(mask.data)
            result["dims"] = list(v.dims)
            result["rounds"] = rounds
            result["mean_dice_prev"] = rounds[-1]["mean_dice_prev"] if rounds else None
        except Exception as e:  # surfaced to the client on next poll
            result = {"job": job_id, "mode": mode, "status": "failed", "error": str(e)}
        sess.result_path.parent.mkdir(parents=True, exist_ok=True)
        sess.result_path.write_text(json.dumps(result))
        sess.job_running = False

    @app.post("/cases/{case_id}/segment")
    def post_segment(case_id: str, mode: str = Query("init")):
        v = get_case(case_id)
        if v is None:
            return _error(404, f"unknown case {case_id}")
        if mode not in ("init", "full"):
            return _error(422, f"mode must be init or full, got {mode!r}")
        sess = session_of(case_id)
        pts = sess.load_points()
        if len(pts) < len(SLOT_NAMES):
            return _error(409, "session not ready: six points required")
        with sess.lock:
            if sess.job_running:
                return _error(409, "a job is already running for this case")
            sess.job_running = True
        job_id = uuid.uuid4().hex
        threading.Thread(target=run_job, args=(case_id, mode, job_id), daemon=True).start()
        return {"job": job_id, "status": "running"}

    @app.get("/cases/{case_id}/result")
    def get_result(case_id: str):
        sess = session_of(case_id)
        if sess.job_running:
            return {"status": "running"}
        if not sess.result_path.exists():
            return _error(404, "no segmentation result for this case")
        return json.loads(sess.result_path.read_text())

    return app
