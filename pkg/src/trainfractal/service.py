"""HTTP facade over the renderer for the explorer UI.

Small requests (width x height <= 65536 pixels) render synchronously and
return artifact URLs inline; larger ones join a bounded job queue served by
a single background thread, because one render already saturates the worker
pool.  Artifacts of finished jobs are immutable: repeated fetches return
identical bytes.
"""

from __future__ import annotations

import io
import json
import secrets
import threading
from collections import OrderedDict, deque
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from starlette.concurrency import run_in_threadpool

from . import fracdim, renderer
from .colorize import colorize
from .conditions import CONDITION_IDS, preset
from .formats import (
    ConfigError,
    RangeError,
    RenderRequest,
    decode_request,
    encode_request,
    field_to_bytes,
    png_bytes,
    write_boxcount_csv,
)

SYNC_PIXEL_LIMIT = 65536
MAX_QUEUED_JOBS = 8
MAX_COMPLETED_JOBS = 64

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"


@dataclass
class RenderJob:
    id: str
    request: RenderRequest
    state: str = QUEUED
    progress: float = 0.0
    message: str = ""
    artifacts: dict = dataclass_field(default_factory=dict)


class JobRegistry:
    """All job state behind one lock; terminal states are immutable."""

    def __init__(self, output_dir: Path | None, workers: int | None):
        self._lock = threading.Lock()
        self._jobs: OrderedDict[str, RenderJob] = OrderedDict()
        self._queue: deque[RenderJob] = deque()
        self._completed: deque[str] = deque()
        self._wakeup = threading.Condition(self._lock)
        self._render_lock = threading.Lock()
        self.output_dir = output_dir
        self.workers = workers
        self._worker = threading.Thread(target=self._drain, daemon=True)
        self._worker.start()

    def submit_async(self, request: RenderRequest) -> RenderJob | None:
        job = RenderJob(id=secrets.token_hex(16), request=request)
        with self._wakeup:
            if len(self._queue) >= MAX_QUEUED_JOBS:
                return None
            self._jobs[job.id] = job
            self._queue.append(job)
            self._wakeup.notify()
        return job

    def run_sync(self, request: RenderRequest) -> RenderJob:
        job = RenderJob(id=secrets.token_hex(16), request=request)
        with self._lock:
            self._jobs[job.id] = job
        self._execute(job)
        return job

    def get(self, job_id: str) -> RenderJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def _drain(self):
        while True:
            with self._wakeup:
                while not self._queue:
                    self._wakeup.wait()
                job = self._queue.popleft()
            self._execute(job)

    def _execute(self, job: RenderJob):
        with self._render_lock:  # one render at a time over the full pool
            with self._lock:
                job.state = RUNNING
            try:
                artifacts = _render_artifacts(self, job, self.workers)
            except Exception as exc:  # surfaced through job state
                with self._lock:
                    job.state = FAILED
                    job.message = str(exc)
                    self._retire(job.id)
                return
        if self.output_dir is not None:
            _write_artifacts(self.output_dir, job.id, artifacts)
        with self._lock:
            job.artifacts = artifacts
            job.progress = 1.0
            job.state = DONE
            self._retire(job.id)

    def _retire(self, job_id: str):
        self._completed.append(job_id)
        while len(self._completed) > MAX_COMPLETED_JOBS:
            evicted = self._completed.popleft()
            self._jobs.pop(evicted, None)

    def set_progress(self, job: RenderJob, fraction: float):
        with self._lock:
            if job.state == RUNNING and fraction > job.progress:
                job.progress = fraction


def _render_artifacts(registry: JobRegistry, job: RenderJob,
                      workers: int | None) -> dict:
    condition, viewport, steps, _ = job.request.resolve()

    def progress(done, total):
        registry.set_progress(job, done / total)

    field = renderer.render_field(
        condition, viewport, job.request.width, job.request.height,
        job.request.seed, steps, workers=workers, progress=progress,
    )
    dimension = r2 = None
    csv_text = "box_size,occupied\n# dimension=nan\n# r2=nan\n"
    try:
        result = fracdim.field_dimension(field)
        dimension, r2 = result.dimension, result.fit_r2
        buf = io.StringIO()
        write_boxcount_csv(result, buf)
        csv_text = buf.getvalue()
    except (fracdim.InsufficientScalesError, ValueError):
        pass
    return {
        "image.png": png_bytes(colorize(field)),
        "field.nnfr": field_to_bytes(field),
        "fracdim.csv": csv_text.encode(),
        "config.json": encode_request(job.request).encode(),
        "dimension": dimension,
        "r2": r2,
    }


def _write_artifacts(output_dir: Path, job_id: str, artifacts: dict):
    output_dir.mkdir(parents=True, exist_ok=True)
    for name in ("image.png", "field.nnfr", "fracdim.csv", "config.json"):
        (output_dir / f"{job_id}-{name}").write_bytes(artifacts[name])


def create_app(output_dir=None, workers: int | None = None,
               allow_origins=("*",)) -> FastAPI:
    app = FastAPI(title="trainfractal")
    app.add_middleware(
        CORSMiddleware, allow_origins=list(allow_origins),
        allow_methods=["*"], allow_headers=["*"],
    )
    registry = JobRegistry(Path(output_dir) if output_dir else None, workers)
    app.state.registry = registry

    @app.get("/api/conditions")
    def conditions():
        out = []
        for cid in CONDITION_IDS:
            cond = preset(cid)
            out.append({
                "id": cid,
                "label": cond.label,
                "steps": cond.train_defaults.steps,
                "x_axis": _axis_json(cond.x_axis),
                "y_axis": _axis_json(cond.y_axis),
            })
        return out

    @app.post("/api/render")
    async def render(request: Request):
        raw = await request.body()
        return await run_in_threadpool(_handle_render, registry, raw)

    @app.get("/api/render/{job_id}/status")
    def status(job_id: str):
        job = registry.get(job_id)
        if job is None:
            return _json_error(404, f"unknown job {job_id}")
        return {"state": job.state, "progress": round(job.progress, 6),
                "message": job.message}

    def _artifact(job_id: str, name: str, media_type: str):
        job = registry.get(job_id)
        if job is None:
            return _json_error(404, f"unknown job {job_id}")
        if job.state != DONE:
            return _json_error(409, f"job is {job.state}, not finished")
        return Response(content=job.artifacts[name], media_type=media_type)

    @app.get("/api/render/{job_id}/image.png")
    def image(job_id: str):
        return _artifact(job_id, "image.png", "image/png")

    @app.get("/api/render/{job_id}/field.nnfr")
    def field_bytes(job_id: str):
        return _artifact(job_id, "field.nnfr", "application/octet-stream")

    @app.get("/api/render/{job_id}/fracdim.csv")
    def fracdim_csv(job_id: str):
        return _artifact(job_id, "fracdim.csv", "text/csv")

    return app


def _axis_json(axis):
    return {"target": axis.target.value, "scale": axis.scale.value,
            "lo": axis.lo, "hi": axis.hi}


def _json_error(code: int, message: str) -> Response:
    return Response(content=json.dumps({"error": message}),
                    status_code=code, media_type="application/json")


def _handle_render(registry: JobRegistry, raw: bytes):
    try:
        request = decode_request(raw)
        request.resolve()  # surfaces range errors before any work
    except ConfigError as exc:
        return _json_error(400, str(exc))
    except RangeError as exc:
        return _json_error(422, str(exc))
    if request.width * request.height <= SYNC_PIXEL_LIMIT:
        job = registry.run_sync(request)
        if job.state == FAILED:
            return _json_error(500, job.message)
        return {
            "job_id": job.id,
            "image_url": f"/api/render/{job.id}/image.png",
            "field_url": f"/api/render/{job.id}/field.nnfr",
            "dimension": job.artifacts["dimension"],
            "r2": job.artifacts["r2"],
        }
    job = registry.submit_async(request)
    if job is None:
        return _json_error(429, "job queue is full")
    return {"job_id": job.id}
