"""HTTP service exposing the pipeline to the companion web client.

Endpoints:
  POST /inputs              raw PNG/JPEG body -> {input_id}
  POST /jobs                {input_id, condition} or {input_id, params} -> {job_id}
  GET  /jobs/{id}           job record
  GET  /jobs/{id}/examples  result manifest + image URLs
  GET  /healthz
  GET  /images/...          static image serving
  GET  /ui/...              static web client, when built

Jobs run on a bounded in-process worker pool; each job owns a directory
under data_dir/jobs with a JSON record that survives restarts.  State
moves strictly forward: queued -> running -> done | failed.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from .dataset import Screenshot, load_corpus, resize_to_square
from .encoder import EncodeConfig, encode
from .experiments import ExperimentContext, run_condition
from .gan.checkpoint import Checkpoint
from .gan.model import GanModel
from .metrics import ExampleSet, diversity, similarity
from .perception import get_backend
from .selection import select_from_batch
from .stylemerge import enumerate_ranges, granularity_of, make_targets, merge_codes

JOB_STATES = ("queued", "running", "done", "failed")
_STATE_ORDER = {s: i for i, s in enumerate(JOB_STATES)}


@dataclass
class ServiceConfig:
    checkpoint: str
    corpus_manifest: str
    search_manifest: str
    data_dir: str
    workers: int = 2
    seed: int = 0
    eps: float = 0.9
    backend: str = "multiscale"
    max_upload_bytes: int = 8 * 1024 * 1024
    encode_iterations: int = 60
    ui_dir: str | None = None

    @classmethod
    def load(cls, path: Path) -> "ServiceConfig":
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class Job:
    id: str
    input_id: str
    condition: int | None = None
    params: dict | None = None
    state: str = "queued"
    created_at: float = field(default_factory=time.time)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "input_id": self.input_id,
            "condition": self.condition,
            "params": self.params,
            "state": self.state,
            "created_at": self.created_at,
            "error": self.error,
        }


class JobStore:
    """Directory-per-job persistence with forward-only state updates."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.lock = threading.Lock()

    def job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def save(self, job: Job) -> None:
        with self.lock:
            current = self.get(job.id)
            if current and _STATE_ORDER[job.state] < _STATE_ORDER[current.state]:
                raise RuntimeError(
                    f"illegal state transition {current.state} -> {job.state}"
                )
            d = self.job_dir(job.id)
            d.mkdir(parents=True, exist_ok=True)
            (d / "job.json").write_text(json.dumps(job.to_dict(), indent=2))

    def get(self, job_id: str) -> Job | None:
        path = self.job_dir(job_id) / "job.json"
        if not path.exists():
            return None
        return Job(**json.loads(path.read_text()))

    def manifest(self, job_id: str) -> dict | None:
        path = self.job_dir(job_id) / "manifest.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())


class Pipeline:
    """Lazy-loaded model/corpus shared by workers."""

    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self._lock = threading.Lock()
        self._ctx: ExperimentContext | None = None

    def ctx(self) -> ExperimentContext:
        with self._lock:
            if self._ctx is None:
                ckpt = Checkpoint.load(Path(self.cfg.checkpoint))
                self._ctx = ExperimentContext(
                    model=GanModel(ckpt),
                    corpus=load_corpus(Path(self.cfg.corpus_manifest)),
                    search_corpus=load_corpus(Path(self.cfg.search_manifest)),
                    backend=get_backend(self.cfg.backend),
                    seed=self.cfg.seed,
                    eps=self.cfg.eps,
                    encode_cfg=EncodeConfig(max_iterations=self.cfg.encode_iterations),
                )
            return self._ctx


def _validate_params(params: dict) -> dict:
    allowed = {"targets_mode", "k", "eps", "granularity", "seed"}
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"unknown params: {sorted(unknown)}")
    mode = params.get("targets_mode", "random")
    if mode not in ("random", "corpus"):
        raise ValueError("targets_mode must be 'random' or 'corpus'")
    k = int(params.get("k", 5))
    if k < 1:
        raise ValueError("k must be >= 1")
    eps = float(params.get("eps", 0.9))
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    gran = params.get("granularity", "all")
    if gran not in ("coarse", "middle", "fine", "all"):
        raise ValueError("granularity must be coarse|middle|fine|all")
    return {"targets_mode": mode, "k": k, "eps": eps, "granularity": gran,
            "seed": int(params.get("seed", 0))}


def execute_job(job: Job, pipeline: Pipeline, store: JobStore, inputs_dir: Path) -> None:
    job.state = "running"
    store.save(job)
    try:
        ctx = pipeline.ctx()
        input_path = inputs_dir / f"{job.input_id}.png"
        image = np.asarray(Image.open(input_path).convert("RGB"))
        shot = Screenshot(id=job.input_id, image=image,
                          labels=frozenset({"#0", "#1", "#2"}), source_path=str(input_path))
        job_dir = store.job_dir(job.id)
        if job.condition is not None:
            manifest = _run_condition_job(job, shot, ctx, job_dir)
        else:
            manifest = _run_custom_job(job, shot, ctx, job_dir)
        (job_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
        job.state = "done"
        store.save(job)
    except Exception as exc:
        job.state = "failed"
        job.error = str(exc)
        store.save(job)


def _save_examples(images, job_dir: Path) -> list[str]:
    files = []
    for i, img in enumerate(images):
        name = f"ex{i:03d}.png"
        Image.fromarray(img).save(job_dir / name)
        files.append(name)
    return files


def _run_condition_job(job: Job, shot: Screenshot, ctx: ExperimentContext, job_dir: Path) -> dict:
    report = run_condition(job.condition, shot, ctx)
    files = _save_examples(report.example_set.examples, job_dir)
    examples = []
    for i, name in enumerate(files):
        entry = {
            "id": f"{job.id}:{i}",
            "file": name,
            "provenance": report.example_set.provenance[i],
        }
        if report.example_ids:
            entry["source_id"] = report.example_ids[i]
        examples.append(entry)
    return {
        "condition": job.condition,
        "n": len(examples),
        "similarity": report.similarity,
        "diversity": report.diversity,
        "examples": examples,
    }


def _run_custom_job(job: Job, shot: Screenshot, ctx: ExperimentContext, job_dir: Path) -> dict:
    from .stylemerge import synthesize_pair

    params = job.params
    model = ctx.model
    enc = encode(shot.image, model, ctx.encode_cfg)
    mode = "random_latent" if params["targets_mode"] == "random" else "corpus_image"
    targets = make_targets(mode, params["k"], model, params["seed"],
                           corpus=ctx.corpus, encode_cfg=ctx.encode_cfg)
    slots = model.cfg.slots
    ranges = enumerate_ranges(slots)
    if params["granularity"] != "all":
        ranges = [r for r in ranges if granularity_of(r, slots) == params["granularity"]]
    pooled = []
    meta = []
    for tid, code in targets:
        codes = [merge_codes(enc.code, code, r) for r in ranges]
        for r, img in zip(ranges, model.synthesize_batch(codes)):
            pooled.append(img)
            meta.append({"target": tid, "slot_range": [r.start, r.end],
                         "granularity": granularity_of(r, slots)})
    reps = select_from_batch(pooled, model, ctx.backend, params["eps"])
    files = _save_examples(reps.images, job_dir)
    examples = []
    for i, (name, member) in enumerate(zip(files, reps.member_index_per_cluster)):
        examples.append({
            "id": f"{job.id}:{i}",
            "file": name,
            "provenance": "generated",
            "score": reps.scores[i],
            **meta[member],
        })
    example_set = ExampleSet(input_id=shot.id, examples=reps.images)
    sim = similarity(shot.image, example_set, ctx.backend)
    div = diversity(example_set, ctx.backend) if len(reps.images) >= 2 else None
    return {
        "params": params,
        "n": len(examples),
        "similarity": sim,
        "diversity": div,
        "examples": examples,
    }


def create_app(cfg: ServiceConfig) -> FastAPI:
    app = FastAPI(title="ganspire")
    data_dir = Path(cfg.data_dir)
    inputs_dir = data_dir / "inputs"
    inputs_dir.mkdir(parents=True, exist_ok=True)
    store = JobStore(data_dir / "jobs")
    pipeline = Pipeline(cfg)
    pool = ThreadPoolExecutor(max_workers=cfg.workers)
    app.state.store = store
    app.state.pool = pool

    def model_resolution() -> int:
        # read from the checkpoint header without loading the model
        import zipfile

        from .gan.nets import GeneratorConfig

        header = json.loads(zipfile.ZipFile(cfg.checkpoint).read("header.json"))
        return GeneratorConfig.from_dict(header["config"]).final_resolution

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/inputs", status_code=201)
    async def upload_input(request: Request):
        body = await request.body()
        if len(body) > cfg.max_upload_bytes:
            raise HTTPException(413, "upload too large")
        try:
            img = Image.open(io.BytesIO(body))
            if img.format not in ("PNG", "JPEG"):
                raise ValueError(img.format)
            img = img.convert("RGB")
        except Exception:
            raise HTTPException(415, "body must be a PNG or JPEG image")
        arr = resize_to_square(np.asarray(img), model_resolution())
        input_id = uuid.uuid4().hex[:12]
        Image.fromarray(arr).save(inputs_dir / f"{input_id}.png")
        return {"input_id": input_id}

    @app.post("/jobs", status_code=202)
    def submit_job(payload: dict):
        input_id = payload.get("input_id")
        if not input_id or not (inputs_dir / f"{input_id}.png").exists():
            raise HTTPException(404, "unknown input")
        condition = payload.get("condition")
        params = payload.get("params")
        if condition is not None:
            if not isinstance(condition, int) or condition not in range(1, 7):
                raise HTTPException(422, "condition must be an integer in 1..6")
            params = None
        else:
            try:
                params = _validate_params(params or {})
            except ValueError as exc:
                raise HTTPException(422, str(exc))
        job = Job(id=uuid.uuid4().hex[:12], input_id=input_id,
                  condition=condition, params=params)
        store.save(job)
        pool.submit(execute_job, job, pipeline, store, inputs_dir)
        return {"job_id": job.id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(404, "unknown job")
        return job.to_dict()

    @app.get("/jobs/{job_id}/examples")
    def get_examples(job_id: str):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(404, "unknown job")
        if job.state != "done":
            raise HTTPException(409, f"job is {job.state}")
        manifest = store.manifest(job_id)
        urls = [f"/images/{job_id}/{e['file']}" for e in manifest["examples"]]
        return {"manifest": manifest, "urls": urls}

    @app.get("/images/{job_id}/{name}")
    def serve_image(job_id: str, name: str):
        path = store.job_dir(job_id) / name
        if not path.exists() or not name.endswith(".png"):
            raise HTTPException(404, "unknown image")
        return FileResponse(path)

    ui_dir = cfg.ui_dir or str(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    if Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
