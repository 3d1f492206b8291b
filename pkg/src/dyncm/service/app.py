"""HTTP service around the simulation and oracle library."""
from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..dynamics import k_from_alpha
from ..experiments import ExperimentConfig, generate_degrees, run_profile_experiment, rows_to_csv
from ..halfedge import Configuration, DegreeSequence, build_degree_sequence, sample_uniform_configuration
from ..regularity import check_conditions
from ..verification import run_verification_suite
from ..walk import _default_path, exact_reset_law, run_joint
from .schemas import (
    CheckResponse,
    ExactResponse,
    GraphSpec,
    JobStatus,
    ProfileRequest,
    ProfileResponse,
    ResetLawRequest,
    ResetLawResponse,
    SimulateRequest,
    SimulateResponse,
    finite_or_none,
)

app = FastAPI(title="dyncm", version=__version__)

_jobs: dict[str, JobStatus] = {}
_jobs_lock = threading.Lock()
_executor = ThreadPoolExecutor(max_workers=1)


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


def build_graph(spec: GraphSpec) -> DegreeSequence:
    if spec.degrees is not None:
        mode = spec.mode or ("R*" if min(spec.degrees, default=0) >= 3 else "R")
        return build_degree_sequence(spec.degrees, mode)
    fields = spec.model_dump(include={"model", "n", "d", "d1", "d2", "frac1", "gamma", "seed"},
                             exclude_none=True)
    if spec.model != "bivalued":
        fields.setdefault("d1", None)
        fields.setdefault("d2", None)
        fields.setdefault("frac1", None)
    ds = generate_degrees(ExperimentConfig(**fields), np.random.default_rng([spec.seed, 1]))
    return build_degree_sequence(ds.degrees, spec.mode) if spec.mode else ds


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/check", response_model=CheckResponse)
def check(spec: GraphSpec):
    report = check_conditions(build_graph(spec))
    body = report.to_dict()
    body["statistics"] = {k: finite_or_none(v) for k, v in body["statistics"].items()}
    for c in body["checks"]:
        c["value"] = finite_or_none(c["value"])
    body["text"] = report.to_text()
    return body


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest):
    ds = build_graph(req.graph)
    rng = np.random.default_rng([req.seed, 2])
    eta = sample_uniform_configuration(ds, rng)
    x = int(rng.integers(ds.ell)) if req.x is None else req.x
    if not 0 <= x < ds.ell:
        raise ValueError(f"start half-edge {x} outside [0, {ds.ell})")
    if req.alpha is not None:
        k = k_from_alpha(req.alpha, ds.m)
    else:
        k = req.k or 0
    rec = run_joint(ds, eta, x, req.t, k, rng, record=req.record_trace)
    return SimulateResponse(
        ell=ds.ell, k=k, x0=x, trajectory=[int(v) for v in rec.trajectory], tau=rec.tau,
        self_avoiding=rec.self_avoiding, configuration=eta.to_text(), text=rec.to_text(),
        trace=rec.trace.to_text() if req.record_trace else None,
    )


def _profile(req: ProfileRequest) -> ProfileResponse:
    cfg = ExperimentConfig(**req.model_dump(exclude={"workers", "fresh"}))
    rows = run_profile_experiment(cfg, workers=req.workers, fresh=req.fresh, out=req.out)
    dicts = [{k: finite_or_none(v) for k, v in r.to_dict().items()} for r in rows]
    return ProfileResponse(rows=dicts, csv=rows_to_csv(rows))


@app.post("/profile", response_model=ProfileResponse)
def profile(req: ProfileRequest):
    return _profile(req)


@app.post("/jobs", response_model=JobStatus, status_code=202)
def submit_job(req: ProfileRequest):
    job = JobStatus(id=uuid.uuid4().hex, status="pending")
    with _jobs_lock:
        _jobs[job.id] = job

    def work():
        job.status = "running"
        try:
            job.result = _profile(req)
            job.status = "done"
        except Exception as exc:  # reported through the job record
            job.error = f"{type(exc).__name__}: {exc}"
            job.status = "failed"

    _executor.submit(work)
    return job


@app.get("/jobs/{job_id}", response_model=JobStatus)
def job_status(job_id: str):
    with _jobs_lock:
        job = _jobs.get(job_id)
    if job is None:
        raise HTTPException(status_code=404, detail=f"no job {job_id}")
    return job


@app.post("/exact", response_model=ExactResponse)
def exact():
    rep = run_verification_suite()
    return ExactResponse(ok=rep.ok, checks=[c.__dict__ for c in rep.checks], text=rep.to_text())


@app.post("/reset-law", response_model=ResetLawResponse)
def reset_law(req: ResetLawRequest):
    ds = build_degree_sequence(req.degrees, "R*" if min(req.degrees) >= 3 else "R")
    eta = Configuration.from_text(req.configuration) if req.configuration else None
    path = req.path
    if eta is None or path is None:
        eta, path = _default_path(ds, req.t, eta)
    law = exact_reset_law(ds, req.k, req.t, eta, path)
    entries = [{"T": sorted(T), "p": p} for T, p in sorted(law.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))]
    return ResetLawResponse(ell=ds.ell, k=req.k, t=req.t, path=[int(h) for h in path],
                            configuration=eta.to_text(), law=entries, total=sum(law.values()))
