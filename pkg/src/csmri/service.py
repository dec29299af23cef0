"""FastAPI service exposing the benchmark harness verbs.

Endpoints operate on filesystem paths visible to the service process;
request and response bodies are small JSON documents, never pixel data.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, dataio, harness
from .core import CropSpec
from .masking import MaskPolicy, apply_mask, make_mask

app = FastAPI(title="csmri", version=__version__)


class SimulateRequest(BaseModel):
    config_path: str | None = None
    config: dict | None = None
    out_dir: str
    seed: int = 0


class SimulateResponse(BaseModel):
    volumes: list[str]


class MaskRequest(BaseModel):
    corpus_dir: str
    out_dir: str
    kind: str = "random"
    acceleration: int = 4
    seed: int = 0


class MaskResponse(BaseModel):
    volumes: list[str]
    achieved_accelerations: dict[str, float]


class RunPlanRequest(BaseModel):
    plan_path: str | None = None
    plan: dict | None = None


class RunPlanResponse(BaseModel):
    out_dir: str
    cell_count: int
    n_rows: int
    n_failures: int
    report_paths: dict[str, str]


class EvaluateRequest(BaseModel):
    recon_dir: str
    corpus_dir: str
    out_dir: str
    crop: tuple[int, int] | None = None
    stem: str = "external"


class EvaluateResponse(BaseModel):
    n_rows: int
    n_failures: int
    report_paths: dict[str, str]


class ReportRequest(BaseModel):
    results_path: str = Field(description="structured results JSON from a previous run")
    out_dir: str
    stem: str = "results"


class ReportResponse(BaseModel):
    report_paths: dict[str, str]


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    if req.config is None and req.config_path is None:
        raise HTTPException(422, "either config or config_path is required")
    config = req.config
    if config is None:
        try:
            config = json.loads(Path(req.config_path).read_text())
        except OSError as exc:
            raise HTTPException(400, f"cannot read config: {exc}")
    try:
        written = harness.simulate_corpus(config, req.out_dir, seed=req.seed)
    except (KeyError, ValueError) as exc:
        raise HTTPException(400, f"bad corpus config: {exc}")
    return SimulateResponse(volumes=written)


@app.post("/mask", response_model=MaskResponse)
def mask_corpus(req: MaskRequest) -> MaskResponse:
    """Write masked, test-style copies of every corpus volume."""
    from .masking import achieved_acceleration

    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    achieved = {}
    try:
        policy = MaskPolicy.canonical(req.acceleration, req.kind)
    except KeyError:
        raise HTTPException(400, f"no canonical policy for acceleration {req.acceleration}")
    for path in harness.corpus_volume_paths(req.corpus_dir):
        record = dataio.read_volume(path)
        vid = path.stem
        seed = dataio.stable_seed(req.seed, vid, req.kind, req.acceleration)
        m = make_mask(record.kspace.data.shape[-1], policy, seed)
        masked = dataio.VolumeRecord(
            kspace=apply_mask(record.kspace, m),
            mask=m,
            acquisition=record.acquisition,
            patient_id=record.patient_id,
            acceleration=req.acceleration,
            num_low_frequency=m.num_low_frequency,
        )
        out_path = out / f"{vid}.h5"
        dataio.write_volume(masked, out_path)
        written.append(str(out_path))
        achieved[vid] = achieved_acceleration(m)
    return MaskResponse(volumes=written, achieved_accelerations=achieved)


@app.post("/reconstruct", response_model=RunPlanResponse)
def reconstruct(req: RunPlanRequest) -> RunPlanResponse:
    """Run a reconstruction sweep described by an experiment plan."""
    if req.plan is None and req.plan_path is None:
        raise HTTPException(422, "either plan or plan_path is required")
    if req.plan is not None:
        plan = harness.ExperimentPlan.from_json(json.dumps(req.plan))
    else:
        try:
            plan = harness.ExperimentPlan.from_json(Path(req.plan_path).read_text())
        except OSError as exc:
            raise HTTPException(400, f"cannot read plan: {exc}")
    table = harness.run_plan(plan)
    paths = harness.emit_report(table, plan.out_dir)
    return RunPlanResponse(
        out_dir=plan.out_dir,
        cell_count=plan.cell_count(),
        n_rows=len(table.rows),
        n_failures=len(table.failures),
        report_paths=paths,
    )


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate(req: EvaluateRequest) -> EvaluateResponse:
    crop = CropSpec(*req.crop) if req.crop else None
    table = harness.score_external(req.recon_dir, req.corpus_dir, crop)
    paths = harness.emit_report(table, req.out_dir, stem=req.stem)
    return EvaluateResponse(
        n_rows=len(table.rows),
        n_failures=len(table.failures),
        report_paths=paths,
    )


@app.post("/report", response_model=ReportResponse)
def report(req: ReportRequest) -> ReportResponse:
    try:
        table = harness.ResultTable.from_json(Path(req.results_path).read_text())
    except OSError as exc:
        raise HTTPException(400, f"cannot read results: {exc}")
    paths = harness.emit_report(table, req.out_dir, stem=req.stem)
    return ReportResponse(report_paths=paths)
