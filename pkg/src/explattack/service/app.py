"""FastAPI service wrapping the core toolkit.

The endpoints are stateless: models travel as JSON checkpoints inside the
requests, graphs as explicit payloads, datasets as generator specs (or
server-local manifest paths).  The CLI is a thin client of this app.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..datasets import DatasetError, dataset_payload
from ..explainer import ExplainerError, explain_instance
from ..gcn import GcnError, GcnModel, GcnTrainingError
from ..graphs import EdgeSet, GraphError, Perturbation
from ..harness import (
    ExperimentConfig,
    HarnessError,
    METHODS,
    ablation_sweep,
    export_dot,
    load_dataset,
    prepare_model,
    run_attack_method,
    run_experiment,
)
from ..attack import AttackError
from ..powerlaw import DegenerateSampleError
from . import schemas

_USER_ERRORS = (DatasetError, ExplainerError, GcnError, GcnTrainingError,
                GraphError, HarnessError, AttackError, DegenerateSampleError,
                KeyError, ValueError)


def create_app() -> FastAPI:
    app = FastAPI(title="explattack", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/datasets/generate", response_model=schemas.GenerateResponse)
    def generate_dataset(req: schemas.GenerateRequest):
        try:
            bundle = load_dataset({"kind": req.kind, "seed": req.seed, **req.params})
            manifest, texts = dataset_payload(bundle)
        except _USER_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.GenerateResponse(manifest=manifest, graph_texts=texts)

    @app.post("/models/train", response_model=schemas.TrainResponse)
    def train_model(req: schemas.TrainRequest):
        try:
            bundle = load_dataset(req.dataset)
            cfg = ExperimentConfig(dataset=req.dataset, train=req.train.to_config())
            model, report = prepare_model(bundle, cfg)
        except _USER_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.TrainResponse(checkpoint=model.to_dict(), report=report)

    @app.post("/explain", response_model=schemas.ExplainResponse)
    def explain_endpoint(req: schemas.ExplainRequest):
        try:
            model = GcnModel.from_dict(req.checkpoint)
            g = req.graph.to_graph()
            result = explain_instance(model, g, req.label, req.config.to_config(),
                                      target=req.target)
        except _USER_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.ExplainResponse(
            mask={f"{u}-{v}": float(m) for (u, v), m in
                  zip(result.global_edges, result.result.mask)},
            explanatory_edges=[[int(u), int(v)] for u, v in result.global_explanatory],
            loss_curve=[float(x) for x in result.result.loss_curve],
        )

    @app.post("/attack", response_model=schemas.AttackResponse)
    def attack_endpoint(req: schemas.AttackRequest):
        if req.method not in METHODS:
            raise HTTPException(status_code=400,
                                detail=f"unknown method {req.method!r}; "
                                       f"expected one of {METHODS}")
        try:
            model = GcnModel.from_dict(req.checkpoint)
            g = req.graph.to_graph()
            ecfg = req.explainer.to_config()
            acfg = req.attack.to_config()
            clean = explain_instance(model, g, req.label, ecfg, target=req.target)
            res = run_attack_method(req.method, model, g, req.label, clean,
                                    acfg, ecfg, req.target)
        except _USER_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.AttackResponse(
            method=req.method,
            clean_explanation=[[int(u), int(v)] for u, v in clean.global_explanatory],
            record=res.record(),
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_endpoint(req: schemas.EvaluateRequest):
        try:
            cfg = ExperimentConfig.from_dict(req.experiment)
            result = run_experiment(cfg)
        except _USER_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.EvaluateResponse(
            results_csv=result.results_csv(),
            timings_csv=result.timings_csv(),
            results_json=result.results_json(),
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep_endpoint(req: schemas.SweepRequest):
        try:
            cfg = ExperimentConfig.from_dict(req.experiment)
            items = ablation_sweep(cfg, req.parameter, req.values)
        except _USER_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.SweepResponse(items=[
            schemas.SweepItem(value=float(v), results_csv=r.results_csv(),
                              results_json=r.results_json())
            for v, r in items
        ])

    @app.post("/export-dot", response_model=schemas.ExportDotResponse)
    def export_dot_endpoint(req: schemas.ExportDotRequest):
        try:
            g = req.graph.to_graph()
            e_s = EdgeSet.from_pairs(req.explanatory_edges)
            p = Perturbation(additions=EdgeSet.from_pairs(req.added_edges),
                             deletions=EdgeSet.from_pairs(req.deleted_edges))
            dot = export_dot(g, e_s, p)
        except _USER_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.ExportDotResponse(dot=dot)

    return app


app = create_app()
