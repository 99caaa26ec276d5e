"""Experiment runner: explain, attack, aggregate, export.

Reproducibility contract: every result row is a pure function of the
experiment config.  Per-instance RNG streams are derived from
(seed, instance id), aggregation is keyed and sorted by instance id, and
wall-clock timings are kept out of the deterministic artifacts (they go
to a separate timings table), so repeated runs and parallel workers
produce byte-identical results files.
"""

from __future__ import annotations

import dataclasses
import json
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .attack import (
    AttackConfig,
    AttackResult,
    deduction_based_attack,
    kill_hot_attack,
    loss_based_attack,
    random_attack,
)
from .datasets import BenchmarkInstance, DatasetBundle, generate, load_edge_list_dataset
from .explainer import ExplainerConfig, explain_instance
from .gcn import GcnModel, NODE_TASK, TrainConfig, predict, train_gcn
from .graphs import EdgeSet, Graph, Perturbation

METHODS = ("random", "kill-hot", "loss", "deduction")


class HarnessError(ValueError):
    pass


def overlap_ratio(e_s: EdgeSet, e_s_tilde: EdgeSet) -> float:
    """|E_S - E_S ∩ E_S~| / |E_S|: 0 = unchanged explanation, 1 = disjoint."""
    if len(e_s) == 0:
        raise HarnessError("overlap_ratio needs a non-empty explanation")
    return (len(e_s) - e_s.intersection_size(e_s_tilde)) / len(e_s)


@dataclass
class ExperimentConfig:
    dataset: dict                    # {"kind", "seed", ...params} or {"manifest": path}
    explainer: ExplainerConfig = field(default_factory=ExplainerConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    methods: tuple = METHODS
    case_count: int = 50
    seed: int = 0
    workers: int = 1
    checkpoint: Optional[str] = None   # load model instead of training

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise HarnessError(f"unknown method {m!r}, expected subset of {METHODS}")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "explainer": dataclasses.asdict(self.explainer),
            "attack": dataclasses.asdict(self.attack),
            "train": dataclasses.asdict(self.train),
            "methods": list(self.methods),
            "case_count": self.case_count,
            "seed": self.seed,
            "workers": self.workers,
            "checkpoint": self.checkpoint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            dataset=d["dataset"],
            explainer=ExplainerConfig(**d.get("explainer", {})),
            attack=AttackConfig(**d.get("attack", {})),
            train=TrainConfig(**d.get("train", {})),
            methods=tuple(d.get("methods", METHODS)),
            case_count=int(d.get("case_count", 50)),
            seed=int(d.get("seed", 0)),
            workers=int(d.get("workers", 1)),
            checkpoint=d.get("checkpoint"),
        )


@dataclass
class ResultRow:
    explainer: str
    method: str
    dataset: str
    cases: int
    mean_overlap: float
    failure_fraction: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    instance_records: list[dict]
    timings_ms: dict                  # method -> mean wall clock, non-deterministic
    config: dict
    train_report: dict

    def results_csv(self) -> str:
        lines = ["explainer,method,dataset,cases,mean_overlap,failure_fraction"]
        for r in self.rows:
            lines.append(f"{r.explainer},{r.method},{r.dataset},{r.cases},"
                         f"{r.mean_overlap!r},{r.failure_fraction!r}")
        return "\n".join(lines) + "\n"

    def timings_csv(self) -> str:
        lines = ["explainer,method,dataset,mean_runtime_ms"]
        for r in self.rows:
            ms = self.timings_ms.get(r.method, float("nan"))
            lines.append(f"{r.explainer},{r.method},{r.dataset},{ms!r}")
        return "\n".join(lines) + "\n"

    def results_json(self) -> str:
        payload = {
            "config": self.config,
            "train_report": self.train_report,
            "rows": [r.to_dict() for r in self.rows],
            "instances": self.instance_records,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def write(self, out_dir) -> list[str]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(self.results_csv())
        (out / "results.json").write_text(self.results_json())
        (out / "timings.csv").write_text(self.timings_csv())
        return [str(out / n) for n in ("results.csv", "results.json", "timings.csv")]


def instance_seed(seed: int, instance_id: str) -> int:
    """Stable per-instance stream: independent of iteration or worker order."""
    return int(np.random.SeedSequence(
        [seed, zlib.crc32(instance_id.encode())]).generate_state(1)[0])


def load_dataset(spec: dict) -> DatasetBundle:
    if "manifest" in spec:
        return load_edge_list_dataset(spec["manifest"])
    spec = dict(spec)
    kind = spec.pop("kind")
    seed = int(spec.pop("seed", 0))
    return generate(kind, seed, **spec)


def prepare_model(bundle: DatasetBundle, cfg: ExperimentConfig) -> tuple[GcnModel, dict]:
    if cfg.checkpoint:
        return GcnModel.load(cfg.checkpoint), {"loaded_from": cfg.checkpoint}
    model, report = train_gcn(
        [bundle.graph] if bundle.task_kind == NODE_TASK else bundle.graphs,
        cfg.train,
        train_idx=(bundle.train_nodes if bundle.task_kind == NODE_TASK else
                   np.asarray(sorted(inst.graph_index for inst in bundle.instances
                                     if inst.split == "train"))),
    )
    return model, report.to_dict()


def _instance_label(bundle: DatasetBundle, inst: BenchmarkInstance) -> int:
    if bundle.task_kind == NODE_TASK:
        return int(inst.graph.node_labels[inst.target])
    return int(inst.graph.graph_label)


def eligible_instances(bundle: DatasetBundle, model: GcnModel) -> list[BenchmarkInstance]:
    """Test-split instances the model predicts correctly."""
    out = []
    for inst in bundle.instances:
        if inst.split != "test":
            continue
        y = _instance_label(bundle, inst)
        if predict(model, inst.graph, target=inst.target) == y:
            out.append(inst)
    return out


def run_attack_method(method: str, model: GcnModel, g: Graph, y: int,
                      clean, acfg: AttackConfig, ecfg: ExplainerConfig,
                      target: Optional[int]) -> AttackResult:
    e_s = clean.global_explanatory
    if method == "random":
        return random_attack(model, g, y, e_s, acfg, ecfg, target=target)
    if method == "kill-hot":
        return kill_hot_attack(model, g, y, e_s, clean.global_edges,
                               clean.result.mask, acfg, ecfg, target=target)
    if method == "loss":
        return loss_based_attack(model, g, y, e_s, acfg, ecfg, target=target)
    if method == "deduction":
        return deduction_based_attack(model, g, y, e_s, acfg, ecfg, target=target)
    raise HarnessError(f"unknown method {method!r}")


def run_instance(model: GcnModel, bundle: DatasetBundle, inst: BenchmarkInstance,
                 cfg: ExperimentConfig) -> dict:
    """Explain clean, run every configured method; returns the instance record."""
    y = _instance_label(bundle, inst)
    iseed = instance_seed(cfg.seed, inst.instance_id)
    ecfg = dataclasses.replace(cfg.explainer, seed=iseed)
    acfg = dataclasses.replace(cfg.attack, seed=iseed)
    clean = explain_instance(model, inst.graph, y, ecfg, target=inst.target)
    record = {
        "id": inst.instance_id,
        "seed": iseed,
        "target": inst.target,
        "label": y,
        "clean_explanation": [[int(u), int(v)] for u, v in clean.global_explanatory],
        "ground_truth_overlap": clean.global_explanatory.intersection_size(
            inst.ground_truth_edges),
        "methods": {},
        "_timings_ms": {},
    }
    for method in cfg.methods:
        t0 = time.perf_counter()
        res = run_attack_method(method, model, inst.graph, y, clean, acfg, ecfg,
                                inst.target)
        record["_timings_ms"][method] = (time.perf_counter() - t0) * 1e3
        record["methods"][method] = res.record()
    return record


# -- worker-pool plumbing; workers rebuild the dataset and model from specs --

_WORKER_STATE: dict = {}


def _init_worker(model_dict: dict, dataset_spec: dict, cfg_dict: dict):
    _WORKER_STATE["model"] = GcnModel.from_dict(model_dict)
    _WORKER_STATE["bundle"] = load_dataset(dataset_spec)
    _WORKER_STATE["cfg"] = ExperimentConfig.from_dict(cfg_dict)


def _run_instance_by_id(iid: str) -> dict:
    bundle = _WORKER_STATE["bundle"]
    inst = next(i for i in bundle.instances if i.instance_id == iid)
    return run_instance(_WORKER_STATE["model"], bundle, inst, _WORKER_STATE["cfg"])


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    bundle = load_dataset(cfg.dataset)
    model, train_report = prepare_model(bundle, cfg)
    eligible = eligible_instances(bundle, model)
    if not eligible:
        raise HarnessError("no correctly-predicted test instances to evaluate")
    eligible.sort(key=lambda i: i.instance_id)
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(eligible))
    chosen = [eligible[i] for i in order[:cfg.case_count]]

    if cfg.workers > 1:
        with ProcessPoolExecutor(
            max_workers=cfg.workers,
            initializer=_init_worker,
            initargs=(model.to_dict(), cfg.dataset, cfg.to_dict()),
        ) as pool:
            records = list(pool.map(_run_instance_by_id,
                                    [i.instance_id for i in chosen]))
    else:
        records = [run_instance(model, bundle, inst, cfg) for inst in chosen]
    records.sort(key=lambda r: r["id"])

    timings = {}
    rows = []
    for method in cfg.methods:
        overlaps = [r["methods"][method]["overlap_ratio"] for r in records]
        attempted = sum(r["methods"][method]["splits_attempted"] for r in records)
        failures = sum(r["methods"][method]["prediction_failures"] for r in records)
        timings[method] = float(np.mean([r["_timings_ms"][method] for r in records]))
        rows.append(ResultRow(
            explainer=cfg.explainer.constraint_kind,
            method=method,
            dataset=bundle.name,
            cases=len(records),
            mean_overlap=float(np.mean(overlaps)),
            failure_fraction=(failures / attempted) if attempted else 0.0,
        ))
    for r in records:
        r.pop("_timings_ms")
    return ExperimentResult(rows=rows, instance_records=records, timings_ms=timings,
                            config=cfg.to_dict(), train_report=train_report)


SWEEP_PARAMETERS = ("k", "N", "gamma", "beta", "xi")


def ablation_sweep(cfg: ExperimentConfig, parameter: str,
                   values: list) -> list[tuple[float, ExperimentResult]]:
    """Repeat the experiment varying one parameter, others at their defaults."""
    if parameter not in SWEEP_PARAMETERS:
        raise HarnessError(f"unknown sweep parameter {parameter!r}, "
                           f"expected one of {SWEEP_PARAMETERS}")
    out = []
    for v in values:
        c = dataclasses.replace(cfg)
        if parameter == "k":
            c = dataclasses.replace(cfg, explainer=dataclasses.replace(
                cfg.explainer, k=int(v)))
        elif parameter == "N":
            c = dataclasses.replace(cfg, attack=dataclasses.replace(
                cfg.attack, sample_count=int(v)))
        elif parameter == "gamma":
            c = dataclasses.replace(cfg, attack=dataclasses.replace(
                cfg.attack, gamma=float(v)))
        elif parameter == "beta":
            c = dataclasses.replace(cfg, attack=dataclasses.replace(
                cfg.attack, beta=float(v)))
        elif parameter == "xi":
            c = dataclasses.replace(cfg, attack=dataclasses.replace(
                cfg.attack, budget=int(v)))
        out.append((v, run_experiment(c)))
    return out


def export_dot(g: Graph, e_s: Optional[EdgeSet] = None,
               p: Optional[Perturbation] = None) -> str:
    """Deterministic DOT text: explanation bold, additions dashed, deletions gray.

    Deleted edges are not part of g; they are rendered as extra gray lines.
    """
    e_s = e_s or EdgeSet()
    additions = p.additions if p is not None else EdgeSet()
    deletions = p.deletions if p is not None else EdgeSet()
    lines = ["graph G {", "  node [shape=circle, fontsize=10];"]
    marked = {u for e in e_s for u in e}
    for v in range(g.node_count):
        style = ' [style=filled, fillcolor="lightblue"]' if v in marked else ""
        lines.append(f"  {v}{style};")
    for u, v in g.edges.sorted():
        attrs = []
        if (u, v) in e_s:
            attrs.append('color="red"')
            attrs.append("penwidth=2.5")
        if (u, v) in additions:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {u} -- {v}{suffix};")
    for u, v in deletions.sorted():
        lines.append(f'  {u} -- {v} [color="gray", style=dotted];')
    lines.append("}")
    return "\n".join(lines) + "\n"
