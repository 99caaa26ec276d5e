"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..attack import AttackConfig
from ..explainer import ExplainerConfig
from ..gcn import TrainConfig
from ..graphs import EdgeSet, Graph


class GraphPayload(BaseModel):
    node_count: int
    edges: list[list[int]]
    node_features: list[list[float]]
    node_labels: Optional[list[int]] = None
    graph_label: Optional[int] = None

    @classmethod
    def from_graph(cls, g: Graph) -> "GraphPayload":
        return cls(
            node_count=g.node_count,
            edges=[[int(u), int(v)] for u, v in g.edges],
            node_features=[[float(x) for x in row] for row in g.node_features],
            node_labels=([int(c) for c in g.node_labels]
                         if g.node_labels is not None else None),
            graph_label=g.graph_label,
        )

    def to_graph(self) -> Graph:
        return Graph(
            node_count=self.node_count,
            edges=EdgeSet.from_pairs(self.edges),
            node_features=np.asarray(self.node_features, dtype=np.float64),
            node_labels=(np.asarray(self.node_labels)
                         if self.node_labels is not None else None),
            graph_label=self.graph_label,
        )


class ExplainerSettings(BaseModel):
    constraint_kind: str = "gnnexplainer"
    gsat_r: float = 0.7
    learn_rate: float = 0.2
    epochs: int = 300
    k: int = 6
    seed: int = 0

    def to_config(self) -> ExplainerConfig:
        return ExplainerConfig(**self.model_dump())


class AttackSettings(BaseModel):
    budget: int = 2
    gamma: float = 0.7
    beta: float = 0.7
    sample_count: int = 4
    tau: float = 0.000157
    d_min: int = 1
    variant: str = "log-alpha"
    score_epochs: Optional[int] = None
    score_learn_rate: Optional[float] = 0.05
    seed: int = 0
    random_retries: int = 50
    subgraph_hops: Optional[int] = None

    def to_config(self) -> AttackConfig:
        return AttackConfig(**self.model_dump())


class TrainSettings(BaseModel):
    layer_count: int = 3
    hidden_dim: int = 20
    learn_rate: float = 0.01
    epochs: int = 1000
    train_fraction: float = 0.8
    seed: int = 0
    optimizer: str = "adam"

    def to_config(self) -> TrainConfig:
        return TrainConfig(**self.model_dump())


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateRequest(BaseModel):
    kind: str
    seed: int = 0
    params: dict[str, Any] = Field(default_factory=dict)


class GenerateResponse(BaseModel):
    manifest: dict
    graph_texts: list[str]           # edge-list format, aligned with manifest order


class TrainRequest(BaseModel):
    dataset: dict                    # generator spec or {"manifest": path}
    train: TrainSettings = Field(default_factory=TrainSettings)


class TrainResponse(BaseModel):
    checkpoint: dict
    report: dict


class ExplainRequest(BaseModel):
    checkpoint: dict
    graph: GraphPayload
    label: int
    target: Optional[int] = None
    config: ExplainerSettings = Field(default_factory=ExplainerSettings)


class ExplainResponse(BaseModel):
    mask: dict[str, float]           # "u-v" -> value, global edge ids
    explanatory_edges: list[list[int]]
    loss_curve: list[float]


class AttackRequest(BaseModel):
    checkpoint: dict
    graph: GraphPayload
    label: int
    target: Optional[int] = None
    method: str = "deduction"
    attack: AttackSettings = Field(default_factory=AttackSettings)
    explainer: ExplainerSettings = Field(default_factory=ExplainerSettings)


class AttackResponse(BaseModel):
    method: str
    clean_explanation: list[list[int]]
    record: dict


class EvaluateRequest(BaseModel):
    experiment: dict                 # harness.ExperimentConfig.to_dict shape


class EvaluateResponse(BaseModel):
    results_csv: str
    timings_csv: str
    results_json: str


class SweepRequest(BaseModel):
    experiment: dict
    parameter: str
    values: list[float]


class SweepItem(BaseModel):
    value: float
    results_csv: str
    results_json: str


class SweepResponse(BaseModel):
    items: list[SweepItem]


class ExportDotRequest(BaseModel):
    graph: GraphPayload
    explanatory_edges: list[list[int]] = Field(default_factory=list)
    added_edges: list[list[int]] = Field(default_factory=list)
    deleted_edges: list[list[int]] = Field(default_factory=list)


class ExportDotResponse(BaseModel):
    dot: str
