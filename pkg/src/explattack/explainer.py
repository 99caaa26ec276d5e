"""Perturbation-based edge-mask explainer.

Learns a per-edge mask by gradient descent on

    L(M) = cross_entropy(f(G_M), y) + C(M)

where C is one of three constraint functions, then reports the k
highest-mask edges as the explanation.  The mask is parameterized as
sigmoid(theta) so values stay in (0,1); optimization is deterministic
given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gcn import GcnModel, NODE_TASK, loss_and_mask_gradient
from .graphs import EdgeSet, Graph, Subgraph, k_hop_subgraph

CONSTRAINT_KINDS = ("gnnexplainer", "gsat", "surrogate")


class ExplainerError(ValueError):
    pass


@dataclass
class ExplainerConfig:
    constraint_kind: str = "gnnexplainer"
    gsat_r: float = 0.7
    learn_rate: float = 0.2
    epochs: int = 300
    k: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.constraint_kind not in CONSTRAINT_KINDS:
            raise ExplainerError(
                f"unknown constraint kind {self.constraint_kind!r}, "
                f"expected one of {CONSTRAINT_KINDS}")
        if not (0.0 < self.gsat_r < 1.0):
            raise ExplainerError("gsat_r must lie in (0,1)")
        if self.learn_rate <= 0 or self.epochs <= 0 or self.k <= 0:
            raise ExplainerError("learn_rate, epochs and k must be positive")


@dataclass
class ExplanationResult:
    """Learned mask (indexed by `edges`) and the top-k explanatory edges."""

    edges: EdgeSet
    mask: np.ndarray
    explanatory_edges: EdgeSet
    loss_curve: list[float]

    def mask_of(self, e) -> float:
        return float(self.mask[self.edges.index_of(e)])

    def to_dict(self) -> dict:
        return {
            "mask": {f"{u}-{v}": float(m) for (u, v), m in zip(self.edges, self.mask)},
            "explanatory_edges": [[int(u), int(v)] for u, v in self.explanatory_edges],
            "loss_curve": [float(x) for x in self.loss_curve],
        }


def _xlogx(x: np.ndarray) -> np.ndarray:
    # x*log(x) with the limit convention 0*log(0) = 0
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def constraint_gnnexplainer(mask: np.ndarray) -> float:
    """Sum of |m| plus the (negative) Bernoulli entropy of each entry."""
    m = np.asarray(mask, dtype=np.float64)
    return float(np.abs(m).sum() + _xlogx(m).sum() + _xlogx(1.0 - m).sum())


def constraint_gsat(mask: np.ndarray, gsat_r: float) -> float:
    """Per-edge Bernoulli KL against rate gsat_r (additive constant dropped)."""
    if not (0.0 < gsat_r < 1.0):
        raise ExplainerError("gsat_r must lie in (0,1)")
    m = np.asarray(mask, dtype=np.float64)
    return float(_xlogx(m).sum() - (m * np.log(gsat_r)).sum()
                 + _xlogx(1.0 - m).sum() - ((1.0 - m) * np.log(1.0 - gsat_r)).sum())


def constraint_surrogate(mask: np.ndarray) -> float:
    """Plain l1 mass of the mask."""
    return float(np.abs(np.asarray(mask, dtype=np.float64)).sum())


def constraint_value(kind: str, mask: np.ndarray, gsat_r: float = 0.7) -> float:
    if kind == "gnnexplainer":
        return constraint_gnnexplainer(mask)
    if kind == "gsat":
        return constraint_gsat(mask, gsat_r)
    if kind == "surrogate":
        return constraint_surrogate(mask)
    raise ExplainerError(f"unknown constraint kind {kind!r}")


def constraint_gradient(kind: str, mask: np.ndarray, gsat_r: float = 0.7) -> np.ndarray:
    """d C / d mask on the open interval (0,1); mask entries of 0/1 saturate."""
    m = np.asarray(mask, dtype=np.float64)
    interior = (m > 0.0) & (m < 1.0)
    grad = np.zeros_like(m)
    if kind == "gnnexplainer":
        grad[interior] = 1.0 + np.log(m[interior] / (1.0 - m[interior]))
    elif kind == "gsat":
        grad[interior] = (np.log(m[interior] / gsat_r)
                          - np.log((1.0 - m[interior]) / (1.0 - gsat_r)))
    elif kind == "surrogate":
        grad[:] = 1.0
    else:
        raise ExplainerError(f"unknown constraint kind {kind!r}")
    return grad


def explainer_loss(model: GcnModel, g: Graph, candidate_edges: EdgeSet,
                   mask: np.ndarray, y: int, cfg: ExplainerConfig,
                   target: Optional[int] = None) -> float:
    """Prediction loss on the masked graph plus the configured constraint."""
    ce, _ = loss_and_mask_gradient(model, g, candidate_edges, mask, y, target=target)
    return ce + constraint_value(cfg.constraint_kind, mask, cfg.gsat_r)


def explainer_loss_and_gradient(model: GcnModel, g: Graph, candidate_edges: EdgeSet,
                                mask: np.ndarray, y: int, cfg: ExplainerConfig,
                                target: Optional[int] = None
                                ) -> tuple[float, np.ndarray]:
    ce, grad = loss_and_mask_gradient(model, g, candidate_edges, mask, y, target=target)
    loss = ce + constraint_value(cfg.constraint_kind, mask, cfg.gsat_r)
    return loss, grad + constraint_gradient(cfg.constraint_kind, mask, cfg.gsat_r)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _learn_mask(model: GcnModel, g: Graph, y: int, cfg: ExplainerConfig,
                target: Optional[int]) -> tuple[np.ndarray, list[float]]:
    edges = g.edges
    rng = np.random.default_rng(cfg.seed)
    theta = rng.uniform(-0.01, 0.01, size=len(edges))
    curve: list[float] = []
    for epoch in range(cfg.epochs):
        m = _sigmoid(theta)
        loss, grad = explainer_loss_and_gradient(model, g, edges, m, y, cfg, target)
        if not np.isfinite(loss):
            raise ExplainerError(f"non-finite explainer loss at epoch {epoch}")
        curve.append(loss)
        theta -= cfg.learn_rate * grad * m * (1.0 - m)
    return _sigmoid(theta), curve


def learn_mask(model: GcnModel, g: Graph, y: int, cfg: ExplainerConfig,
               target: Optional[int] = None) -> np.ndarray:
    """Learned mask over g.edges (canonical order)."""
    mask, _ = _learn_mask(model, g, y, cfg, target)
    return mask


def top_k_edges(edges: EdgeSet, mask: np.ndarray, k: int) -> EdgeSet:
    """k highest-mask edges; ties resolve to the earlier canonical edge."""
    if k > len(edges):
        raise ExplainerError(f"k={k} exceeds candidate edge count {len(edges)}")
    order = sorted(range(len(edges)), key=lambda i: (-mask[i], edges.edges[i]))
    return EdgeSet.from_pairs(edges.edges[i] for i in order[:k])


def explain(model: GcnModel, g: Graph, y: int, cfg: ExplainerConfig,
            target: Optional[int] = None) -> ExplanationResult:
    """Learn the mask and extract the top-k explanatory edges.

    k is clamped to the edge count: perturbed computation subgraphs can
    shrink below the configured explanation size.
    """
    mask, curve = _learn_mask(model, g, y, cfg, target)
    return ExplanationResult(
        edges=g.edges,
        mask=mask,
        explanatory_edges=top_k_edges(g.edges, mask, min(cfg.k, len(g.edges))),
        loss_curve=curve,
    )


@dataclass
class InstanceExplanation:
    """Explanation of a dataset instance, mapped to global edge ids.

    For node tasks the explainer works on the target's computation
    subgraph (hop radius = model depth); `subgraph` carries the maps back
    to the full graph.  For graph tasks the subgraph is the graph itself.
    """

    result: ExplanationResult          # local (working-graph) coordinates
    global_edges: EdgeSet              # mask index base, global ids
    global_explanatory: EdgeSet        # top-k, global ids
    subgraph: Optional[Subgraph]       # None for graph tasks


def explain_instance(model: GcnModel, g: Graph, y: int, cfg: ExplainerConfig,
                     target: Optional[int] = None,
                     hops: Optional[int] = None) -> InstanceExplanation:
    if model.task_kind == NODE_TASK:
        if target is None:
            raise ExplainerError("node-task explanation needs a target node")
        sub = k_hop_subgraph(g, target, hops or model.layer_count)
        res = explain(model, sub.graph, y, cfg, target=sub.center_local)
        return InstanceExplanation(
            result=res,
            global_edges=sub.edges_to_global(res.edges),
            global_explanatory=sub.edges_to_global(res.explanatory_edges).sorted(),
            subgraph=sub,
        )
    res = explain(model, g, y, cfg, target=None)
    return InstanceExplanation(result=res, global_edges=res.edges,
                               global_explanatory=res.explanatory_edges, subgraph=None)
