"""Minimal edge-weighted graph convolutional classifier.

Forward rule: h' = relu(A_hat @ h @ W) for hidden layers, linear final
layer; node tasks propagate in every layer, graph tasks mean-pool node
representations before the final (dense) classification layer.

A_hat is built from the weighted symmetric adjacency plus unit self-loops
and symmetrically normalized by weighted degree + 1, which keeps every
degree >= 1 and the whole map differentiable in the edge weights.  The
backward pass computes exact gradients of any scalar loss with respect to
per-edge weights, including weights of candidate pairs that are not graph
edges (those act as addable edges whose weight is the mask value).

All arithmetic is float64 and the code path never branches on whether the
weights were supplied or defaulted, so an all-ones weight vector is
bitwise identical to omitting it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .graphs import EdgeSet, Graph

NODE_TASK = "node-classification"
GRAPH_TASK = "graph-classification"


class GcnError(ValueError):
    pass


class GcnTrainingError(RuntimeError):
    pass


@dataclass
class GcnModel:
    """Layer weights plus the architecture descriptor."""

    weights: list[np.ndarray]
    task_kind: str
    class_count: int

    def __post_init__(self):
        if self.task_kind not in (NODE_TASK, GRAPH_TASK):
            raise GcnError(f"unknown task_kind {self.task_kind!r}")
        if not self.weights:
            raise GcnError("model needs at least one layer")
        self.weights = [np.asarray(W, dtype=np.float64) for W in self.weights]
        for a, b in zip(self.weights, self.weights[1:]):
            if a.shape[1] != b.shape[0]:
                raise GcnError(f"layer dims do not chain: {a.shape} -> {b.shape}")
        if self.weights[-1].shape[1] != self.class_count:
            raise GcnError("final layer width must equal class_count")

    @property
    def layer_count(self) -> int:
        return len(self.weights)

    @property
    def feature_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.weights[0].shape[1] if self.layer_count > 1 else self.class_count

    def to_dict(self) -> dict:
        return {
            "task_kind": self.task_kind,
            "class_count": self.class_count,
            "layer_dims": [[int(W.shape[0]), int(W.shape[1])] for W in self.weights],
            "weights": [W.reshape(-1).tolist() for W in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GcnModel":
        weights = [
            np.asarray(flat, dtype=np.float64).reshape(rows, cols)
            for (rows, cols), flat in zip(d["layer_dims"], d["weights"])
        ]
        return cls(weights=weights, task_kind=d["task_kind"],
                   class_count=int(d["class_count"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "GcnModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Weighted normalized adjacency
# ---------------------------------------------------------------------------


@dataclass
class _AdjCache:
    n: int
    pair_u: np.ndarray          # one entry per active pair (graph edge or candidate)
    pair_v: np.ndarray
    pair_w: np.ndarray
    cand_pos: np.ndarray        # candidate index -> position in pair arrays
    deg: np.ndarray             # weighted degree + 1 (self-loop)
    dinv: np.ndarray            # deg ** -0.5
    a_hat: sp.csr_matrix


def _build_adjacency(g: Graph, candidate_edges: Optional[EdgeSet],
                     weights: Optional[np.ndarray]) -> _AdjCache:
    """Active pairs = graph edges (weight 1) overridden/extended by candidates."""
    n = g.node_count
    eu, ev = g.edges.arrays()
    pair_index = {e: i for i, e in enumerate(g.edges)}
    pu = list(eu)
    pv = list(ev)
    pw = [1.0] * len(pu)
    if candidate_edges is None:
        cand_pos = np.zeros(0, dtype=np.int64)
        if weights is not None:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != (len(pu),):
                raise GcnError(f"expected {len(pu)} edge weights, got {w.shape}")
            pw = list(w)
    else:
        if weights is None:
            raise GcnError("candidate_edges given without weights")
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(candidate_edges),):
            raise GcnError(
                f"expected {len(candidate_edges)} candidate weights, got {w.shape}")
        pos = []
        for i, e in enumerate(candidate_edges):
            if e in pair_index:
                p = pair_index[e]
            else:
                p = len(pu)
                pair_index[e] = p
                pu.append(e[0])
                pv.append(e[1])
                pw.append(0.0)
            pw[p] = float(w[i])
            pos.append(p)
        cand_pos = np.asarray(pos, dtype=np.int64)
    pair_u = np.asarray(pu, dtype=np.int64)
    pair_v = np.asarray(pv, dtype=np.int64)
    pair_w = np.asarray(pw, dtype=np.float64)
    diag = np.arange(n, dtype=np.int64)
    rows = np.concatenate([pair_u, pair_v, diag])
    cols = np.concatenate([pair_v, pair_u, diag])
    vals = np.concatenate([pair_w, pair_w, np.ones(n)])
    deg = np.ones(n)
    np.add.at(deg, pair_u, pair_w)
    np.add.at(deg, pair_v, pair_w)
    dinv = deg ** -0.5
    a_hat = sp.csr_matrix((vals * dinv[rows] * dinv[cols], (rows, cols)), shape=(n, n))
    return _AdjCache(n=n, pair_u=pair_u, pair_v=pair_v, pair_w=pair_w,
                     cand_pos=cand_pos, deg=deg, dinv=dinv, a_hat=a_hat)


@dataclass
class MaskedForwardTrace:
    """Per-layer activations and adjacency cache for the backward pass."""

    adj: _AdjCache
    hs: list[np.ndarray]        # h_0 .. h_{L-1} (inputs to each layer)
    zs: list[np.ndarray]        # pre-activations of conv layers
    ps: list[np.ndarray]        # h @ W products fed through A_hat
    pooled: Optional[np.ndarray]
    scores: np.ndarray


def _forward(model: GcnModel, g: Graph, candidate_edges: Optional[EdgeSet],
             weights: Optional[np.ndarray]) -> MaskedForwardTrace:
    if g.feature_dim != model.feature_dim:
        raise GcnError(
            f"feature dim {g.feature_dim} does not match model input {model.feature_dim}")
    adj = _build_adjacency(g, candidate_edges, weights)
    conv_layers = model.layer_count if model.task_kind == NODE_TASK else model.layer_count - 1
    h = np.asarray(g.node_features, dtype=np.float64)
    hs, zs, ps = [h], [], []
    for li in range(conv_layers):
        p = h @ model.weights[li]
        z = adj.a_hat @ p
        ps.append(p)
        zs.append(z)
        h = np.maximum(z, 0.0) if li < model.layer_count - 1 else z
        hs.append(h)
    pooled = None
    if model.task_kind == GRAPH_TASK:
        pooled = h.mean(axis=0)
        scores = pooled @ model.weights[-1]
    else:
        scores = h
    return MaskedForwardTrace(adj=adj, hs=hs, zs=zs, ps=ps, pooled=pooled, scores=scores)


def gcn_forward(model: GcnModel, g: Graph,
                edge_weights: Optional[np.ndarray] = None,
                candidate_edges: Optional[EdgeSet] = None) -> np.ndarray:
    """Raw (pre-softmax) class scores; (n, C) for node tasks, (C,) for graph tasks."""
    return _forward(model, g, candidate_edges, edge_weights).scores


def predict(model: GcnModel, g: Graph, target: Optional[int] = None) -> int:
    """Argmax class; ties break to the lowest class index."""
    scores = gcn_forward(model, g)
    if model.task_kind == NODE_TASK:
        if target is None:
            raise GcnError("node-classification prediction needs a target node")
        scores = scores[target]
    return int(np.argmax(scores))


def softmax_cross_entropy(scores: np.ndarray, y: int) -> tuple[float, np.ndarray]:
    """Stable CE of a single score vector; returns (loss, d loss / d scores)."""
    z = scores - scores.max()
    e = np.exp(z)
    total = e.sum()
    p = e / total
    loss = float(np.log(total) - z[y])
    grad = p.copy()
    grad[y] -= 1.0
    return loss, grad


def _mask_gradient_from_trace(model: GcnModel, trace: MaskedForwardTrace,
                              dscores: np.ndarray) -> np.ndarray:
    """Backprop dscores to per-candidate-weight gradients (exact, float64)."""
    adj = trace.adj
    conv_layers = len(trace.zs)
    dzs: list[np.ndarray] = [None] * conv_layers
    if model.task_kind == GRAPH_TASK:
        dpooled = dscores @ model.weights[-1].T
        dh = np.repeat(dpooled[None, :] / adj.n, adj.n, axis=0)
    else:
        dh = dscores
    for li in range(conv_layers - 1, -1, -1):
        dz = dh if li == model.layer_count - 1 else dh * (trace.zs[li] > 0)
        dzs[li] = dz
        dp = adj.a_hat @ dz
        dh = dp @ model.weights[li].T
    # S_ij = sum_l dz_l[i] . p_l[j], evaluated only on the sparsity pattern of
    # A_tilde (both orientations of each pair, plus the diagonal).
    m = adj.pair_u.size
    n = adj.n
    rows = np.concatenate([adj.pair_u, adj.pair_v, np.arange(n)])
    cols = np.concatenate([adj.pair_v, adj.pair_u, np.arange(n)])
    s_vals = np.zeros(rows.size)
    for dz, p in zip(dzs, trace.ps):
        s_vals += np.einsum("ij,ij->i", dz[rows], p[cols])
    a_tilde_vals = np.concatenate([adj.pair_w, adj.pair_w, np.ones(n)])
    a_hat_vals = a_tilde_vals * adj.dinv[rows] * adj.dinv[cols]
    t_vals = s_vals * a_hat_vals
    row_t = np.bincount(rows, weights=t_vals, minlength=n)
    col_t = np.bincount(cols, weights=t_vals, minlength=n)
    d_deg = -(row_t + col_t) / (2.0 * adj.deg)
    direct = (s_vals[:m] + s_vals[m:2 * m]) * adj.dinv[adj.pair_u] * adj.dinv[adj.pair_v]
    d_pairs = direct + d_deg[adj.pair_u] + d_deg[adj.pair_v]
    return d_pairs[adj.cand_pos] if adj.cand_pos.size else d_pairs[:0]


def loss_and_mask_gradient(
    model: GcnModel,
    g: Graph,
    candidate_edges: EdgeSet,
    mask_values: np.ndarray,
    y: int,
    loss_fn: Callable[[np.ndarray, int], tuple[float, np.ndarray]] = softmax_cross_entropy,
    target: Optional[int] = None,
) -> tuple[float, np.ndarray]:
    """Loss and exact d(loss)/d(mask) over the candidate edges.

    Candidate pairs that are not graph edges are treated as edges whose
    weight is the mask value, so addition masks differentiate cleanly.
    """
    mask_values = np.asarray(mask_values, dtype=np.float64)
    trace = _forward(model, g, candidate_edges, mask_values)
    if model.task_kind == NODE_TASK:
        if target is None:
            raise GcnError("node-classification loss needs a target node")
        loss, dvec = loss_fn(trace.scores[target], y)
        dscores = np.zeros_like(trace.scores)
        dscores[target] = dvec
    else:
        loss, dscores = loss_fn(trace.scores, y)
    grad = _mask_gradient_from_trace(model, trace, dscores)
    if not np.all(np.isfinite(grad)):
        bad = int(np.flatnonzero(~np.isfinite(grad))[0])
        raise GcnError(f"non-finite mask gradient at candidate edge index {bad}")
    return loss, grad


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    layer_count: int = 3
    hidden_dim: int = 20
    learn_rate: float = 0.01
    epochs: int = 1000
    train_fraction: float = 0.8
    seed: int = 0
    optimizer: str = "adam"   # "adam" | "gd"


@dataclass
class TrainReport:
    train_accuracy: float
    test_accuracy: float
    final_loss: float
    epochs: int
    train_size: int
    test_size: int

    def to_dict(self) -> dict:
        return {
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "final_loss": self.final_loss,
            "epochs": self.epochs,
            "train_size": self.train_size,
            "test_size": self.test_size,
        }


def _init_weights(dims: list[int], rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.normal(0.0, np.sqrt(2.0 / dims[i]), size=(dims[i], dims[i + 1]))
            for i in range(len(dims) - 1)]


class _Adam:
    def __init__(self, params: list[np.ndarray], lr: float):
        self.lr = lr
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2, eps = 0.9, 0.999, 1e-8
        for p, gr, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * gr
            v *= b2
            v += (1 - b2) * gr * gr
            mh = m / (1 - b1 ** self.t)
            vh = v / (1 - b2 ** self.t)
            p -= self.lr * mh / (np.sqrt(vh) + eps)


def _node_task_pass(model_w, a_hat, x, labels, idx):
    """Forward + weight grads for a node task; returns (loss, grads, scores)."""
    layer_count = len(model_w)
    hs, zs = [x], []
    h = x
    for li, W in enumerate(model_w):
        z = a_hat @ (h @ W)
        zs.append(z)
        h = np.maximum(z, 0.0) if li < layer_count - 1 else z
        hs.append(h)
    scores = h
    sub = scores[idx]
    sub = sub - sub.max(axis=1, keepdims=True)
    e = np.exp(sub)
    p = e / e.sum(axis=1, keepdims=True)
    rows = np.arange(idx.size)
    loss = float(-np.log(p[rows, labels[idx]] + 1e-300).mean())
    dscores = np.zeros_like(scores)
    dp = p.copy()
    dp[rows, labels[idx]] -= 1.0
    dscores[idx] = dp / idx.size
    grads = [None] * layer_count
    dh = dscores
    for li in range(layer_count - 1, -1, -1):
        dz = dh if li == layer_count - 1 else dh * (zs[li] > 0)
        dpz = a_hat @ dz
        grads[li] = hs[li].T @ dpz
        dh = dpz @ model_w[li].T
    return loss, grads, scores


def train_gcn(dataset: list[Graph], cfg: TrainConfig,
              train_idx: Optional[np.ndarray] = None) -> tuple[GcnModel, TrainReport]:
    """Full-batch training on softmax cross-entropy with an 80/20 split.

    Node tasks expect a single labeled graph (split over nodes); graph
    tasks expect a list of graph-labeled instances (split over graphs).
    `train_idx` overrides the internal random split with explicit training
    node/graph indices.
    """
    if not dataset:
        raise GcnError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    node_task = dataset[0].node_labels is not None

    def split(count: int) -> tuple[np.ndarray, np.ndarray]:
        if train_idx is not None:
            tr = np.asarray(train_idx, dtype=np.int64)
            mask = np.ones(count, dtype=bool)
            mask[tr] = False
            return tr, np.flatnonzero(mask)
        perm = rng.permutation(count)
        ntr = int(round(cfg.train_fraction * count))
        return perm[:ntr], perm[ntr:]

    if node_task:
        if len(dataset) != 1:
            raise GcnError("node-classification training expects exactly one graph")
        g = dataset[0]
        labels = g.node_labels
        class_count = int(labels.max()) + 1
        dims = [g.feature_dim] + [cfg.hidden_dim] * (cfg.layer_count - 1) + [class_count]
        weights = _init_weights(dims, rng)
        tr, te = split(g.node_count)
        adj = _build_adjacency(g, None, None)
        x = np.asarray(g.node_features, dtype=np.float64)
        opt = _Adam(weights, cfg.learn_rate) if cfg.optimizer == "adam" else None
        loss = float("nan")
        scores = None
        for ep in range(cfg.epochs):
            loss, grads, scores = _node_task_pass(weights, adj.a_hat, x, labels, tr)
            if not np.isfinite(loss):
                raise GcnTrainingError(f"non-finite training loss at epoch {ep}")
            if opt is not None:
                opt.step(weights, grads)
            else:
                for W, gr in zip(weights, grads):
                    W -= cfg.learn_rate * gr
        model = GcnModel(weights=weights, task_kind=NODE_TASK, class_count=class_count)
        pred = scores.argmax(axis=1)
        report = TrainReport(
            train_accuracy=float((pred[tr] == labels[tr]).mean()),
            test_accuracy=float((pred[te] == labels[te]).mean()) if te.size else float("nan"),
            final_loss=loss,
            epochs=cfg.epochs,
            train_size=int(tr.size),
            test_size=int(te.size),
        )
        return model, report

    labels = np.asarray([g.graph_label for g in dataset], dtype=np.int64)
    if any(g.graph_label is None for g in dataset):
        raise GcnError("graph-classification training needs graph labels")
    class_count = int(labels.max()) + 1
    fdim = dataset[0].feature_dim
    if any(g.feature_dim != fdim for g in dataset):
        raise GcnError("inconsistent feature dims across dataset")
    dims = [fdim] + [cfg.hidden_dim] * (cfg.layer_count - 1) + [class_count]
    weights = _init_weights(dims, rng)
    tr, te = split(len(dataset))
    adjs = [_build_adjacency(g, None, None) for g in dataset]
    xs = [np.asarray(g.node_features, dtype=np.float64) for g in dataset]
    conv_layers = cfg.layer_count - 1
    opt = _Adam(weights, cfg.learn_rate) if cfg.optimizer == "adam" else None
    loss = float("nan")
    for ep in range(cfg.epochs):
        grads = [np.zeros_like(W) for W in weights]
        loss = 0.0
        for gi in tr:
            a_hat, x = adjs[gi].a_hat, xs[gi]
            hs, zs = [x], []
            h = x
            for li in range(conv_layers):
                z = a_hat @ (h @ weights[li])
                zs.append(z)
                h = np.maximum(z, 0.0)
                hs.append(h)
            pooled = h.mean(axis=0)
            sc = pooled @ weights[-1]
            li_loss, dsc = softmax_cross_entropy(sc, int(labels[gi]))
            loss += li_loss / tr.size
            dsc = dsc / tr.size
            grads[-1] += np.outer(pooled, dsc)
            dh = np.repeat((dsc @ weights[-1].T)[None, :] / x.shape[0], x.shape[0], axis=0)
            for li in range(conv_layers - 1, -1, -1):
                dz = dh * (zs[li] > 0)
                dpz = a_hat @ dz
                grads[li] += hs[li].T @ dpz
                dh = dpz @ weights[li].T
        if not np.isfinite(loss):
            raise GcnTrainingError(f"non-finite training loss at epoch {ep}")
        if opt is not None:
            opt.step(weights, grads)
        else:
            for W, gr in zip(weights, grads):
                W -= cfg.learn_rate * gr
    model = GcnModel(weights=weights, task_kind=GRAPH_TASK, class_count=class_count)

    def acc(idx):
        if idx.size == 0:
            return float("nan")
        hits = sum(predict(model, dataset[gi]) == int(labels[gi]) for gi in idx)
        return hits / idx.size

    report = TrainReport(
        train_accuracy=float(acc(tr)),
        test_accuracy=float(acc(te)),
        final_loss=loss,
        epochs=cfg.epochs,
        train_size=int(tr.size),
        test_size=int(te.size),
    )
    return model, report
