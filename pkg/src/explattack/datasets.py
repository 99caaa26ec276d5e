"""Seeded synthetic benchmarks with ground-truth motifs, plus a file loader.

Node-task datasets are a single labeled graph whose explanation instances
are the motif nodes; graph-task datasets are collections of small labeled
graphs.  Generators are pure functions of (seed, parameters).

Node features default to a capped one-hot encoding of the degree: it is
structural (carries no label information beyond what the edges already
encode) yet keeps layer activations full-rank, which constant features do
not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import networkx as nx
import numpy as np

from .gcn import GRAPH_TASK, NODE_TASK
from .graphs import EdgeSet, Graph, parse_edge_list, write_edge_list

FEATURE_MODES = ("degree", "ones")
DATASET_KINDS = ("ba-house", "tree-cycle", "ba-community", "motif-graphs")


class DatasetError(ValueError):
    pass


@dataclass
class BenchmarkInstance:
    graph: Graph
    target: Optional[int]            # node id for node tasks, None for graph tasks
    ground_truth_edges: EdgeSet
    split: str                       # "train" | "test"
    instance_id: str
    graph_index: int = 0


@dataclass
class DatasetBundle:
    name: str
    task_kind: str
    class_count: int
    graphs: list[Graph]
    instances: list[BenchmarkInstance]
    default_k: int
    train_nodes: Optional[np.ndarray] = None   # node-task training indices
    params: dict = field(default_factory=dict)

    @property
    def graph(self) -> Graph:
        if self.task_kind != NODE_TASK:
            raise DatasetError("single-graph access is for node tasks")
        return self.graphs[0]

    def test_instances(self) -> list[BenchmarkInstance]:
        return [inst for inst in self.instances if inst.split == "test"]


def degree_onehot_features(edges: EdgeSet, node_count: int, dim: int = 10) -> np.ndarray:
    deg = np.zeros(node_count, dtype=np.int64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    feats = np.zeros((node_count, dim))
    feats[np.arange(node_count), np.minimum(deg, dim - 1)] = 1.0
    return feats


def _features(mode: str, edges: EdgeSet, node_count: int, dim: int) -> np.ndarray:
    if mode == "degree":
        return degree_onehot_features(edges, node_count, dim)
    if mode == "ones":
        return np.ones((node_count, dim))
    raise DatasetError(f"unknown feature mode {mode!r}")


def _house_edges(b: int) -> list[tuple[int, int]]:
    b1, b2, m1, m2, top = b, b + 1, b + 2, b + 3, b + 4
    return [(b1, b2), (b1, m1), (b2, m2), (m1, m2), (m1, top), (m2, top)]

_HOUSE_LABELS = [3, 3, 2, 2, 1]     # bottom, bottom, middle, middle, top


def _cycle_edges(b: int, size: int = 6) -> list[tuple[int, int]]:
    return [(b + i, b + (i + 1) % size) for i in range(size)]


def _splits(rng: np.random.Generator, count: int, train_fraction: float = 0.8):
    perm = rng.permutation(count)
    ntr = int(round(train_fraction * count))
    is_train = np.zeros(count, dtype=bool)
    is_train[perm[:ntr]] = True
    return is_train


def gen_ba_house(seed: int, base_nodes: int = 300, motif_count: int = 80,
                 attach_m: int = 5, feature_mode: str = "degree",
                 feature_dim: int = 10) -> DatasetBundle:
    """Barabasi-Albert base with 5-node house motifs; 4 structural classes."""
    if base_nodes < attach_m or attach_m < 1:
        raise DatasetError("need base_nodes >= attach_m >= 1")
    rng = np.random.default_rng(seed)
    base = nx.barabasi_albert_graph(base_nodes, attach_m, seed=int(rng.integers(2**31)))
    pairs = list(base.edges())
    labels = [0] * base_nodes
    n = base_nodes
    motif_edge_lists = []
    for _ in range(motif_count):
        attach = int(rng.integers(0, base_nodes))
        house = _house_edges(n)
        pairs += house + [(attach, n)]
        labels += _HOUSE_LABELS
        motif_edge_lists.append(EdgeSet.from_pairs(house))
        n += 5
    edges = EdgeSet.from_pairs(pairs)
    g = Graph(node_count=n, edges=edges,
              node_features=_features(feature_mode, edges, n, feature_dim),
              node_labels=np.asarray(labels))
    is_train = _splits(rng, n)
    instances = []
    for mi, motif_edges in enumerate(motif_edge_lists):
        for off in range(5):
            node = base_nodes + 5 * mi + off
            instances.append(BenchmarkInstance(
                graph=g, target=node, ground_truth_edges=motif_edges,
                split="train" if is_train[node] else "test",
                instance_id=f"ba-house/n{node}"))
    return DatasetBundle(
        name="ba-house", task_kind=NODE_TASK, class_count=4, graphs=[g],
        instances=instances, default_k=6,
        train_nodes=np.flatnonzero(is_train),
        params={"seed": seed, "base_nodes": base_nodes, "motif_count": motif_count,
                "attach_m": attach_m, "feature_mode": feature_mode,
                "feature_dim": feature_dim})


def gen_tree_cycle(seed: int, tree_depth: int = 12, motif_count: int = 160,
                   feature_mode: str = "degree",
                   feature_dim: int = 10) -> DatasetBundle:
    """Balanced binary tree base with 6-node cycle motifs; binary labels."""
    if tree_depth < 2:
        raise DatasetError("tree_depth must be >= 2")
    rng = np.random.default_rng(seed)
    base = nx.balanced_tree(2, tree_depth)
    base_nodes = base.number_of_nodes()
    pairs = list(base.edges())
    labels = [0] * base_nodes
    n = base_nodes
    motif_edge_lists = []
    for _ in range(motif_count):
        attach = int(rng.integers(0, base_nodes))
        cyc = _cycle_edges(n)
        pairs += cyc + [(attach, n)]
        labels += [1] * 6
        motif_edge_lists.append(EdgeSet.from_pairs(cyc))
        n += 6
    edges = EdgeSet.from_pairs(pairs)
    g = Graph(node_count=n, edges=edges,
              node_features=_features(feature_mode, edges, n, feature_dim),
              node_labels=np.asarray(labels))
    is_train = _splits(rng, n)
    instances = []
    for mi, motif_edges in enumerate(motif_edge_lists):
        for off in range(6):
            node = base_nodes + 6 * mi + off
            instances.append(BenchmarkInstance(
                graph=g, target=node, ground_truth_edges=motif_edges,
                split="train" if is_train[node] else "test",
                instance_id=f"tree-cycle/n{node}"))
    return DatasetBundle(
        name="tree-cycle", task_kind=NODE_TASK, class_count=2, graphs=[g],
        instances=instances, default_k=6,
        train_nodes=np.flatnonzero(is_train),
        params={"seed": seed, "tree_depth": tree_depth, "motif_count": motif_count,
                "feature_mode": feature_mode, "feature_dim": feature_dim})


def gen_ba_community(seed: int, base_nodes: int = 150, motif_count: int = 40,
                     attach_m: int = 4, inter_edge_fraction: float = 0.04,
                     feature_dim: int = 10,
                     feature_noise: float = 0.3) -> DatasetBundle:
    """Two house-motif communities joined by random edges; 8 classes.

    Class = community * 4 + structural role.  Features carry a noisy
    community indicator in the first two dims plus the degree encoding.
    """
    rng = np.random.default_rng(seed)
    pairs: list[tuple[int, int]] = []
    labels: list[int] = []
    motif_edge_lists: list[EdgeSet] = []
    motif_nodes: list[int] = []
    community: list[int] = []
    n = 0
    for com in range(2):
        offset = n
        base = nx.barabasi_albert_graph(base_nodes, attach_m,
                                        seed=int(rng.integers(2**31)))
        pairs += [(u + offset, v + offset) for u, v in base.edges()]
        labels += [com * 4] * base_nodes
        community += [com] * base_nodes
        n += base_nodes
        for _ in range(motif_count):
            attach = offset + int(rng.integers(0, base_nodes))
            house = _house_edges(n)
            pairs += house + [(attach, n)]
            labels += [com * 4 + r for r in _HOUSE_LABELS]
            community += [com] * 5
            motif_edge_lists.append(EdgeSet.from_pairs(house))
            motif_nodes.extend(range(n, n + 5))
            n += 5
    size = base_nodes + 5 * motif_count
    inter_count = max(1, int(round(inter_edge_fraction * len(pairs))))
    existing = {tuple(sorted(p)) for p in pairs}
    added = 0
    while added < inter_count:
        u = int(rng.integers(0, size))
        v = size + int(rng.integers(0, size))
        if (u, v) not in existing:
            existing.add((u, v))
            pairs.append((u, v))
            added += 1
    edges = EdgeSet.from_pairs(pairs)
    feats = degree_onehot_features(edges, n, feature_dim)
    com_arr = np.asarray(community)
    feats[:, 0] = (com_arr == 0) + rng.normal(0.0, feature_noise, n)
    feats[:, 1] = (com_arr == 1) + rng.normal(0.0, feature_noise, n)
    g = Graph(node_count=n, edges=edges, node_features=feats,
              node_labels=np.asarray(labels))
    is_train = _splits(rng, n)
    instances = []
    for mi, motif_edges in enumerate(motif_edge_lists):
        for off in range(5):
            node = motif_nodes[mi * 5 + off]
            instances.append(BenchmarkInstance(
                graph=g, target=node, ground_truth_edges=motif_edges,
                split="train" if is_train[node] else "test",
                instance_id=f"ba-community/n{node}"))
    return DatasetBundle(
        name="ba-community", task_kind=NODE_TASK, class_count=8, graphs=[g],
        instances=instances, default_k=28,
        train_nodes=np.flatnonzero(is_train),
        params={"seed": seed, "base_nodes": base_nodes, "motif_count": motif_count,
                "attach_m": attach_m, "inter_edge_fraction": inter_edge_fraction,
                "feature_dim": feature_dim, "feature_noise": feature_noise})


def gen_motif_graph_dataset(seed: int, count: int = 40, base_nodes: int = 12,
                            attach_m: int = 2, feature_mode: str = "degree",
                            feature_dim: int = 10) -> DatasetBundle:
    """Binary graph classification: cycle motif (class 0) vs house motif (class 1)."""
    if count < 2:
        raise DatasetError("count must be >= 2")
    rng = np.random.default_rng(seed)
    graphs: list[Graph] = []
    instances: list[BenchmarkInstance] = []
    label_order = np.tile([0, 1], (count + 1) // 2)[:count]
    rng.shuffle(label_order)
    is_train = _splits(rng, count)
    for gi in range(count):
        label = int(label_order[gi])
        base = nx.barabasi_albert_graph(base_nodes, attach_m,
                                        seed=int(rng.integers(2**31)))
        pairs = list(base.edges())
        attach = int(rng.integers(0, base_nodes))
        if label == 1:
            motif = _house_edges(base_nodes)
            motif_size = 5
        else:
            motif = _cycle_edges(base_nodes)
            motif_size = 6
        pairs += motif + [(attach, base_nodes)]
        n = base_nodes + motif_size
        edges = EdgeSet.from_pairs(pairs)
        g = Graph(node_count=n, edges=edges,
                  node_features=_features(feature_mode, edges, n, feature_dim),
                  graph_label=label)
        graphs.append(g)
        instances.append(BenchmarkInstance(
            graph=g, target=None, ground_truth_edges=EdgeSet.from_pairs(motif),
            split="train" if is_train[gi] else "test",
            instance_id=f"motif-graphs/g{gi}", graph_index=gi))
    return DatasetBundle(
        name="motif-graphs", task_kind=GRAPH_TASK, class_count=2, graphs=graphs,
        instances=instances, default_k=6,
        params={"seed": seed, "count": count, "base_nodes": base_nodes,
                "attach_m": attach_m, "feature_mode": feature_mode,
                "feature_dim": feature_dim})


GENERATORS = {
    "ba-house": gen_ba_house,
    "tree-cycle": gen_tree_cycle,
    "ba-community": gen_ba_community,
    "motif-graphs": gen_motif_graph_dataset,
}


def generate(kind: str, seed: int, **params) -> DatasetBundle:
    if kind not in GENERATORS:
        raise DatasetError(f"unknown dataset kind {kind!r}, expected one of "
                           f"{sorted(GENERATORS)}")
    return GENERATORS[kind](seed=seed, **params)


# ---------------------------------------------------------------------------
# Persistence: per-graph edge-list files plus a manifest
# ---------------------------------------------------------------------------


def dataset_payload(bundle: DatasetBundle) -> tuple[dict, list[str]]:
    """Manifest dict plus edge-list texts, aligned with manifest graph_files."""
    graph_files = [f"graph{gi:04d}.txt" for gi in range(len(bundle.graphs))]
    texts = [write_edge_list(g, bundle.class_count) for g in bundle.graphs]
    manifest = {
        "name": bundle.name,
        "task_kind": bundle.task_kind,
        "class_count": bundle.class_count,
        "default_k": bundle.default_k,
        "params": bundle.params,
        "graph_files": graph_files,
        "train_nodes": (bundle.train_nodes.tolist()
                        if bundle.train_nodes is not None else None),
        "instances": [
            {
                "id": inst.instance_id,
                "graph_index": inst.graph_index,
                "target": inst.target,
                "ground_truth_edges": [[int(u), int(v)]
                                       for u, v in inst.ground_truth_edges],
                "split": inst.split,
            }
            for inst in bundle.instances
        ],
    }
    return manifest, texts


def save_dataset(bundle: DatasetBundle, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest, texts = dataset_payload(bundle)
    for fname, text in zip(manifest["graph_files"], texts):
        (out / fname).write_text(text)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out / "manifest.json"


def load_edge_list_dataset(path) -> DatasetBundle:
    """Load a dataset from a manifest.json (or its directory)."""
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    if not p.exists():
        raise DatasetError(f"no manifest found at {p}")
    manifest = json.loads(p.read_text())
    base = p.parent
    graphs = []
    for fname in manifest["graph_files"]:
        g, class_count = parse_edge_list((base / fname).read_text(),
                                         source=str(base / fname))
        if class_count != manifest["class_count"]:
            raise DatasetError(
                f"{fname}: class count {class_count} does not match manifest "
                f"{manifest['class_count']}")
        graphs.append(g)
    instances = []
    for spec in manifest["instances"]:
        gi = int(spec.get("graph_index", 0))
        instances.append(BenchmarkInstance(
            graph=graphs[gi],
            target=spec["target"],
            ground_truth_edges=EdgeSet.from_pairs(spec["ground_truth_edges"]),
            split=spec["split"],
            instance_id=spec["id"],
            graph_index=gi,
        ))
    train_nodes = manifest.get("train_nodes")
    return DatasetBundle(
        name=manifest["name"],
        task_kind=manifest["task_kind"],
        class_count=int(manifest["class_count"]),
        graphs=graphs,
        instances=instances,
        default_k=int(manifest["default_k"]),
        train_nodes=np.asarray(train_nodes) if train_nodes is not None else None,
        params=manifest.get("params", {}),
    )
