"""Canonical undirected graph representation and edge-set algebra.

Everything downstream (masks, explanations, attacks) indexes edges through
the canonical form defined here: an edge is an unordered pair stored as
(min, max), and the canonical iteration order of an edge set is
lexicographic on that pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

Edge = tuple[int, int]


class GraphError(ValueError):
    """Invalid graph, edge set, or perturbation."""


def canonical_edge(u: int, v: int) -> Edge:
    if u == v:
        raise GraphError(f"self-loop ({u},{v}) is not a valid edge")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class EdgeSet:
    """An ordered, duplicate-free collection of canonical edges.

    The stored order is the order used to index mask vectors.  For plain
    edge sets this is the canonical (lexicographic) order; for ranked
    candidate lists it is the ranking order.
    """

    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if not (isinstance(e, tuple) and len(e) == 2):
                raise GraphError(f"malformed edge {e!r}")
            if e[0] >= e[1]:
                raise GraphError(f"edge {e} is not in canonical (min,max) form")
            if e in seen:
                raise GraphError(f"duplicate edge {e}")
            seen.add(e)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> "EdgeSet":
        """Canonicalize arbitrary (u,v) pairs and sort lexicographically."""
        canon = {canonical_edge(int(u), int(v)) for u, v in pairs}
        return cls(tuple(sorted(canon)))

    @classmethod
    def ranked(cls, pairs: Iterable[Sequence[int]]) -> "EdgeSet":
        """Canonicalize pairs but keep the given (ranking) order."""
        out, seen = [], set()
        for u, v in pairs:
            e = canonical_edge(int(u), int(v))
            if e in seen:
                raise GraphError(f"duplicate edge {e} in ranked list")
            seen.add(e)
            out.append(e)
        return cls(tuple(out))

    @cached_property
    def _set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def _index(self) -> dict:
        return {e: i for i, e in enumerate(self.edges)}

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __contains__(self, e) -> bool:
        return e in self._set

    def index_of(self, e: Edge) -> int:
        return self._index[e]

    def sorted(self) -> "EdgeSet":
        return EdgeSet(tuple(sorted(self.edges)))

    def minus(self, other: "EdgeSet") -> "EdgeSet":
        return EdgeSet(tuple(e for e in self.edges if e not in other._set))

    def union(self, other: "EdgeSet") -> "EdgeSet":
        extra = tuple(e for e in other.edges if e not in self._set)
        return EdgeSet(self.edges + extra)

    def intersection_size(self, other: "EdgeSet") -> int:
        return len(self._set & other._set)

    def is_subset_of(self, other: "EdgeSet") -> bool:
        return self._set <= other._set

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays (us, vs), empty-safe."""
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.asarray(self.edges, dtype=np.int64)
        return arr[:, 0], arr[:, 1]


def symmetric_difference_size(e1: EdgeSet, e2: EdgeSet) -> int:
    """|e1 ∪ e2| - |e1 ∩ e2|."""
    return len(e1._set ^ e2._set)


@dataclass(frozen=True)
class Graph:
    """Undirected labeled graph with node features.

    Exactly one of node_labels / graph_label is set for a labeled task
    instance; both may be absent for bare structural graphs.
    """

    node_count: int
    edges: EdgeSet
    node_features: np.ndarray
    node_labels: Optional[np.ndarray] = None
    graph_label: Optional[int] = None

    def __post_init__(self):
        if self.node_count <= 0:
            raise GraphError("node_count must be positive")
        for u, v in self.edges:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise GraphError(f"edge ({u},{v}) endpoint out of range")
        feats = np.asarray(self.node_features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != self.node_count:
            raise GraphError(
                f"node_features must be ({self.node_count}, F), got {feats.shape}"
            )
        feats = np.ascontiguousarray(feats)
        feats.flags.writeable = False
        object.__setattr__(self, "node_features", feats)
        if self.node_labels is not None and self.graph_label is not None:
            raise GraphError("node_labels and graph_label are mutually exclusive")
        if self.node_labels is not None:
            labels = np.asarray(self.node_labels, dtype=np.int64)
            if labels.shape != (self.node_count,):
                raise GraphError("node_labels must have one entry per node")
            labels.flags.writeable = False
            object.__setattr__(self, "node_labels", labels)

    @property
    def feature_dim(self) -> int:
        return self.node_features.shape[1]

    @cached_property
    def adjacency_lists(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self.edges

    def replace_edges(self, edges: EdgeSet) -> "Graph":
        return Graph(
            node_count=self.node_count,
            edges=edges,
            node_features=self.node_features,
            node_labels=self.node_labels,
            graph_label=self.graph_label,
        )


@dataclass(frozen=True)
class Perturbation:
    """Edge additions and deletions to apply to a graph."""

    additions: EdgeSet = field(default_factory=EdgeSet)
    deletions: EdgeSet = field(default_factory=EdgeSet)

    def size(self) -> int:
        return len(self.additions) + len(self.deletions)

    def is_empty(self) -> bool:
        return self.size() == 0

    def validate_against(self, g: Graph, protected: Optional[EdgeSet] = None) -> None:
        for e in self.additions:
            if e in g.edges:
                raise GraphError(f"addition {e} already present in graph")
            if not (0 <= e[0] < g.node_count and 0 <= e[1] < g.node_count):
                raise GraphError(f"addition {e} endpoint out of range")
        for e in self.deletions:
            if e not in g.edges:
                raise GraphError(f"deletion {e} not present in graph")
        if self.additions._set & self.deletions._set:
            raise GraphError("additions and deletions overlap")
        if protected is not None:
            hit = self.deletions._set & protected._set
            if hit:
                raise GraphError(f"deletions touch protected edges: {sorted(hit)}")

    def inverse(self) -> "Perturbation":
        return Perturbation(additions=self.deletions, deletions=self.additions)


def apply_perturbation(g: Graph, p: Perturbation) -> Graph:
    """New graph with edges (E ∪ additions) \\ deletions; input unmodified."""
    p.validate_against(g)
    kept = [e for e in g.edges if e not in p.deletions]
    new_edges = EdgeSet.from_pairs(kept + list(p.additions))
    return g.replace_edges(new_edges)


def complement_edges(g: Graph, restrict_to: Optional[EdgeSet] = None) -> EdgeSet:
    """All non-adjacent distinct node pairs, canonical order.

    With restrict_to given, only pairs from that set are considered
    (used to confine attack candidates to a computation subgraph).
    """
    if restrict_to is not None:
        pairs = [e for e in restrict_to.sorted() if e not in g.edges]
        return EdgeSet(tuple(pairs))
    out = []
    present = g.edges._set
    for u in range(g.node_count):
        for v in range(u + 1, g.node_count):
            if (u, v) not in present:
                out.append((u, v))
    return EdgeSet(tuple(out))


def degree_multiset(g: Graph, d_min: int) -> np.ndarray:
    """Sorted multiset of node degrees that are >= d_min."""
    if d_min < 1:
        raise GraphError("d_min must be >= 1")
    deg = g.degrees()
    return np.sort(deg[deg >= d_min])


@dataclass(frozen=True)
class Subgraph:
    """An induced k-hop subgraph with bidirectional index maps."""

    graph: Graph
    center_local: int
    local_to_global: tuple[int, ...]

    @cached_property
    def global_to_local(self) -> dict:
        return {g: l for l, g in enumerate(self.local_to_global)}

    def edge_to_global(self, e: Edge) -> Edge:
        return canonical_edge(self.local_to_global[e[0]], self.local_to_global[e[1]])

    def edge_to_local(self, e: Edge) -> Edge:
        return canonical_edge(self.global_to_local[e[0]], self.global_to_local[e[1]])

    def edges_to_global(self, es: EdgeSet) -> EdgeSet:
        return EdgeSet.ranked([self.edge_to_global(e) for e in es])

    def edges_to_local(self, es: EdgeSet) -> EdgeSet:
        return EdgeSet.ranked([self.edge_to_local(e) for e in es])


def k_hop_subgraph(g: Graph, center: int, hops: int) -> Subgraph:
    """Induced subgraph on nodes within `hops` edges of `center`.

    Local node ids are assigned in BFS-distance order (center first, ties
    by global id), so extraction is deterministic.
    """
    if not (0 <= center < g.node_count):
        raise GraphError(f"center {center} out of range")
    if hops < 1:
        raise GraphError("hops must be >= 1")
    adj = g.adjacency_lists
    dist = {center: 0}
    frontier = [center]
    for d in range(1, hops + 1):
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    nodes = sorted(dist, key=lambda v: (dist[v], v))
    g2l = {v: i for i, v in enumerate(nodes)}
    node_set = set(nodes)
    sub_edges = EdgeSet.from_pairs(
        (g2l[u], g2l[v]) for u, v in g.edges if u in node_set and v in node_set
    )
    labels = g.node_labels[np.asarray(nodes)] if g.node_labels is not None else None
    sub = Graph(
        node_count=len(nodes),
        edges=sub_edges,
        node_features=g.node_features[np.asarray(nodes)],
        node_labels=labels,
        graph_label=g.graph_label,
    )
    return Subgraph(graph=sub, center_local=g2l[center], local_to_global=tuple(nodes))


# ---------------------------------------------------------------------------
# Edge-list text format
#
#   line 1:            N F C          (node count, feature dim, class count)
#   lines 2 .. N+1:    F reals        (features of node 0 .. N-1)
#   next line:         label node c_0 ... c_{N-1}   |   label graph c
#   remaining lines:   u v            (one edge per line)
# ---------------------------------------------------------------------------


class EdgeListFormatError(ValueError):
    """Malformed edge-list file; message carries the offending line number."""


def write_edge_list(g: Graph, class_count: int) -> str:
    lines = [f"{g.node_count} {g.feature_dim} {class_count}"]
    for row in g.node_features:
        lines.append(" ".join(repr(float(x)) for x in row))
    if g.node_labels is not None:
        lines.append("label node " + " ".join(str(int(c)) for c in g.node_labels))
    elif g.graph_label is not None:
        lines.append(f"label graph {int(g.graph_label)}")
    else:
        raise GraphError("graph has no labels to serialize")
    for u, v in g.edges.sorted():
        lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str, source: str = "<string>") -> tuple[Graph, int]:
    """Parse the edge-list format; returns (graph, class_count)."""

    def fail(lineno: int, msg: str):
        raise EdgeListFormatError(f"{source}:{lineno}: {msg}")

    lines = text.splitlines()
    if not lines:
        fail(1, "empty file")
    head = lines[0].split()
    if len(head) != 3:
        fail(1, f"expected 'N F C' header, got {lines[0]!r}")
    try:
        n, fdim, class_count = (int(x) for x in head)
    except ValueError:
        fail(1, f"non-integer header fields in {lines[0]!r}")
    if n <= 0 or fdim <= 0 or class_count <= 0:
        fail(1, "header fields must be positive")
    if len(lines) < n + 2:
        fail(len(lines), f"truncated file: expected {n} feature lines plus a label line")
    feats = np.zeros((n, fdim))
    for i in range(n):
        parts = lines[1 + i].split()
        if len(parts) != fdim:
            fail(2 + i, f"expected {fdim} feature values, got {len(parts)}")
        try:
            feats[i] = [float(x) for x in parts]
        except ValueError:
            fail(2 + i, f"non-numeric feature value in {lines[1 + i]!r}")
    label_lineno = n + 2
    parts = lines[n + 1].split()
    if len(parts) < 3 or parts[0] != "label" or parts[1] not in ("node", "graph"):
        fail(label_lineno, "expected 'label node ...' or 'label graph c'")
    node_labels = None
    graph_label = None
    try:
        values = [int(x) for x in parts[2:]]
    except ValueError:
        fail(label_lineno, "non-integer label value")
    if parts[1] == "node":
        if len(values) != n:
            fail(label_lineno, f"expected {n} node labels, got {len(values)}")
        node_labels = np.asarray(values)
    else:
        if len(values) != 1:
            fail(label_lineno, "graph label line must carry exactly one value")
        graph_label = values[0]
    if any(not (0 <= int(c) < class_count) for c in values):
        fail(label_lineno, f"label out of range for {class_count} classes")
    pairs = []
    for off, raw in enumerate(lines[n + 2 :]):
        lineno = n + 3 + off
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 2:
            fail(lineno, f"expected edge line 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            fail(lineno, f"non-integer endpoint in {raw!r}")
        if not (0 <= u < n and 0 <= v < n):
            fail(lineno, f"edge endpoint out of range in {raw!r}")
        pairs.append((u, v))
    try:
        edges = EdgeSet.from_pairs(pairs)
        graph = Graph(
            node_count=n,
            edges=edges,
            node_features=feats,
            node_labels=node_labels,
            graph_label=graph_label,
        )
    except GraphError as exc:
        raise EdgeListFormatError(f"{source}: {exc}") from exc
    return graph, class_count


def read_edge_list(path) -> tuple[Graph, int]:
    p = Path(path)
    return parse_edge_list(p.read_text(), source=str(p))
