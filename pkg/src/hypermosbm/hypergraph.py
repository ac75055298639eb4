"""Hypergraph container, text-format ingestion, order statistics and CV folds.

A hypergraph is stored as a node universe [0, N) plus a list of weighted
hyperedges, each a sorted tuple of distinct node indices.  Parsing maps
arbitrary string identifiers to dense indices in first-appearance order and
keeps the mapping around so files can be round-tripped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Hypergraph",
    "OrderHistogram",
    "FoldAssignment",
    "HyperedgeParseError",
    "parse_hyperedge_list",
    "format_hyperedge_list",
    "format_node_mapping",
    "parse_node_labels",
    "order_histogram",
    "split_folds",
    "train_view",
]


class HyperedgeParseError(ValueError):
    """Malformed hyperedge-list input; message names the offending line."""


class Hypergraph:
    """Weighted hypergraph on dense node indices.

    Parameters
    ----------
    num_nodes : node universe size N; every edge index lies in [0, N).
    max_order : largest admitted hyperedge size D (>= 2).  Orders up to D
        belong to the model even when no edge of that size is observed.
    edges : list of (nodes, weight) with nodes a sorted tuple of distinct
        indices, 2 <= len(nodes) <= D, weight a positive integer.  No two
        entries may share the same node set.
    node_labels : optional map node index -> category string.
    node_names : optional original string identifiers, index-aligned
        (the sidecar mapping retained by the parser).

    Instances are treated as immutable after construction.
    """

    def __init__(self, num_nodes, max_order, edges, node_labels=None, node_names=None):
        if num_nodes < 0:
            raise ValueError("num_nodes must be nonnegative")
        if max_order < 2:
            raise ValueError("max_order must be at least 2")
        seen = set()
        for nodes, weight in edges:
            if len(set(nodes)) != len(nodes) or list(nodes) != sorted(nodes):
                raise ValueError(f"edge {nodes!r} is not a sorted tuple of distinct nodes")
            if not 2 <= len(nodes) <= max_order:
                raise ValueError(f"edge {nodes!r} has size outside [2, {max_order}]")
            if nodes[0] < 0 or nodes[-1] >= num_nodes:
                raise ValueError(f"edge {nodes!r} has node index outside [0, {num_nodes})")
            if int(weight) != weight or weight < 1:
                raise ValueError(f"edge {nodes!r} has non-positive-integer weight {weight!r}")
            if nodes in seen:
                raise ValueError(f"duplicate edge {nodes!r}; aggregate weights before construction")
            seen.add(nodes)
        if node_names is not None and len(node_names) != num_nodes:
            raise ValueError("node_names must have one entry per node")

        self.num_nodes = int(num_nodes)
        self.max_order = int(max_order)
        self.edges = [(tuple(nodes), int(weight)) for nodes, weight in edges]
        self.node_labels = dict(node_labels) if node_labels else None
        self.node_names = list(node_names) if node_names is not None else None
        self._edge_sets = None

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def total_size(self):
        """Sum of hyperedge sizes, M."""
        return sum(len(nodes) for nodes, _ in self.edges)

    @property
    def orders(self):
        """Full order set {2, ..., D} admitted by the model."""
        return tuple(range(2, self.max_order + 1))

    @property
    def edge_sets(self):
        """Frozenset of observed node tuples, for O(1) membership tests."""
        if self._edge_sets is None:
            self._edge_sets = frozenset(nodes for nodes, _ in self.edges)
        return self._edge_sets

    def num_label_classes(self):
        """Number of distinct node-label categories (0 when unlabeled)."""
        if not self.node_labels:
            return 0
        return len(set(self.node_labels.values()))

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.max_order == other.max_order
            and sorted(self.edges) == sorted(other.edges)
            and self.node_labels == other.node_labels
            and self.node_names == other.node_names
        )

    def __repr__(self):
        return (
            f"Hypergraph(N={self.num_nodes}, D={self.max_order}, "
            f"E={self.num_edges})"
        )


@dataclass(frozen=True)
class OrderHistogram:
    """Number of observed hyperedges per size s in [2, D]; absent sizes are 0."""

    counts: dict[int, int]

    @property
    def total(self):
        return sum(self.counts.values())

    def count(self, order):
        return self.counts.get(order, 0)


@dataclass(frozen=True)
class FoldAssignment:
    """Disjoint covering assignment of edge indices to folds.

    Fold sizes differ by at most one; reconstruction from the same seed is
    bit-identical.
    """

    num_folds: int
    fold_of_edge: np.ndarray
    seed: int

    def fold_indices(self, fold):
        if not 0 <= fold < self.num_folds:
            raise ValueError(f"fold {fold} outside [0, {self.num_folds})")
        return np.flatnonzero(self.fold_of_edge == fold)


def parse_hyperedge_list(text: str) -> Hypergraph:
    """Parse a hyperedge-list document into a Hypergraph.

    Format: one hyperedge per line as comma-separated node identifiers,
    optionally followed by whitespace and an integer weight.  Lines starting
    with '#' are comments; the directive '#D=<int>' overrides the maximum
    order (default: largest observed size).  Duplicate node sets aggregate
    their weights.  Node identifiers are densified in first-appearance order.
    """
    index_of = {}
    names = []
    weights = {}
    first_seen = {}
    max_size = 0
    directive_d = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.upper().startswith("D="):
                try:
                    directive_d = int(body[2:])
                except ValueError:
                    raise HyperedgeParseError(f"line {lineno}: malformed #D= directive {line!r}")
            continue
        parts = line.split()
        if len(parts) > 2:
            raise HyperedgeParseError(f"line {lineno}: non-integer weight {' '.join(parts[1:])!r}")
        weight = 1
        if len(parts) == 2:
            try:
                weight = int(parts[1])
            except ValueError:
                raise HyperedgeParseError(f"line {lineno}: non-integer weight {parts[1]!r}")
            if weight <= 0:
                raise HyperedgeParseError(f"line {lineno}: weight must be positive, got {weight}")
        ids = [tok for tok in parts[0].split(",") if tok != ""]
        distinct = set(ids)
        if len(distinct) < 2:
            raise HyperedgeParseError(f"line {lineno}: hyperedge needs at least 2 distinct nodes")
        if len(distinct) != len(ids):
            raise HyperedgeParseError(f"line {lineno}: repeated node in hyperedge")
        for tok in ids:
            if tok not in index_of:
                index_of[tok] = len(names)
                names.append(tok)
        nodes = tuple(sorted(index_of[tok] for tok in ids))
        max_size = max(max_size, len(nodes))
        if nodes in weights:
            weights[nodes] += weight
        else:
            weights[nodes] = weight
            first_seen[nodes] = lineno

    if directive_d is not None:
        if directive_d < max(2, max_size):
            raise HyperedgeParseError(
                f"#D={directive_d} is smaller than the largest observed size {max_size}"
            )
        max_order = directive_d
    else:
        max_order = max(2, max_size)

    edges = sorted(weights.items(), key=lambda kv: first_seen[kv[0]])
    return Hypergraph(len(names), max_order, edges, node_names=names)


def format_hyperedge_list(h: Hypergraph) -> str:
    """Render a Hypergraph in the parseable hyperedge-list format.

    Emits a '#D=' header so the maximum order survives a round trip even
    when the top sizes are unobserved.
    """
    names = h.node_names if h.node_names is not None else [str(i) for i in range(h.num_nodes)]
    lines = [f"#D={h.max_order}"]
    for nodes, weight in h.edges:
        ids = ",".join(names[i] for i in nodes)
        lines.append(ids if weight == 1 else f"{ids} {weight}")
    return "\n".join(lines) + "\n"


def format_node_mapping(h: Hypergraph) -> str:
    """Two-column 'original_id,index' mapping, one node per line."""
    names = h.node_names if h.node_names is not None else [str(i) for i in range(h.num_nodes)]
    return "\n".join(f"{name},{i}" for i, name in enumerate(names)) + "\n"


def parse_node_labels(text: str, name_to_index=None) -> dict:
    """Parse 'node_id,label' lines into an index->label map.

    When name_to_index is None, node ids are taken to be dense indices
    already.  Ids absent from the mapping are skipped.
    """
    labels = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "," not in line:
            raise HyperedgeParseError(f"line {lineno}: expected 'node_id,label'")
        name, label = line.split(",", 1)
        name = name.strip()
        if name_to_index is None:
            labels[int(name)] = label.strip()
        elif name in name_to_index:
            labels[name_to_index[name]] = label.strip()
    return labels


def order_histogram(h: Hypergraph) -> OrderHistogram:
    """Count observed hyperedges by size (edge count, not weight sum)."""
    counts = {s: 0 for s in h.orders}
    for nodes, _ in h.edges:
        counts[len(nodes)] += 1
    return OrderHistogram(counts)


def split_folds(h: Hypergraph, num_folds: int, seed: int) -> FoldAssignment:
    """Deal edge indices round-robin into folds after a seeded shuffle.

    Deterministic for fixed (E, num_folds, seed); fold sizes differ by at
    most one.
    """
    if num_folds < 2:
        raise ValueError("num_folds must be at least 2")
    if h.num_edges < num_folds:
        raise ValueError(f"cannot split {h.num_edges} edges into {num_folds} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(h.num_edges)
    fold_of_edge = np.empty(h.num_edges, dtype=np.int64)
    fold_of_edge[perm] = np.arange(h.num_edges) % num_folds
    return FoldAssignment(num_folds, fold_of_edge, seed)


def train_view(h: Hypergraph, fa: FoldAssignment, test_fold: int):
    """Split into a training hypergraph and the held-out edge list.

    The training hypergraph keeps N, D, labels and original weights; only
    the edges of ``test_fold`` are removed and returned separately.
    """
    test_idx = set(fa.fold_indices(test_fold).tolist())
    train_edges = [e for i, e in enumerate(h.edges) if i not in test_idx]
    test_edges = [e for i, e in enumerate(h.edges) if i in test_idx]
    train = Hypergraph(
        h.num_nodes,
        h.max_order,
        train_edges,
        node_labels=h.node_labels,
        node_names=h.node_names,
    )
    return train, test_edges
