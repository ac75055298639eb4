"""Shared random-instance builders for the test suite."""

import numpy as np

from hypermosbm import Hypergraph, ModelParams, OrderPartition


def random_hypergraph(rng, num_nodes, max_order, num_edges, max_weight=3):
    """Random hypergraph with distinct edges and integer weights."""
    edges = {}
    attempts = 0
    while len(edges) < num_edges and attempts < 50 * num_edges:
        attempts += 1
        size = int(rng.integers(2, max_order + 1))
        nodes = tuple(sorted(rng.choice(num_nodes, size=size, replace=False).tolist()))
        if nodes not in edges:
            edges[nodes] = int(rng.integers(1, max_weight + 1))
    return Hypergraph(num_nodes, max_order, sorted(edges.items()))


def random_partition(rng, max_order):
    """Uniformly messy (not necessarily contiguous) partition of {2..D}."""
    orders = list(range(2, max_order + 1))
    labels = rng.integers(0, len(orders), size=len(orders))
    groups = {}
    for order, label in zip(orders, labels):
        groups.setdefault(int(label), []).append(order)
    return OrderPartition(list(groups.values()))


def random_params(rng, num_nodes, num_communities, num_subsets, low=0.1, high=1.0):
    """Strictly positive parameters, away from the degenerate boundary."""
    U = rng.uniform(low, high, size=(num_nodes, num_communities))
    Ws = []
    for _ in range(num_subsets):
        draw = rng.uniform(low, high, size=(num_communities, num_communities))
        Ws.append(np.triu(draw) + np.triu(draw, 1).T)
    return ModelParams(U, Ws)


def random_instance(rng, max_nodes=12, max_order_cap=4, max_communities=3):
    """Small random (hypergraph, params, partition) triple for oracle checks."""
    n = int(rng.integers(6, max_nodes + 1))
    d = int(rng.integers(2, min(max_order_cap, n) + 1))
    k = int(rng.integers(1, max_communities + 1))
    h = random_hypergraph(rng, n, d, num_edges=int(rng.integers(4, 20)))
    partition = random_partition(rng, d)
    params = random_params(rng, n, k, partition.num_subsets)
    return h, params, partition
