"""Planted two-community hypergraph generator with order heterogeneity.

Nodes split into two equal halves with hard memberships.  Each potential
hyperedge of size s in {2, 3, 4} exists independently with probability
p_s (all members in one community) or q_s (mixed), where p_s and q_s scale
a pair (a_s, b_s) by a global factor tau calibrated so the expected node
degree hits a target.  A heterogeneity knob moves the size-3 pattern toward
disassortative and the size-4 pattern toward uniform as it grows from 0
to 1.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .hypergraph import Hypergraph

__all__ = [
    "SIZES",
    "SyntheticConfig",
    "interpolate_affinity",
    "solve_tau",
    "edge_probabilities",
    "generate",
    "format_ground_truth",
    "parse_ground_truth",
]

SIZES = (2, 3, 4)


@dataclass(frozen=True)
class SyntheticConfig:
    num_nodes: int = 100
    target_degree: float = 20.0
    assortative: float = 5.0
    baseline: float = 1.0
    heterogeneity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_nodes < 2 * max(SIZES) or self.num_nodes % 2 != 0:
            raise ValueError("num_nodes must be even and large enough for size-4 edges")
        if self.target_degree <= 0:
            raise ValueError("target_degree must be positive")
        if self.assortative <= 0 or self.baseline <= 0:
            raise ValueError("assortative and baseline strengths must be positive")
        if not 0.0 <= self.heterogeneity <= 1.0:
            raise ValueError("heterogeneity must lie in [0, 1]")


def interpolate_affinity(a: float, b: float, zeta: float) -> dict:
    """Per-size (a_s, b_s) pairs.

    Size 2 keeps (a, b).  Size 3 interpolates linearly toward the swapped
    pair, crossing to disassortative past zeta = 0.5.  Size 4 interpolates
    toward the common mean, approaching a uniform pattern.
    """
    a3 = (1.0 - zeta) * a + zeta * b
    b3 = (1.0 - zeta) * b + zeta * a
    a4 = (1.0 - zeta) * a + 0.5 * zeta * (a + b)
    b4 = (1.0 - zeta) * b + 0.5 * zeta * (a + b)
    return {2: (a, b), 3: (a3, b3), 4: (a4, b4)}


def solve_tau(cfg: SyntheticConfig) -> float:
    """Global scale making the expected node degree equal target_degree.

    A node of either community sits in C(N/2-1, s-1) same-community and
    C(N-1, s-1) - C(N/2-1, s-1) mixed potential edges of size s, each a
    Bernoulli trial with probability tau*a_s/C(N-1, s-1) resp.
    tau*b_s/C(N-1, s-1).
    """
    n = cfg.num_nodes
    half = n // 2
    pairs = interpolate_affinity(cfg.assortative, cfg.baseline, cfg.heterogeneity)
    per_tau = 0.0
    for s in SIZES:
        a_s, b_s = pairs[s]
        total = math.comb(n - 1, s - 1)
        same = math.comb(half - 1, s - 1)
        per_tau += (a_s * same + b_s * (total - same)) / total
    return cfg.target_degree / per_tau


def edge_probabilities(cfg: SyntheticConfig) -> dict:
    """Per-size (p_s, q_s) Bernoulli probabilities, clipped to [0, 1].

    Clipping breaks the exact degree calibration, so it warns loudly; at
    the default parameter scales it never fires.
    """
    tau = solve_tau(cfg)
    pairs = interpolate_affinity(cfg.assortative, cfg.baseline, cfg.heterogeneity)
    probs = {}
    clipped = False
    for s in SIZES:
        denom = math.comb(cfg.num_nodes - 1, s - 1)
        p_s = tau * pairs[s][0] / denom
        q_s = tau * pairs[s][1] / denom
        if p_s > 1.0 or q_s > 1.0:
            clipped = True
        probs[s] = (min(p_s, 1.0), min(q_s, 1.0))
    if clipped:
        warnings.warn(
            "edge probabilities clipped at 1; expected degree no longer matches "
            "the target", stacklevel=2,
        )
    return probs


def _sample_in_class(rng, half, c, s, count, n_class):
    """Draw `count` distinct size-s sets with c members in the first half.

    Dense classes are enumerated and subsampled; sparse ones (the usual
    case) use rejection on a hash set.
    """
    if count == 0:
        return []
    if n_class <= 200_000 and count > n_class // 4:
        members = []
        firsts = list(itertools.combinations(range(half), c))
        seconds = list(itertools.combinations(range(half, 2 * half), s - c))
        for fa in firsts:
            for sb in seconds:
                members.append(tuple(sorted(fa + sb)))
        picks = rng.choice(n_class, size=count, replace=False)
        return [members[i] for i in sorted(picks.tolist())]
    chosen = set()
    out = []
    while len(out) < count:
        left = tuple(rng.choice(half, size=c, replace=False).tolist()) if c else ()
        right = (
            tuple((half + rng.choice(half, size=s - c, replace=False)).tolist())
            if s - c
            else ()
        )
        candidate = tuple(sorted(left + right))
        if candidate not in chosen:
            chosen.add(candidate)
            out.append(candidate)
    return out


def generate(cfg: SyntheticConfig):
    """Sample one hypergraph instance plus its ground-truth memberships.

    Equivalent in distribution to running one Bernoulli trial per potential
    hyperedge: within each (size, community-composition) class the number
    of realized edges is Binomial(class size, class probability) and the
    realized edges are uniform without replacement within the class.

    Returns (Hypergraph, N x 2 one-hot ground truth); community 1 holds
    nodes [0, N/2), community 2 the rest.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.num_nodes
    half = n // 2
    probs = edge_probabilities(cfg)

    edges = []
    for s in SIZES:
        p_s, q_s = probs[s]
        for c in range(max(0, s - half), min(s, half) + 1):
            n_class = math.comb(half, c) * math.comb(half, s - c)
            if n_class == 0:
                continue
            prob = p_s if c in (0, s) else q_s
            count = int(rng.binomial(n_class, prob))
            for nodes in _sample_in_class(rng, half, c, s, count, n_class):
                edges.append((nodes, 1))

    ground_truth = np.zeros((n, 2))
    ground_truth[:half, 0] = 1.0
    ground_truth[half:, 1] = 1.0
    return Hypergraph(n, max(SIZES), edges), ground_truth


def format_ground_truth(ground_truth) -> str:
    """'node,community' lines with communities numbered from 1."""
    communities = np.argmax(ground_truth, axis=1) + 1
    return "\n".join(f"{i},{c}" for i, c in enumerate(communities)) + "\n"


def parse_ground_truth(text: str) -> np.ndarray:
    """Read 'node,community' lines back into a one-hot membership matrix."""
    rows = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        node, community = line.split(",", 1)
        rows[int(node)] = int(community)
    if not rows:
        raise ValueError("empty ground-truth file")
    n = max(rows) + 1
    k = max(rows.values())
    out = np.zeros((n, k))
    for node, community in rows.items():
        out[node, community - 1] = 1.0
    return out
