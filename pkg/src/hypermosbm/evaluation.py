"""Hyperlink-prediction AUC, community-recovery and membership analytics.

The AUC estimator follows the pairwise Monte Carlo scheme: positives drawn
with replacement from the held-out edges, negatives drawn uniformly from
the non-observed node sets of matching size, ties scored as one half.
Community recovery uses the permutation-maximized mean per-node cosine,
solved exactly as a linear assignment.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import t as student_t

from .hypergraph import Hypergraph
from .model import ModelParams

__all__ = [
    "AucEstimate",
    "MembershipSummary",
    "NegativeSamplingError",
    "sample_negative",
    "sample_auc_pairs",
    "auc_from_scores",
    "estimate_auc",
    "cosine_similarity",
    "membership_summary",
    "paired_t_test_one_sided",
    "bonferroni_adjust",
    "bootstrap_mean_ci",
    "auc_report_rows",
]

RETRY_CAP = 1000


class NegativeSamplingError(RuntimeError):
    """Could not find a non-observed node set of the requested size."""


@dataclass(frozen=True)
class AucEstimate:
    """Monte Carlo AUC: mean of per-pair indicators in {0, 0.5, 1}."""

    value: float
    num_pairs: int
    seed: int | None = None


@dataclass
class MembershipSummary:
    """Row-normalized memberships with per-class averages and entropies.

    Rows that sum to zero cannot be normalized; they are left all-zero,
    flagged in zero_rows, given NaN entropy, and excluded from class
    averages.
    """

    normalized: np.ndarray
    zero_rows: np.ndarray
    entropy: np.ndarray
    class_labels: list[str]
    class_average: np.ndarray
    num_unlabeled: int = 0


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _edge_nodes(entry):
    # accept both bare node tuples and (nodes, weight) pairs
    if len(entry) == 2 and isinstance(entry[0], (tuple, list)):
        return tuple(entry[0])
    return tuple(entry)


def sample_negative(size: int, h: Hypergraph, rng) -> tuple:
    """Uniform non-observed node set of the given size.

    Membership is tested against the full original edge set.  Rejection
    sampling with a retry cap; near-complete orders raise.
    """
    if not 2 <= size <= h.max_order:
        raise ValueError(f"size {size} outside [2, {h.max_order}]")
    rng = _as_rng(rng)
    observed = h.edge_sets
    for _ in range(RETRY_CAP):
        candidate = tuple(sorted(rng.choice(h.num_nodes, size=size, replace=False).tolist()))
        if candidate not in observed:
            return candidate
    raise NegativeSamplingError(
        f"no unobserved node set of size {size} found in {RETRY_CAP} draws"
    )


def sample_auc_pairs(test_edges, h: Hypergraph, num_pairs: int, rng):
    """Positive/negative node-set pairs for the AUC estimator.

    Positives are sampled uniformly with replacement from test_edges; each
    negative matches its positive's size and avoids the full edge set of h.
    """
    if len(test_edges) == 0:
        raise ValueError("test_edges must be non-empty")
    rng = _as_rng(rng)
    nodes = [_edge_nodes(e) for e in test_edges]
    picks = rng.integers(0, len(nodes), size=num_pairs)
    positives = [nodes[i] for i in picks]
    negatives = [sample_negative(len(p), h, rng) for p in positives]
    return positives, negatives


def auc_from_scores(pos_scores, neg_scores) -> float:
    """Fraction of pairs with the positive ranked higher; ties count 0.5."""
    pos = np.asarray(pos_scores, dtype=float)
    neg = np.asarray(neg_scores, dtype=float)
    if pos.shape != neg.shape or pos.ndim != 1 or pos.size == 0:
        raise ValueError("score vectors must be non-empty and aligned")
    return float(np.mean((pos > neg) + 0.5 * (pos == neg)))


def estimate_auc(
    test_edges,
    h: Hypergraph,
    score,
    num_pairs: int = 10_000,
    rng=None,
) -> AucEstimate:
    """Monte Carlo AUC of a scoring function on held-out edges.

    score maps a node tuple to a real number.  num_pairs = 10^4 gives a
    standard error of roughly 0.005, i.e. a precision of about +/- 0.01.
    """
    seed = rng if isinstance(rng, int) else None
    positives, negatives = sample_auc_pairs(test_edges, h, num_pairs, _as_rng(rng))
    pos_scores = np.array([score(e) for e in positives])
    neg_scores = np.array([score(e) for e in negatives])
    return AucEstimate(auc_from_scores(pos_scores, neg_scores), num_pairs, seed)


def cosine_similarity(u_true, u_hat) -> float:
    """Permutation-invariant mean per-node cosine between membership matrices.

    Maximizes over column permutations of u_hat.  The objective is linear
    in the permutation, so an exact solution comes from a linear assignment
    on the K x K matrix of averaged normalized cross-products.  All-zero
    rows (undefined cosine) are dropped from the average with a warning.
    """
    A = np.asarray(u_true, dtype=float)
    B = np.asarray(u_hat, dtype=float)
    if A.shape != B.shape or A.ndim != 2:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    valid = (na > 0) & (nb > 0)
    dropped = int(np.count_nonzero(~valid))
    if dropped:
        warnings.warn(f"cosine_similarity: dropped {dropped} all-zero rows", stacklevel=2)
    if not np.any(valid):
        raise ValueError("no rows with nonzero norm in both matrices")
    An = A[valid] / na[valid, None]
    Bn = B[valid] / nb[valid, None]
    cross = (An.T @ Bn) / An.shape[0]
    rows, cols = linear_sum_assignment(cross, maximize=True)
    return float(cross[rows, cols].sum())


def membership_summary(params: ModelParams, labels=None) -> MembershipSummary:
    """Row-normalize memberships, average within label classes, and compute
    per-node Shannon entropies (natural log)."""
    U = params.memberships
    row_sum = U.sum(axis=1)
    zero_rows = row_sum == 0
    normalized = np.zeros_like(U)
    np.divide(U, row_sum[:, None], out=normalized, where=~zero_rows[:, None])

    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(normalized > 0, normalized * np.log(normalized), 0.0)
    entropy = -plogp.sum(axis=1)
    entropy[zero_rows] = np.nan

    class_labels: list[str] = []
    num_unlabeled = 0
    if labels:
        class_labels = sorted(set(labels.values()))
        class_average = np.zeros((len(class_labels), U.shape[1]))
        class_index = {z: i for i, z in enumerate(class_labels)}
        counts = np.zeros(len(class_labels), dtype=int)
        for node in range(U.shape[0]):
            if node not in labels:
                num_unlabeled += 1
                continue
            if zero_rows[node]:
                continue
            z = class_index[labels[node]]
            class_average[z] += normalized[node]
            counts[z] += 1
        nonzero = counts > 0
        class_average[nonzero] /= counts[nonzero, None]
    else:
        class_average = np.zeros((0, U.shape[1]))

    return MembershipSummary(
        normalized=normalized,
        zero_rows=zero_rows,
        entropy=entropy,
        class_labels=class_labels,
        class_average=class_average,
        num_unlabeled=num_unlabeled,
    )


def paired_t_test_one_sided(x, y) -> float:
    """Upper-tail p-value of the paired t test for mean(x - y) > 0.

    Degenerate zero-variance differences give p = 1 when the mean is
    nonpositive and p = 0 (below machine representation) when positive.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be aligned 1-d vectors")
    n = x.size
    if n < 2:
        raise ValueError("need at least two paired observations")
    d = x - y
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean > 0:
            warnings.warn(
                "zero-variance positive differences; p-value underflows to 0",
                stacklevel=2,
            )
            return 0.0
        return 1.0
    stat = mean / (sd / math.sqrt(n))
    return float(student_t.sf(stat, n - 1))


def bonferroni_adjust(p: float, num_tests: int) -> float:
    """Bonferroni-corrected p-value, capped at 1."""
    if num_tests < 1:
        raise ValueError("num_tests must be at least 1")
    return min(1.0, p * num_tests)


def bootstrap_mean_ci(samples, level: float = 0.95, resamples: int = 10_000, rng=None):
    """Percentile bootstrap confidence interval for the mean."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError("need at least two samples")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    rng = _as_rng(rng)
    idx = rng.integers(0, samples.size, size=(resamples, samples.size))
    means = samples[idx].mean(axis=1)
    alpha = 1.0 - level
    low, high = np.quantile(means, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(low), float(high)


def auc_report_rows(dataset: str, partition_str: str, fold_aucs, seed) -> list[dict]:
    """Rows for the CSV report: dataset, partition, fold, auc, seed."""
    return [
        {
            "dataset": dataset,
            "partition": partition_str,
            "fold": fold,
            "auc": float(auc),
            "seed": seed,
        }
        for fold, auc in enumerate(fold_aucs)
    ]
