"""Multi-order mixed-membership block model for hypergraphs.

Hyperedge weights are Poisson with rate lambda_e / kappa_{|e|}, where
lambda_e couples the soft memberships of the edge's nodes through an
affinity matrix chosen by the edge's size: the order set {2, ..., D} is
partitioned into subsets and each subset carries its own symmetric K x K
affinity matrix.  With the trivial partition (one subset) the model reduces
to the familiar single-affinity hypergraph SBM.

Inference is EM with multiplicative updates.  The variational posterior
over (node pair, community pair) assignments is never materialized; the
E step accumulates only the per-node K-vectors and per-subset K x K
matrices that the M step consumes, which keeps the per-iteration cost at
O(L N K^2 + E K^2 + M K) for E edges of total size M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hypergraph import Hypergraph

__all__ = [
    "OrderPartition",
    "ModelParams",
    "FitConfig",
    "FitResult",
    "EStepStats",
    "kappa",
    "log_kappa",
    "subset_constant",
    "edge_rate",
    "log_likelihood",
    "e_step",
    "m_step_memberships",
    "m_step_affinities",
    "fit",
    "score_hyperedge",
    "score_hyperedges",
    "fit_result_document",
]


def kappa(s: int, n: int) -> int:
    """Order-dependent rate normalization C(s,2) * C(n-2, s-2), exact."""
    if s < 2:
        raise ValueError(f"order must be at least 2, got {s}")
    if s > n:
        raise ValueError(f"order {s} exceeds node count {n}")
    return math.comb(s, 2) * math.comb(n - 2, s - 2)


def log_kappa(s: int, n: int) -> float:
    """log kappa(s, n) without forming the (possibly huge) integer product."""
    if s < 2:
        raise ValueError(f"order must be at least 2, got {s}")
    if s > n:
        raise ValueError(f"order {s} exceeds node count {n}")
    return math.log(math.comb(s, 2)) + math.log(math.comb(n - 2, s - 2))


def subset_constant(orders, n: int) -> float:
    """Per-subset constant of the rearranged rate-sum: sum over s of 1/C(s,2).

    The binomial C(n-2, s-2) appearing in the definition cancels against the
    same factor inside kappa_s, so the value does not depend on n; n is kept
    for bounds checking only.
    """
    orders = sorted(set(orders))
    if not orders:
        raise ValueError("subset of orders must be non-empty")
    for s in orders:
        if s < 2 or s > n:
            raise ValueError(f"order {s} outside [2, {n}]")
    return math.fsum(1.0 / math.comb(s, 2) for s in orders)


class OrderPartition:
    """Partition of the order set {2, ..., D} into disjoint subsets.

    Subsets are stored canonically: each sorted ascending, subsets ordered
    by their smallest element.  Every order from 2 to D must be covered
    exactly once, including orders with no observed hyperedges.
    """

    def __init__(self, subsets):
        cleaned = []
        for subset in subsets:
            sub = tuple(sorted(subset))
            if not sub:
                raise ValueError("partition subsets must be non-empty")
            if len(set(sub)) != len(sub):
                raise ValueError(f"subset {sub!r} repeats an order")
            cleaned.append(sub)
        cleaned.sort(key=lambda sub: sub[0])

        lookup = {}
        for l, sub in enumerate(cleaned):
            for s in sub:
                if s in lookup:
                    raise ValueError(f"order {s} appears in more than one subset")
                lookup[s] = l
        if not lookup:
            raise ValueError("partition must cover at least the order 2")
        lo, hi = min(lookup), max(lookup)
        if lo != 2:
            raise ValueError(f"order 2 is missing (smallest covered order is {lo})")
        for s in range(2, hi + 1):
            if s not in lookup:
                raise ValueError(f"order {s} is missing from the partition")

        self.subsets = tuple(cleaned)
        self.lookup = lookup

    @classmethod
    def trivial(cls, max_order: int) -> "OrderPartition":
        """Single subset {2, ..., D}; the single-affinity special case."""
        return cls([tuple(range(2, max_order + 1))])

    @classmethod
    def singletons(cls, max_order: int) -> "OrderPartition":
        return cls([(s,) for s in range(2, max_order + 1)])

    @classmethod
    def from_string(cls, text: str) -> "OrderPartition":
        """Parse '2,4,5|3' style strings: ','-separated orders, '|' between subsets."""
        subsets = []
        for chunk in text.split("|"):
            toks = [tok.strip() for tok in chunk.split(",") if tok.strip()]
            if not toks:
                raise ValueError(f"empty subset in partition string {text!r}")
            subsets.append(tuple(int(tok) for tok in toks))
        return cls(subsets)

    def to_string(self) -> str:
        return "|".join(",".join(str(s) for s in sub) for sub in self.subsets)

    def to_list(self):
        return [list(sub) for sub in self.subsets]

    @property
    def num_subsets(self) -> int:
        return len(self.subsets)

    @property
    def max_order(self) -> int:
        return max(self.lookup)

    def subset_index(self, order: int) -> int:
        return self.lookup[order]

    def __eq__(self, other):
        if not isinstance(other, OrderPartition):
            return NotImplemented
        return self.subsets == other.subsets

    def __hash__(self):
        return hash(self.subsets)

    def __repr__(self):
        return f"OrderPartition({self.to_string()!r})"


class ModelParams:
    """Soft memberships U (N x K, nonnegative) and one symmetric nonnegative
    K x K affinity matrix per partition subset.

    Rows of U are not normalized; the model has a global scale freedom
    (U -> cU, W -> W/c^2 leaves every rate unchanged).
    """

    def __init__(self, memberships, affinities):
        U = np.array(memberships, dtype=float)
        if U.ndim != 2:
            raise ValueError("memberships must be a 2-d array")
        if np.any(U < 0):
            raise ValueError("memberships must be nonnegative")
        K = U.shape[1]
        Ws = []
        for W in affinities:
            W = np.array(W, dtype=float)
            if W.shape != (K, K):
                raise ValueError(f"affinity matrix shape {W.shape} != ({K}, {K})")
            if np.any(W < 0):
                raise ValueError("affinities must be nonnegative")
            if not np.array_equal(W, W.T):
                raise ValueError("affinity matrices must be exactly symmetric")
            W.setflags(write=False)
            Ws.append(W)
        U.setflags(write=False)
        self.memberships = U
        self.affinities = tuple(Ws)

    @property
    def num_nodes(self) -> int:
        return self.memberships.shape[0]

    @property
    def num_communities(self) -> int:
        return self.memberships.shape[1]

    @property
    def num_subsets(self) -> int:
        return len(self.affinities)

    def __repr__(self):
        return (
            f"ModelParams(N={self.num_nodes}, K={self.num_communities}, "
            f"L={self.num_subsets})"
        )


@dataclass(frozen=True)
class FitConfig:
    """EM hyperparameters.

    rate_floor guards logarithms and divisions against exactly-zero rates;
    conv_tol, when set, stops a restart early once the per-iteration
    objective gain drops below it (off by default: the iteration count is
    fixed).  track_elbo records the objective after every iteration.
    """

    num_communities: int
    num_iterations: int = 500
    num_restarts: int = 10
    seed: int = 0
    rate_floor: float = 1e-12
    init_scale: float = 1.0
    conv_tol: float | None = None
    track_elbo: bool = False

    def __post_init__(self):
        if self.num_communities < 1:
            raise ValueError("num_communities must be at least 1")
        if self.num_iterations < 1:
            raise ValueError("num_iterations must be at least 1")
        if self.num_restarts < 1:
            raise ValueError("num_restarts must be at least 1")
        if self.rate_floor <= 0:
            raise ValueError("rate_floor must be positive")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass
class FitResult:
    """Best-restart parameters plus bookkeeping for reproducibility."""

    params: ModelParams
    log_likelihood: float
    per_restart_loglik: list[float]
    elbo_trace: list[float] | None = None
    num_floored_rates: int = 0


@dataclass
class EStepStats:
    """Sufficient statistics of the variational posterior.

    membership_numerator[i, k] and affinity_numerators[l][k, q] are exactly
    the numerators of the two multiplicative updates; the full posterior
    tensor is never formed.  num_floored counts observed edges whose rate
    hit the floor.
    """

    membership_numerator: np.ndarray
    affinity_numerators: list[np.ndarray]
    num_floored: int = 0


# ---------------------------------------------------------------------------
# internal vectorized machinery
# ---------------------------------------------------------------------------


class _SizeGroup:
    """Edges of one size as an (E_s, s) index matrix plus weights."""

    __slots__ = ("size", "idx", "weights", "flat")

    def __init__(self, size, idx, weights):
        self.size = size
        self.idx = idx
        self.weights = weights
        self.flat = idx.ravel()


def _size_groups(edges):
    by_size = {}
    for nodes, w in edges:
        by_size.setdefault(len(nodes), []).append((nodes, w))
    groups = []
    for s in sorted(by_size):
        entries = by_size[s]
        idx = np.array([nodes for nodes, _ in entries], dtype=np.int64)
        weights = np.array([w for _, w in entries], dtype=float)
        groups.append(_SizeGroup(s, idx, weights))
    return groups


def _sym(M):
    return 0.5 * (M + M.T)


def _check_consistent(h: Hypergraph, params: ModelParams, partition: OrderPartition):
    if partition.max_order != h.max_order:
        raise ValueError(
            f"partition covers orders up to {partition.max_order}, "
            f"hypergraph has max order {h.max_order}"
        )
    if params.num_nodes != h.num_nodes:
        raise ValueError("membership matrix row count does not match node count")
    if params.num_subsets != partition.num_subsets:
        raise ValueError("one affinity matrix per partition subset is required")
    if h.max_order > h.num_nodes:
        raise ValueError("max order exceeds node count; no such hyperedges exist")


def _subset_constants(partition: OrderPartition, n: int):
    return np.array([subset_constant(sub, n) for sub in partition.subsets])


def _group_rates(U, W, d, group):
    """Rates for one size group: lambda_e = s_e' W s_e - sum_i u_i' W u_i.

    d must be the per-node quadratic ((U W) * U).sum(1) for this W.
    Returns (row sums S, clamped-nonnegative rates).
    """
    S = U[group.idx].sum(axis=1)
    lam = ((S @ W) * S).sum(axis=1) - d[group.idx].sum(axis=1)
    return S, np.maximum(lam, 0.0)


def _estep_accumulate(groups, U, Ws, lookup, rate_floor):
    """One E step over grouped edges; returns EStepStats."""
    N, K = U.shape
    L = len(Ws)
    UW = [U @ W for W in Ws]
    d = [(UW[l] * U).sum(axis=1) for l in range(L)]

    scatter = np.zeros((N, K))
    cnode = np.zeros((L, N))
    outer_sum = [np.zeros((K, K)) for _ in range(L)]
    floored = 0

    for g in groups:
        l = lookup[g.size]
        S, lam = _group_rates(U, Ws[l], d[l], g)
        floored += int(np.count_nonzero(lam < rate_floor))
        coef = g.weights / np.maximum(lam, rate_floor)
        SW = S @ Ws[l]
        contrib = np.repeat(coef[:, None] * SW, g.size, axis=0)
        for k in range(K):
            scatter[:, k] += np.bincount(g.flat, weights=contrib[:, k], minlength=N)
        cnode[l] += np.bincount(g.flat, weights=np.repeat(coef, g.size), minlength=N)
        outer_sum[l] += (S * coef[:, None]).T @ S

    # per-node statistic: sum_e c_e W(s_e - u_i); clamp cancellation noise
    point = sum(UW[l] * cnode[l][:, None] for l in range(L))
    mem_num = np.maximum(U * (scatter - point), 0.0)

    aff_num = []
    for l in range(L):
        pair_sum = _sym(outer_sum[l]) - _sym(U.T @ (U * cnode[l][:, None]))
        aff_num.append(Ws[l] * np.maximum(pair_sum, 0.0))
    return EStepStats(mem_num, aff_num, floored)


def _mstep_memberships(U, Ws, consts, mem_num):
    t = U.sum(axis=0)
    wbar = sum(c * W for c, W in zip(consts, Ws))
    den = np.maximum(t[None, :] - U, 0.0) @ wbar
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, mem_num / den, 0.0)
    return out


def _mstep_affinities(U, consts, aff_num):
    t = U.sum(axis=0)
    base = np.maximum(np.outer(t, t) - _sym(U.T @ U), 0.0)
    out = []
    for c, num in zip(consts, aff_num):
        den = c * base
        with np.errstate(divide="ignore", invalid="ignore"):
            out.append(np.where(den > 0, num / den, 0.0))
    return out


def _log_likelihood_raw(groups, U, Ws, lookup, consts, rate_floor):
    """Poisson log-likelihood up to parameter-free terms; counts floored edges."""
    L = len(Ws)
    t = U.sum(axis=0)
    UW = [U @ W for W in Ws]
    d = [(UW[l] * U).sum(axis=1) for l in range(L)]
    penalty = math.fsum(
        consts[l] * (t @ (Ws[l] @ t) - d[l].sum()) for l in range(L)
    )
    obs = 0.0
    floored = 0
    for g in groups:
        l = lookup[g.size]
        _, lam = _group_rates(U, Ws[l], d[l], g)
        floored += int(np.count_nonzero(lam < rate_floor))
        obs += float(g.weights @ np.log(np.maximum(lam, rate_floor)))
    return obs - penalty, floored


def _rates_for_sets(node_sets, U, Ws, lookup):
    """Rates for an arbitrary list of node sets, grouped by size."""
    out = np.empty(len(node_sets))
    by_size = {}
    for pos, nodes in enumerate(node_sets):
        by_size.setdefault(len(nodes), []).append(pos)
    d_cache = {}
    for s, positions in by_size.items():
        if s not in lookup:
            raise ValueError(f"node set of size {s} is outside the partitioned orders")
        l = lookup[s]
        if l not in d_cache:
            d_cache[l] = ((U @ Ws[l]) * U).sum(axis=1)
        idx = np.array([node_sets[p] for p in positions], dtype=np.int64)
        S = U[idx].sum(axis=1)
        lam = ((S @ Ws[l]) * S).sum(axis=1) - d_cache[l][idx].sum(axis=1)
        out[np.array(positions)] = np.maximum(lam, 0.0)
    return out


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def edge_rate(e, params: ModelParams, partition: OrderPartition) -> float:
    """Poisson rate numerator lambda_e of a single node set.

    Computed in the quadratic form s' W s - sum_i u_i' W u_i with
    s = sum of the member rows; equal to the literal sum over ordered node
    pairs and community pairs.
    """
    nodes = tuple(sorted(e))
    if not 2 <= len(nodes) <= partition.max_order:
        raise ValueError(f"edge size {len(nodes)} outside [2, {partition.max_order}]")
    U = params.memberships
    W = params.affinities[partition.subset_index(len(nodes))]
    rows = U[list(nodes)]
    s = rows.sum(axis=0)
    lam = float(s @ W @ s - ((rows @ W) * rows).sum())
    return max(lam, 0.0)


def log_likelihood(
    h: Hypergraph,
    params: ModelParams,
    partition: OrderPartition,
    rate_floor: float = 1e-12,
) -> float:
    """Log-likelihood of the observed hypergraph (parameter-free terms dropped).

    The sum of rates over all possible hyperedges is evaluated in closed
    form through the per-subset constants; the universe of node subsets is
    never enumerated.  Rates of observed edges are floored at rate_floor
    inside the logarithm.
    """
    _check_consistent(h, params, partition)
    groups = _size_groups(h.edges)
    consts = _subset_constants(partition, h.num_nodes)
    ll, _ = _log_likelihood_raw(
        groups, params.memberships, list(params.affinities), partition.lookup,
        consts, rate_floor,
    )
    return ll


def e_step(
    h: Hypergraph,
    params: ModelParams,
    partition: OrderPartition,
    rate_floor: float = 1e-12,
) -> EStepStats:
    """Accumulate the update numerators implied by the variational posterior."""
    _check_consistent(h, params, partition)
    groups = _size_groups(h.edges)
    return _estep_accumulate(
        groups, params.memberships, list(params.affinities), partition.lookup,
        rate_floor,
    )


def m_step_memberships(
    h: Hypergraph,
    params: ModelParams,
    partition: OrderPartition,
    stats: EStepStats,
) -> np.ndarray:
    """Multiplicative membership update; zero denominators give zero entries."""
    _check_consistent(h, params, partition)
    consts = _subset_constants(partition, h.num_nodes)
    return _mstep_memberships(
        params.memberships, list(params.affinities), consts,
        stats.membership_numerator,
    )


def m_step_affinities(
    h: Hypergraph,
    params: ModelParams,
    partition: OrderPartition,
    stats: EStepStats,
) -> list[np.ndarray]:
    """Affinity update given current memberships; exact symmetry preserved."""
    _check_consistent(h, params, partition)
    consts = _subset_constants(partition, h.num_nodes)
    return _mstep_affinities(params.memberships, consts, stats.affinity_numerators)


def _symmetric_uniform(rng, k, scale):
    draw = rng.uniform(0.0, scale, size=(k, k))
    return np.triu(draw) + np.triu(draw, 1).T


def fit(h: Hypergraph, partition: OrderPartition, cfg: FitConfig) -> FitResult:
    """Fit by EM with multiple random restarts; return the best restart.

    Each restart draws memberships and (symmetrized) affinities i.i.d.
    uniform on (0, init_scale) from its own seed-derived stream, then
    alternates E step, membership update, affinity updates for exactly
    num_iterations (unless conv_tol triggers).  Restart streams are
    independent, so running restarts in any order or in parallel yields the
    same selected parameters.
    """
    if h.num_edges == 0:
        raise ValueError("cannot fit an empty hypergraph")
    if partition.max_order != h.max_order:
        raise ValueError(
            f"partition covers orders up to {partition.max_order}, "
            f"hypergraph has max order {h.max_order}"
        )
    if h.max_order > h.num_nodes:
        raise ValueError("max order exceeds node count")

    N = h.num_nodes
    K = cfg.num_communities
    L = partition.num_subsets
    lookup = partition.lookup
    groups = _size_groups(h.edges)
    consts = _subset_constants(partition, N)
    track = cfg.track_elbo or cfg.conv_tol is not None

    best_ll = -np.inf
    best = None
    best_trace = None
    best_floored = 0
    per_restart = []

    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.num_restarts):
        rng = np.random.default_rng(child)
        U = rng.uniform(0.0, cfg.init_scale, size=(N, K))
        Ws = [_symmetric_uniform(rng, K, cfg.init_scale) for _ in range(L)]

        trace = []
        for _ in range(cfg.num_iterations):
            stats = _estep_accumulate(groups, U, Ws, lookup, cfg.rate_floor)
            U = _mstep_memberships(U, Ws, consts, stats.membership_numerator)
            Ws = _mstep_affinities(U, consts, stats.affinity_numerators)
            if track:
                ll, _ = _log_likelihood_raw(groups, U, Ws, lookup, consts, cfg.rate_floor)
                trace.append(ll)
                if (
                    cfg.conv_tol is not None
                    and len(trace) >= 2
                    and trace[-1] - trace[-2] < cfg.conv_tol
                ):
                    break

        final_ll, floored = _log_likelihood_raw(groups, U, Ws, lookup, consts, cfg.rate_floor)
        per_restart.append(final_ll)
        if final_ll > best_ll:
            best_ll = final_ll
            best = (U, Ws)
            best_trace = trace if cfg.track_elbo else None
            best_floored = floored

    params = ModelParams(best[0], best[1])
    return FitResult(
        params=params,
        log_likelihood=best_ll,
        per_restart_loglik=per_restart,
        elbo_trace=best_trace,
        num_floored_rates=best_floored,
    )


def score_hyperedge(
    e,
    params: ModelParams,
    partition: OrderPartition,
    n: int,
    rate_floor: float = 1e-12,
) -> float:
    """Existence score log(lambda_e) - log(kappa_{|e|}).

    Monotone in the Poisson rate, hence in the existence probability.
    Zero rates are floored, giving a large negative sentinel that is equal
    across edges of the same size.
    """
    lam = edge_rate(e, params, partition)
    return math.log(max(lam, rate_floor)) - log_kappa(len(e), n)


def score_hyperedges(
    node_sets,
    params: ModelParams,
    partition: OrderPartition,
    n: int,
    rate_floor: float = 1e-12,
) -> np.ndarray:
    """Vectorized score_hyperedge over a list of node sets."""
    if not node_sets:
        return np.empty(0)
    lam = _rates_for_sets(
        [tuple(sorted(e)) for e in node_sets],
        params.memberships, list(params.affinities), partition.lookup,
    )
    logk = np.array([log_kappa(len(e), n) for e in node_sets])
    return np.log(np.maximum(lam, rate_floor)) - logk


def fit_result_document(
    h: Hypergraph,
    partition: OrderPartition,
    cfg: FitConfig,
    result: FitResult,
) -> dict:
    """JSON-shaped document for a fit: dimensions, partition, parameters,
    likelihoods and the full config echo."""
    return {
        "num_nodes": h.num_nodes,
        "num_communities": cfg.num_communities,
        "max_order": h.max_order,
        "partition": partition.to_list(),
        "memberships": [[float(x) for x in row] for row in result.params.memberships],
        "affinities": [
            [[float(x) for x in row] for row in W] for W in result.params.affinities
        ],
        "log_likelihood": float(result.log_likelihood),
        "per_restart_loglik": [float(x) for x in result.per_restart_loglik],
        "elbo_trace": (
            [float(x) for x in result.elbo_trace]
            if result.elbo_trace is not None
            else None
        ),
        "num_floored_rates": int(result.num_floored_rates),
        "seed": cfg.seed,
        "config": {
            "num_communities": cfg.num_communities,
            "num_iterations": cfg.num_iterations,
            "num_restarts": cfg.num_restarts,
            "seed": cfg.seed,
            "rate_floor": cfg.rate_floor,
            "init_scale": cfg.init_scale,
            "conv_tol": cfg.conv_tol,
            "track_elbo": cfg.track_elbo,
        },
    }
