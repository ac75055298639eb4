"""Heterogeneity sweep: generate, search, fit, and score synthetic instances.

For every (heterogeneity value, instance) cell this runs the full pipeline:
sample a planted hypergraph, select the order partition by cross-validated
AUC, then fit both the selected multi-order model and the single-order
model on the complete instance and score community recovery against the
planted memberships.  Rows are emitted in a tidy layout; the summary
aggregates each heterogeneity level with bootstrap confidence intervals.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluation import bootstrap_mean_ci, cosine_similarity
from .model import FitConfig, OrderPartition, fit
from .search import SearchConfig, search
from .synthgen import SyntheticConfig, generate

__all__ = ["BenchmarkConfig", "run_benchmark", "CSV_COLUMNS"]

CSV_COLUMNS = (
    "zeta",
    "instance",
    "seed",
    "selected_partition",
    "delta_auc",
    "cs_multi",
    "cs_single",
)

DEFAULT_ZETAS = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class BenchmarkConfig:
    """Sweep settings; restarts default below the fitting default to keep
    desk-scale runs in the minutes range."""

    zetas: tuple = DEFAULT_ZETAS
    instances: int = 20
    num_nodes: int = 100
    target_degree: float = 20.0
    assortative: float = 5.0
    baseline: float = 1.0
    num_communities: int = 2
    num_folds: int = 10
    auc_pairs: int = 10_000
    num_iterations: int = 500
    num_restarts: int = 5
    min_edges_factor: float = 5.0
    greedy_gain_threshold: float = 1e-3
    exhaustive_limit: int = 4
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.instances < 1:
            raise ValueError("instances must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for z in self.zetas:
            if not 0.0 <= z <= 1.0:
                raise ValueError(f"heterogeneity {z} outside [0, 1]")


def _instance_task(args):
    cfg, zeta, instance, seed = args
    streams = np.random.SeedSequence(seed).spawn(4)
    gen_seed, search_seed, multi_seed, single_seed = (
        int(s.generate_state(1)[0]) for s in streams
    )

    h, truth = generate(
        SyntheticConfig(
            num_nodes=cfg.num_nodes,
            target_degree=cfg.target_degree,
            assortative=cfg.assortative,
            baseline=cfg.baseline,
            heterogeneity=zeta,
            seed=gen_seed,
        )
    )

    fit_cfg = FitConfig(
        num_communities=cfg.num_communities,
        num_iterations=cfg.num_iterations,
        num_restarts=cfg.num_restarts,
    )
    result = search(
        h,
        SearchConfig(
            fit=fit_cfg,
            num_folds=cfg.num_folds,
            auc_pairs=cfg.auc_pairs,
            min_edges_factor=cfg.min_edges_factor,
            greedy_gain_threshold=cfg.greedy_gain_threshold,
            exhaustive_limit=cfg.exhaustive_limit,
            seed=search_seed,
        ),
    )

    trivial = OrderPartition.trivial(h.max_order)
    multi = fit(h, result.final_partition, FitConfig(
        num_communities=cfg.num_communities,
        num_iterations=cfg.num_iterations,
        num_restarts=cfg.num_restarts,
        seed=multi_seed,
    ))
    single = fit(h, trivial, FitConfig(
        num_communities=cfg.num_communities,
        num_iterations=cfg.num_iterations,
        num_restarts=cfg.num_restarts,
        seed=single_seed,
    ))

    return {
        "zeta": zeta,
        "instance": instance,
        "seed": seed,
        "selected_partition": result.final_partition.to_string(),
        "delta_auc": float(result.delta_auc),
        "cs_multi": float(cosine_similarity(truth, multi.params.memberships)),
        "cs_single": float(cosine_similarity(truth, single.params.memberships)),
    }


def run_benchmark(cfg: BenchmarkConfig):
    """Run the sweep; returns (rows, summary).

    Instances parallelize over processes when cfg.workers > 1; per-instance
    seed streams are pre-assigned, so results are independent of the
    schedule.
    """
    tasks = []
    root = np.random.SeedSequence(cfg.seed)
    children = iter(root.spawn(len(cfg.zetas) * cfg.instances))
    for zeta in cfg.zetas:
        for instance in range(cfg.instances):
            seed = int(next(children).generate_state(1)[0])
            tasks.append((cfg, zeta, instance, seed))

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_instance_task, tasks))
    else:
        rows = [_instance_task(task) for task in tasks]

    summary = {"zetas": {}}
    ci_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    for zeta in cfg.zetas:
        cell = [r for r in rows if r["zeta"] == zeta]
        partitions = {}
        for r in cell:
            partitions[r["selected_partition"]] = partitions.get(r["selected_partition"], 0) + 1
        multi_selected = sum(1 for r in cell if "|" in r["selected_partition"])
        entry = {
            "instances": len(cell),
            "multi_order_fraction": multi_selected / len(cell),
            "partition_counts": dict(sorted(partitions.items())),
        }
        for key in ("delta_auc", "cs_multi", "cs_single"):
            values = np.array([r[key] for r in cell])
            stats = {"mean": float(values.mean())}
            if len(values) >= 2:
                low, high = bootstrap_mean_ci(values, rng=ci_rng)
                stats["ci_low"], stats["ci_high"] = low, high
            entry[key] = stats
        summary["zetas"][f"{zeta:g}"] = entry
    return rows, summary
