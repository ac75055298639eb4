"""Command-line entry points.

Subcommands: generate, fit, search, evaluate, benchmark.  Options resolve
in three layers: built-in defaults, then a JSON config document given via
--config (unknown keys rejected), then explicit command-line flags.  Every
command embeds its fully resolved configuration (seeds included) in its
output artifact under "run_config"; re-running with that document as
--config reproduces the outputs byte for byte.

Exit codes: 0 success, 1 configuration or input error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np

from .benchmark import CSV_COLUMNS, BenchmarkConfig, run_benchmark
from .evaluation import (
    cosine_similarity,
    estimate_auc,
    auc_report_rows,
    membership_summary,
)
from .hypergraph import (
    Hypergraph,
    format_hyperedge_list,
    format_node_mapping,
    parse_hyperedge_list,
    parse_node_labels,
)
from .model import (
    FitConfig,
    ModelParams,
    OrderPartition,
    fit,
    fit_result_document,
    score_hyperedge,
)
from .search import SearchConfig, search
from .synthgen import (
    SyntheticConfig,
    edge_probabilities,
    format_ground_truth,
    generate,
    parse_ground_truth,
    solve_tau,
)

__all__ = ["main"]


class ConfigError(ValueError):
    pass


@contextmanager
def _config_phase():
    """Reclassify setup failures (validation, input parsing) as config errors."""
    try:
        yield
    except ConfigError:
        raise
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc))


DEFAULTS = {
    "generate": {
        "out": None,
        "num_nodes": 100,
        "target_degree": 20.0,
        "assortative": 5.0,
        "baseline": 1.0,
        "zeta": 0.0,
        "instances": 1,
        "seed": 0,
    },
    "fit": {
        "input": None,
        "labels": None,
        "partition": None,
        "num_communities": None,
        "num_iterations": 500,
        "num_restarts": 10,
        "rate_floor": 1e-12,
        "init_scale": 1.0,
        "conv_tol": None,
        "track_elbo": False,
        "seed": 0,
        "out": None,
        "mapping": None,
    },
    "search": {
        "input": None,
        "labels": None,
        "dataset": None,
        "num_communities": None,
        "num_folds": 10,
        "auc_pairs": 10_000,
        "min_edges_factor": 5.0,
        "greedy_gain_threshold": 1e-3,
        "exhaustive_limit": 4,
        "num_iterations": 500,
        "num_restarts": 10,
        "rate_floor": 1e-12,
        "init_scale": 1.0,
        "seed": 0,
        "out": None,
        "csv": None,
        "mapping": None,
    },
    "evaluate": {
        "params": None,
        "train": None,
        "test": None,
        "truth": None,
        "labels": None,
        "auc_pairs": 10_000,
        "seed": 0,
        "out": None,
    },
    "benchmark": {
        "zetas": [round(0.1 * i, 1) for i in range(11)],
        "instances": 20,
        "num_nodes": 100,
        "target_degree": 20.0,
        "assortative": 5.0,
        "baseline": 1.0,
        "num_communities": 2,
        "num_folds": 10,
        "auc_pairs": 10_000,
        "num_iterations": 500,
        "num_restarts": 5,
        "min_edges_factor": 5.0,
        "greedy_gain_threshold": 1e-3,
        "exhaustive_limit": 4,
        "workers": 1,
        "seed": 0,
        "out": None,
        "summary": None,
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _resolve(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then --config document, then explicit flags."""
    resolved = dict(DEFAULTS[command])
    if args.config is not None:
        try:
            document = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file: {exc}")
        if not isinstance(document, dict):
            raise ConfigError("config document must be a JSON object")
        for key, value in document.items():
            if key not in resolved:
                raise ConfigError(f"unknown config key {key!r} for command {command!r}")
            resolved[key] = value
    for key in resolved:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _require(resolved: dict, *keys):
    for key in keys:
        if resolved.get(key) is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")


def _write_json(path, document):
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")


def _write_csv(path, columns, rows):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    Path(path).write_text(buffer.getvalue())


def _load_hypergraph(path, labels_path=None) -> Hypergraph:
    h = parse_hyperedge_list(Path(path).read_text())
    if labels_path is not None:
        name_to_index = {name: i for i, name in enumerate(h.node_names)}
        labels = parse_node_labels(Path(labels_path).read_text(), name_to_index)
        h = Hypergraph(
            h.num_nodes, h.max_order, h.edges,
            node_labels=labels, node_names=h.node_names,
        )
    return h


def _communities(resolved: dict, h: Hypergraph) -> int:
    if resolved.get("num_communities") is not None:
        return int(resolved["num_communities"])
    k = h.num_label_classes()
    if k == 0:
        raise ConfigError(
            "--num-communities is required when no label file supplies categories"
        )
    return k


def _partition_for(h: Hypergraph, text: str) -> OrderPartition:
    partition = OrderPartition.from_string(text)
    if partition.max_order < h.max_order:
        raise ConfigError(
            f"partition is missing order {partition.max_order + 1} "
            f"(data requires coverage of 2..{h.max_order})"
        )
    if partition.max_order > h.max_order:
        raise ConfigError(
            f"partition includes order {partition.max_order} beyond the "
            f"data's maximum order {h.max_order}"
        )
    return partition


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_generate(resolved: dict) -> int:
    with _config_phase():
        _require(resolved, "out")
        base = SyntheticConfig(
            num_nodes=int(resolved["num_nodes"]),
            target_degree=float(resolved["target_degree"]),
            assortative=float(resolved["assortative"]),
            baseline=float(resolved["baseline"]),
            heterogeneity=float(resolved["zeta"]),
            seed=int(resolved["seed"]),
        )
        instances = int(resolved["instances"])
        out = Path(resolved["out"])

    if instances == 1:
        seeds = [base.seed]
        stems = [out]
    else:
        children = np.random.SeedSequence(base.seed).spawn(instances)
        seeds = [int(c.generate_state(1)[0]) for c in children]
        stems = [out.parent / f"{out.name}_{i:03d}" for i in range(instances)]

    records = []
    for i, (seed, stem) in enumerate(zip(seeds, stems)):
        cfg = replace(base, seed=seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            probs = edge_probabilities(cfg)
            h, truth = generate(cfg)
        clipped = any("clipped" in str(w.message) for w in caught)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        tau = solve_tau(cfg)
        graph_path = stem.parent / f"{stem.name}.txt"
        truth_path = stem.parent / f"{stem.name}.truth.csv"
        graph_path.write_text(format_hyperedge_list(h))
        truth_path.write_text(format_ground_truth(truth))
        print(
            f"instance {i}: seed={seed} tau={tau:.6f} edges={h.num_edges} "
            f"-> {graph_path}"
        )
        records.append(
            {
                "instance": i,
                "seed": seed,
                "tau": tau,
                "edge_probabilities": {str(s): list(pq) for s, pq in probs.items()},
                "clipped": clipped,
                "num_edges": h.num_edges,
                "hypergraph": str(graph_path),
                "ground_truth": str(truth_path),
            }
        )

    _write_json(out.parent / f"{out.name}.meta.json",
                {"run_config": resolved, "instances": records})
    return 0


def _cmd_fit(resolved: dict) -> int:
    with _config_phase():
        _require(resolved, "input", "partition", "out")
        h = _load_hypergraph(resolved["input"], resolved.get("labels"))
        k = _communities(resolved, h)
        partition = _partition_for(h, resolved["partition"])
        cfg = FitConfig(
            num_communities=k,
            num_iterations=int(resolved["num_iterations"]),
            num_restarts=int(resolved["num_restarts"]),
            seed=int(resolved["seed"]),
            rate_floor=float(resolved["rate_floor"]),
            init_scale=float(resolved["init_scale"]),
            conv_tol=(
                float(resolved["conv_tol"]) if resolved["conv_tol"] is not None else None
            ),
            track_elbo=bool(resolved["track_elbo"]),
        )
    result = fit(h, partition, cfg)
    document = fit_result_document(h, partition, cfg, result)
    document["run_config"] = dict(resolved, num_communities=k)
    _write_json(resolved["out"], document)
    if resolved.get("mapping"):
        Path(resolved["mapping"]).write_text(format_node_mapping(h))
    print(
        f"fitted partition {partition.to_string()} (L={partition.num_subsets}) "
        f"log_likelihood={result.log_likelihood:.6f} -> {resolved['out']}"
    )
    return 0


def _cmd_search(resolved: dict) -> int:
    with _config_phase():
        _require(resolved, "input", "out")
        h = _load_hypergraph(resolved["input"], resolved.get("labels"))
        k = _communities(resolved, h)
        cfg = SearchConfig(
            fit=FitConfig(
                num_communities=k,
                num_iterations=int(resolved["num_iterations"]),
                num_restarts=int(resolved["num_restarts"]),
                rate_floor=float(resolved["rate_floor"]),
                init_scale=float(resolved["init_scale"]),
            ),
            num_folds=int(resolved["num_folds"]),
            auc_pairs=int(resolved["auc_pairs"]),
            min_edges_factor=float(resolved["min_edges_factor"]),
            greedy_gain_threshold=float(resolved["greedy_gain_threshold"]),
            exhaustive_limit=int(resolved["exhaustive_limit"]),
            seed=int(resolved["seed"]),
        )
    result = search(h, cfg)
    document = result.to_document(cfg)
    document["multi_order_warranted"] = bool(result.delta_auc >= 0.01)
    document["run_config"] = dict(resolved, num_communities=k)
    _write_json(resolved["out"], document)
    if resolved.get("mapping"):
        Path(resolved["mapping"]).write_text(format_node_mapping(h))

    verdict = "yes" if result.delta_auc >= 0.01 else "no"
    print(f"mode: {result.mode}")
    print(f"final partition: {result.final_partition.to_string()}")
    print(
        f"delta_auc={result.delta_auc:+.4f} "
        f"(multi-order warranted at the 0.01 heuristic: {verdict})"
    )

    if resolved.get("csv"):
        dataset = resolved.get("dataset") or Path(resolved["input"]).stem
        rows = []
        for pe in result.evaluated:
            rows.extend(
                auc_report_rows(dataset, pe.partition.to_string(), pe.fold_aucs, cfg.seed)
            )
        _write_csv(resolved["csv"], ("dataset", "partition", "fold", "auc", "seed"), rows)
    return 0


def _cmd_evaluate(resolved: dict) -> int:
    with _config_phase():
        _require(resolved, "params", "out")
        document = json.loads(Path(resolved["params"]).read_text())
        params = ModelParams(
            np.array(document["memberships"], dtype=float),
            [np.array(w, dtype=float) for w in document["affinities"]],
        )
        partition = OrderPartition(document["partition"])
        n = int(document["num_nodes"])
    report = {"run_config": dict(resolved)}

    if resolved.get("train") and resolved.get("test"):
        with _config_phase():
            train = parse_hyperedge_list(Path(resolved["train"]).read_text())
            if train.num_nodes != n:
                raise ConfigError(
                    f"training hypergraph has {train.num_nodes} nodes, params expect {n}"
                )
            name_to_index = {name: i for i, name in enumerate(train.node_names)}
            test_raw = parse_hyperedge_list(Path(resolved["test"]).read_text())
            test_edges = []
            for nodes, weight in test_raw.edges:
                try:
                    mapped = tuple(
                        sorted(name_to_index[test_raw.node_names[v]] for v in nodes)
                    )
                except KeyError as exc:
                    raise ConfigError(f"test node {exc.args[0]!r} absent from training data")
                test_edges.append((mapped, weight))
            combined = {}
            for nodes, weight in list(train.edges) + test_edges:
                combined[nodes] = combined.get(nodes, 0) + weight
            full = Hypergraph(
                n, max(train.max_order, partition.max_order), sorted(combined.items())
            )
        estimate = estimate_auc(
            test_edges,
            full,
            lambda e: score_hyperedge(e, params, partition, n),
            num_pairs=int(resolved["auc_pairs"]),
            rng=int(resolved["seed"]),
        )
        report["auc"] = {
            "value": estimate.value,
            "num_pairs": estimate.num_pairs,
            "seed": estimate.seed,
        }

    if resolved.get("truth"):
        with _config_phase():
            truth = parse_ground_truth(Path(resolved["truth"]).read_text())
        report["cosine_similarity"] = cosine_similarity(truth, params.memberships)

    if resolved.get("labels"):
        with _config_phase():
            labels = parse_node_labels(Path(resolved["labels"]).read_text())
        summary = membership_summary(params, labels)
        report["membership"] = {
            "class_labels": summary.class_labels,
            "class_average": [[float(x) for x in row] for row in summary.class_average],
            "entropy": [
                None if np.isnan(e) else float(e) for e in summary.entropy
            ],
            "num_zero_rows": int(summary.zero_rows.sum()),
            "num_unlabeled": summary.num_unlabeled,
        }

    _write_json(resolved["out"], report)
    for key in ("auc", "cosine_similarity"):
        if key in report:
            print(f"{key}: {report[key]}")
    return 0


def _cmd_benchmark(resolved: dict) -> int:
    with _config_phase():
        _require(resolved, "out")
        zetas = resolved["zetas"]
        if isinstance(zetas, str):
            zetas = [float(z) for z in zetas.split(",") if z.strip()]
        cfg = BenchmarkConfig(
            zetas=tuple(float(z) for z in zetas),
            instances=int(resolved["instances"]),
            num_nodes=int(resolved["num_nodes"]),
            target_degree=float(resolved["target_degree"]),
            assortative=float(resolved["assortative"]),
            baseline=float(resolved["baseline"]),
            num_communities=int(resolved["num_communities"]),
            num_folds=int(resolved["num_folds"]),
            auc_pairs=int(resolved["auc_pairs"]),
            num_iterations=int(resolved["num_iterations"]),
            num_restarts=int(resolved["num_restarts"]),
            min_edges_factor=float(resolved["min_edges_factor"]),
            greedy_gain_threshold=float(resolved["greedy_gain_threshold"]),
            exhaustive_limit=int(resolved["exhaustive_limit"]),
            workers=int(resolved["workers"]),
            seed=int(resolved["seed"]),
        )
    rows, summary = run_benchmark(cfg)
    _write_csv(resolved["out"], CSV_COLUMNS, rows)
    summary_path = resolved.get("summary") or str(
        Path(resolved["out"]).with_suffix(".summary.json")
    )
    normalized = dict(resolved, zetas=[float(z) for z in cfg.zetas], summary=summary_path)
    _write_json(summary_path, {"run_config": normalized, "summary": summary})
    print(f"wrote {len(rows)} rows -> {resolved['out']}; summary -> {summary_path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", help="JSON config document; flags override it")
    sub.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypermosbm", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    g = commands.add_parser("generate", help="sample planted synthetic hypergraphs")
    _add_common(g)
    g.add_argument("--out", help="output path prefix")
    g.add_argument("--num-nodes", dest="num_nodes", type=int)
    g.add_argument("--degree", dest="target_degree", type=float)
    g.add_argument("--a", dest="assortative", type=float)
    g.add_argument("--b", dest="baseline", type=float)
    g.add_argument("--zeta", type=float)
    g.add_argument("--instances", type=int)

    f = commands.add_parser("fit", help="fit the model with a fixed order partition")
    _add_common(f)
    f.add_argument("--input", help="hyperedge-list file")
    f.add_argument("--labels", help="node label file (node_id,label)")
    f.add_argument("--partition", help="order partition, e.g. '2,4,5|3'")
    f.add_argument("--num-communities", dest="num_communities", type=int)
    f.add_argument("--num-iterations", dest="num_iterations", type=int)
    f.add_argument("--num-restarts", dest="num_restarts", type=int)
    f.add_argument("--rate-floor", dest="rate_floor", type=float)
    f.add_argument("--init-scale", dest="init_scale", type=float)
    f.add_argument("--conv-tol", dest="conv_tol", type=float,
                   help="stop a restart early when the objective gain drops below this")
    f.add_argument("--track-elbo", dest="track_elbo",
                   action=argparse.BooleanOptionalAction, default=None)
    f.add_argument("--out", help="output JSON path")
    f.add_argument("--mapping", help="write the original_id,index node mapping here")

    s = commands.add_parser("search", help="select the order partition by CV AUC")
    _add_common(s)
    s.add_argument("--input")
    s.add_argument("--labels")
    s.add_argument("--dataset", help="dataset name used in the CSV report")
    s.add_argument("--num-communities", dest="num_communities", type=int)
    s.add_argument("--num-folds", dest="num_folds", type=int)
    s.add_argument("--auc-pairs", dest="auc_pairs", type=int)
    s.add_argument("--min-edges-factor", dest="min_edges_factor", type=float)
    s.add_argument("--greedy-gain-threshold", dest="greedy_gain_threshold", type=float)
    s.add_argument("--exhaustive-limit", dest="exhaustive_limit", type=int)
    s.add_argument("--num-iterations", dest="num_iterations", type=int)
    s.add_argument("--num-restarts", dest="num_restarts", type=int)
    s.add_argument("--rate-floor", dest="rate_floor", type=float)
    s.add_argument("--init-scale", dest="init_scale", type=float)
    s.add_argument("--out", help="output JSON path")
    s.add_argument("--csv", help="optional per-fold AUC CSV report")
    s.add_argument("--mapping", help="write the original_id,index node mapping here")

    e = commands.add_parser("evaluate", help="AUC, recovery and membership reports")
    _add_common(e)
    e.add_argument("--params", help="fit output JSON")
    e.add_argument("--train", help="training hyperedge-list file")
    e.add_argument("--test", help="held-out hyperedge-list file")
    e.add_argument("--truth", help="ground-truth membership file (node,community)")
    e.add_argument("--labels", help="node label file")
    e.add_argument("--auc-pairs", dest="auc_pairs", type=int)
    e.add_argument("--out", help="output JSON path")

    b = commands.add_parser("benchmark", help="heterogeneity sweep over synthetic instances")
    _add_common(b)
    b.add_argument("--zetas", help="comma-separated heterogeneity values")
    b.add_argument("--instances", type=int)
    b.add_argument("--num-nodes", dest="num_nodes", type=int)
    b.add_argument("--degree", dest="target_degree", type=float)
    b.add_argument("--a", dest="assortative", type=float)
    b.add_argument("--b", dest="baseline", type=float)
    b.add_argument("--num-communities", dest="num_communities", type=int)
    b.add_argument("--num-folds", dest="num_folds", type=int)
    b.add_argument("--auc-pairs", dest="auc_pairs", type=int)
    b.add_argument("--num-iterations", dest="num_iterations", type=int)
    b.add_argument("--num-restarts", dest="num_restarts", type=int)
    b.add_argument("--min-edges-factor", dest="min_edges_factor", type=float)
    b.add_argument("--greedy-gain-threshold", dest="greedy_gain_threshold", type=float)
    b.add_argument("--exhaustive-limit", dest="exhaustive_limit", type=int)
    b.add_argument("--workers", type=int)
    b.add_argument("--out", help="output CSV path")
    b.add_argument("--summary", help="output summary JSON path")

    return parser


_COMMANDS = {
    "generate": _cmd_generate,
    "fit": _cmd_fit,
    "search": _cmd_search,
    "evaluate": _cmd_evaluate,
    "benchmark": _cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        resolved = _resolve(args.command, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    command = _COMMANDS[args.command]
    try:
        return command(resolved)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
