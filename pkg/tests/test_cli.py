import csv
import json

import numpy as np
import pytest

from hypermosbm import parse_hyperedge_list
from hypermosbm.cli import main

from helpers import random_hypergraph
from hypermosbm.hypergraph import format_hyperedge_list


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """One small generated instance shared across CLI tests."""
    root = tmp_path_factory.mktemp("data")
    prefix = root / "toy"
    code = main([
        "generate", "--out", str(prefix),
        "--num-nodes", "60", "--degree", "12", "--zeta", "0.8", "--seed", "42",
    ])
    assert code == 0
    return {
        "graph": prefix.with_name("toy.txt"),
        "truth": prefix.with_name("toy.truth.csv"),
        "meta": prefix.with_name("toy.meta.json"),
        "root": root,
    }


class TestGenerate:
    def test_outputs_exist_and_parse(self, dataset):
        h = parse_hyperedge_list(dataset["graph"].read_text())
        assert h.max_order == 4
        truth_lines = dataset["truth"].read_text().strip().splitlines()
        assert len(truth_lines) == 60
        meta = json.loads(dataset["meta"].read_text())
        assert meta["run_config"]["seed"] == 42
        assert meta["instances"][0]["tau"] > 0

    def test_multiple_instances(self, tmp_path):
        code = main([
            "generate", "--out", str(tmp_path / "sweep"),
            "--num-nodes", "40", "--degree", "8", "--instances", "3", "--seed", "1",
        ])
        assert code == 0
        for i in range(3):
            assert (tmp_path / f"sweep_{i:03d}.txt").exists()
            assert (tmp_path / f"sweep_{i:03d}.truth.csv").exists()
        meta = json.loads((tmp_path / "sweep.meta.json").read_text())
        seeds = [rec["seed"] for rec in meta["instances"]]
        assert len(set(seeds)) == 3

    def test_invalid_zeta_is_config_error(self, tmp_path, capsys):
        code = main(["generate", "--out", str(tmp_path / "x"), "--zeta", "1.5"])
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_determinism(self, tmp_path):
        for sub in ("a", "b"):
            (tmp_path / sub).mkdir()
            assert main([
                "generate", "--out", str(tmp_path / sub / "g"),
                "--num-nodes", "40", "--degree", "8", "--seed", "5",
            ]) == 0
        assert (tmp_path / "a" / "g.txt").read_bytes() == (tmp_path / "b" / "g.txt").read_bytes()
        assert (
            (tmp_path / "a" / "g.truth.csv").read_bytes()
            == (tmp_path / "b" / "g.truth.csv").read_bytes()
        )


class TestFit:
    def test_fit_writes_document(self, dataset, tmp_path):
        out = tmp_path / "fit.json"
        code = main([
            "fit", "--input", str(dataset["graph"]), "--partition", "2|3,4",
            "--num-communities", "2", "--num-iterations", "40",
            "--num-restarts", "2", "--seed", "3", "--out", str(out),
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["partition"] == [[2], [3, 4]]
        assert doc["num_communities"] == 2
        assert len(doc["memberships"]) == 60
        assert doc["log_likelihood"] == max(doc["per_restart_loglik"])
        assert doc["run_config"]["partition"] == "2|3,4"

    def test_overlap_rejected(self, dataset, tmp_path, capsys):
        code = main([
            "fit", "--input", str(dataset["graph"]), "--partition", "2|2,3",
            "--num-communities", "2", "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1
        assert "order 2" in capsys.readouterr().err

    def test_gap_rejected_naming_order(self, dataset, tmp_path, capsys):
        code = main([
            "fit", "--input", str(dataset["graph"]), "--partition", "2|4",
            "--num-communities", "2", "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1
        assert "order 3" in capsys.readouterr().err

    def test_partition_must_cover_data_orders(self, dataset, tmp_path, capsys):
        code = main([
            "fit", "--input", str(dataset["graph"]), "--partition", "2,3",
            "--num-communities", "2", "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1
        assert "order 4" in capsys.readouterr().err

    def test_missing_input_file(self, tmp_path, capsys):
        code = main([
            "fit", "--input", str(tmp_path / "absent.txt"), "--partition", "2",
            "--num-communities", "2", "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1

    def test_rerun_with_echoed_config_is_identical(self, dataset, tmp_path):
        out = tmp_path / "first.json"
        assert main([
            "fit", "--input", str(dataset["graph"]), "--partition", "2,3,4",
            "--num-communities", "2", "--num-iterations", "30", "--out", str(out),
        ]) == 0
        echo = json.loads(out.read_text())["run_config"]
        cfg_path = tmp_path / "echo.json"
        cfg_path.write_text(json.dumps(echo))
        assert main(["fit", "--config", str(cfg_path)]) == 0
        assert json.loads(out.read_text())["run_config"] == echo
        # byte-identical rerun
        first = out.read_bytes()
        assert main(["fit", "--config", str(cfg_path)]) == 0
        assert out.read_bytes() == first


class TestSearch:
    def test_exhaustive_search_document(self, dataset, tmp_path, capsys):
        out = tmp_path / "search.json"
        csv_out = tmp_path / "folds.csv"
        code = main([
            "search", "--input", str(dataset["graph"]),
            "--num-communities", "2", "--num-folds", "5",
            "--auc-pairs", "300", "--num-iterations", "25", "--num-restarts", "1",
            "--seed", "2", "--out", str(out), "--csv", str(csv_out),
        ])
        assert code == 0
        printed = capsys.readouterr().out
        assert "delta_auc=" in printed and "0.01 heuristic" in printed
        doc = json.loads(out.read_text())
        assert doc["mode"] == "exhaustive"
        assert len(doc["evaluated"]) <= 5  # Bell(3) admissible candidates
        assert doc["delta_auc"] == pytest.approx(
            doc["mean_auc"] - doc["baseline_auc"]
        )
        with csv_out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert {r["partition"] for r in rows} == {
            e["partition"] for e in doc["evaluated"]
        }
        assert all(r["dataset"] == "toy" for r in rows)

    def test_greedy_mode_on_wide_order_set(self, tmp_path):
        rng = np.random.default_rng(0)
        h = random_hypergraph(rng, 40, 6, 300)
        path = tmp_path / "wide.txt"
        path.write_text(format_hyperedge_list(h))
        out = tmp_path / "wide.json"
        code = main([
            "search", "--input", str(path), "--num-communities", "2",
            "--num-folds", "5", "--auc-pairs", "200", "--num-iterations", "15",
            "--num-restarts", "1", "--seed", "4", "--out", str(out),
        ])
        assert code == 0
        assert json.loads(out.read_text())["mode"] == "greedy"

    def test_rerun_with_echo_identical(self, dataset, tmp_path):
        out = tmp_path / "s.json"
        argv = [
            "search", "--input", str(dataset["graph"]), "--num-communities", "2",
            "--num-folds", "5", "--auc-pairs", "200", "--num-iterations", "15",
            "--num-restarts", "1", "--seed", "8", "--out", str(out),
        ]
        assert main(argv) == 0
        first = out.read_bytes()
        echo = json.loads(out.read_text())["run_config"]
        cfg_path = tmp_path / "echo.json"
        cfg_path.write_text(json.dumps(echo))
        assert main(["search", "--config", str(cfg_path)]) == 0
        assert out.read_bytes() == first


class TestEvaluate:
    @pytest.fixture()
    def fitted(self, dataset, tmp_path):
        out = tmp_path / "fit.json"
        assert main([
            "fit", "--input", str(dataset["graph"]), "--partition", "2,3,4",
            "--num-communities", "2", "--num-iterations", "60",
            "--num-restarts", "2", "--seed", "11", "--out", str(out),
        ]) == 0
        return out

    def test_cosine_against_truth(self, dataset, fitted, tmp_path):
        out = tmp_path / "eval.json"
        code = main([
            "evaluate", "--params", str(fitted), "--truth", str(dataset["truth"]),
            "--out", str(out),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert 0.0 <= report["cosine_similarity"] <= 1.0

    def test_auc_on_train_test_split(self, dataset, fitted, tmp_path):
        # use the full file as the training side so the node universe of
        # the fitted parameters is preserved; hold out a slice as test
        h = parse_hyperedge_list(dataset["graph"].read_text())
        test_lines = []
        for i, (nodes, weight) in enumerate(h.edges):
            if i % 10 == 0:
                ids = ",".join(h.node_names[v] for v in nodes)
                test_lines.append(ids if weight == 1 else f"{ids} {weight}")
        test_path = tmp_path / "test.txt"
        test_path.write_text("#D=4\n" + "\n".join(test_lines) + "\n")
        out = tmp_path / "eval.json"
        code = main([
            "evaluate", "--params", str(fitted), "--train", str(dataset["graph"]),
            "--test", str(test_path), "--auc-pairs", "500", "--seed", "3",
            "--out", str(out),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert 0.0 <= report["auc"]["value"] <= 1.0
        assert report["auc"]["num_pairs"] == 500

    def test_membership_report(self, dataset, fitted, tmp_path):
        labels = tmp_path / "labels.csv"
        truth_rows = dataset["truth"].read_text().strip().splitlines()
        labels.write_text("\n".join(truth_rows))
        out = tmp_path / "eval.json"
        code = main([
            "evaluate", "--params", str(fitted), "--labels", str(labels),
            "--out", str(out),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["membership"]["class_labels"] == ["1", "2"]
        assert len(report["membership"]["class_average"]) == 2


class TestBenchmark:
    def test_schema_and_sweep(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main([
            "benchmark", "--out", str(out),
            "--instances", "1", "--num-nodes", "40", "--degree", "8",
            "--num-iterations", "15", "--num-restarts", "1",
            "--num-folds", "5", "--auc-pairs", "100", "--seed", "0",
        ])
        assert code == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0].keys()) == [
            "zeta", "instance", "seed", "selected_partition",
            "delta_auc", "cs_multi", "cs_single",
        ]
        assert len({r["zeta"] for r in rows}) == 11
        summary = json.loads((tmp_path / "bench.summary.json").read_text())
        assert len(summary["summary"]["zetas"]) == 11

    def test_restricted_zetas_and_determinism(self, tmp_path):
        argv = [
            "benchmark", "--out", str(tmp_path / "b.csv"),
            "--zetas", "0.0,1.0", "--instances", "2", "--num-nodes", "40",
            "--degree", "8", "--num-iterations", "15", "--num-restarts", "1",
            "--num-folds", "5", "--auc-pairs", "100", "--seed", "1",
        ]
        assert main(argv) == 0
        first = (tmp_path / "b.csv").read_bytes()
        assert main(argv) == 0
        assert (tmp_path / "b.csv").read_bytes() == first


class TestConfigHandling:
    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"out": "x", "bogus": 1}))
        code = main(["generate", "--config", str(cfg)])
        assert code == 1
        assert "bogus" in capsys.readouterr().err

    def test_missing_required_flag(self, capsys):
        code = main(["generate"])
        assert code == 1
        assert "--out" in capsys.readouterr().err

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "out": str(tmp_path / "from_config"), "num_nodes": 40,
            "target_degree": 8.0, "seed": 9,
        }))
        assert main([
            "generate", "--config", str(cfg), "--out", str(tmp_path / "flag_wins"),
        ]) == 0
        assert (tmp_path / "flag_wins.txt").exists()
        assert not (tmp_path / "from_config.txt").exists()
