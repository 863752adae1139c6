import json
from pathlib import Path

import numpy as np
import pytest

from tvnet.cli import cli_main


def run(argv):
    return cli_main(argv)


def read_json(path):
    return json.loads(Path(path).read_text())


@pytest.fixture()
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    code = run([
        "simulate", "--p", "6", "--n", "30", "--k", "2", "--scheme", "smooth",
        "--seed", "7", "--edges", "5", "--churn", "2", "--anchors", "3",
        "--burn-in", "100", "--output-dir", str(out),
    ])
    assert code == 0
    return out


class TestSimulate:
    def test_deterministic_outputs(self, tmp_path, sim_dir):
        out2 = tmp_path / "sim2"
        code = run([
            "simulate", "--p", "6", "--n", "30", "--k", "2", "--scheme", "smooth",
            "--seed", "7", "--edges", "5", "--churn", "2", "--anchors", "3",
            "--burn-in", "100", "--output-dir", str(out2),
        ])
        assert code == 0
        assert (sim_dir / "data.csv").read_bytes() == (out2 / "data.csv").read_bytes()
        assert (sim_dir / "truth_edges.jsonl").read_bytes() == (out2 / "truth_edges.jsonl").read_bytes()
        # manifests agree on everything except the wall-clock stamp
        a, b = read_json(sim_dir / "manifest.json"), read_json(out2 / "manifest.json")
        a.pop("created_utc"), b.pop("created_utc")
        a.pop("argv"), b.pop("argv")
        assert a == b

    def test_different_seed_changes_data(self, tmp_path, sim_dir):
        out2 = tmp_path / "sim3"
        run([
            "simulate", "--p", "6", "--n", "30", "--k", "2", "--scheme", "smooth",
            "--seed", "8", "--edges", "5", "--churn", "2", "--anchors", "3",
            "--burn-in", "100", "--output-dir", str(out2),
        ])
        assert (sim_dir / "data.csv").read_bytes() != (out2 / "data.csv").read_bytes()


class TestEstimate:
    def test_smooth_default_bandwidth_recorded(self, tmp_path, sim_dir):
        out = tmp_path / "est"
        code = run([
            "estimate", "--input", str(sim_dir / "data.csv"), "--has-header",
            "--time-column", "t", "--method", "smooth", "--lambda1", "0.15",
            "--symmetrize", "max", "--output-dir", str(out),
        ])
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["params"]["bandwidth_from_median_heuristic"] is True
        from tvnet.selection import bandwidth_median_heuristic

        times = np.arange(1, 31) / 30
        assert manifest["params"]["bandwidth"] == pytest.approx(
            bandwidth_median_heuristic(times)
        )
        assert (out / "edges.jsonl").exists() and (out / "paths.tsv").exists()

    def test_thread_count_invariance(self, tmp_path, sim_dir):
        outs = []
        for threads in ("1", "3"):
            out = tmp_path / f"est{threads}"
            code = run([
                "estimate", "--input", str(sim_dir / "data.csv"), "--has-header",
                "--time-column", "t", "--method", "static", "--lambda1", "0.1",
                "--threads", threads, "--output-dir", str(out),
            ])
            assert code == 0
            outs.append(out)
        assert (outs[0] / "paths.tsv").read_bytes() == (outs[1] / "paths.tsv").read_bytes()
        assert (outs[0] / "edges.jsonl").read_bytes() == (outs[1] / "edges.jsonl").read_bytes()

    def test_bandwidth_invalid_for_tv(self, sim_dir, tmp_path):
        code = run([
            "estimate", "--input", str(sim_dir / "data.csv"), "--has-header",
            "--time-column", "t", "--method", "tv", "--bandwidth", "0.2",
            "--output-dir", str(tmp_path / "x"),
        ])
        assert code == 2

    def test_lambda_tv_invalid_for_smooth(self, sim_dir, tmp_path):
        code = run([
            "estimate", "--input", str(sim_dir / "data.csv"), "--has-header",
            "--time-column", "t", "--method", "smooth", "--lambda-tv", "0.2",
            "--output-dir", str(tmp_path / "x"),
        ])
        assert code == 2

    def test_unknown_flag_exits_two(self, sim_dir, tmp_path):
        code = run(["estimate", "--frobnicate", "1"])
        assert code == 2

    def test_missing_input_is_io_error(self, tmp_path, capsys):
        code = run([
            "estimate", "--input", str(tmp_path / "absent.csv"), "--method", "static",
            "--output-dir", str(tmp_path / "x"),
        ])
        assert code == 1
        assert "error[io]" in capsys.readouterr().err


class TestEvaluate:
    def test_identical_files_give_perfect_scores(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "ev"
        code = run([
            "evaluate", str(sim_dir / "truth_edges.jsonl"), str(sim_dir / "truth_edges.jsonl"),
            "--output-dir", str(out),
        ])
        assert code == 0
        printed = capsys.readouterr().out
        assert "precision\t1.000000" in printed
        assert "f1\t1.000000" in printed
        table = (out / "metrics.tsv").read_text()
        assert "f1\t1\n" in table

    def test_full_pipeline_estimate_then_evaluate(self, sim_dir, tmp_path, capsys):
        est = tmp_path / "est"
        assert run([
            "estimate", "--input", str(sim_dir / "data.csv"), "--has-header",
            "--time-column", "t", "--method", "smooth", "--lambda1", "0.1",
            "--bandwidth", "0.4", "--output-dir", str(est),
        ]) == 0
        assert run([
            "evaluate", str(sim_dir / "truth_edges.jsonl"), str(est / "edges.jsonl"),
        ]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        scores = {ln.split("\t")[0]: float(ln.split("\t")[1]) for ln in lines}
        assert set(scores) == {"precision", "recall", "f1"}
        assert all(0 <= v <= 1 for v in scores.values())


class TestGridSearch:
    def test_grid_search_writes_bic_table(self, sim_dir, tmp_path):
        out = tmp_path / "gs"
        code = run([
            "grid-search", "--input", str(sim_dir / "data.csv"), "--has-header",
            "--time-column", "t", "--method", "static",
            "--lambda1-grid", "0.05,0.1,0.2", "--output-dir", str(out),
        ])
        assert code == 0
        bic = (out / "bic.tsv").read_text().strip().splitlines()
        assert bic[0] == "lambda1\tbic_avg\tvalid\tselected"
        assert len(bic) == 4
        assert sum(ln.endswith("\t1") for ln in bic[1:]) == 1
        manifest = read_json(out / "manifest.json")
        assert manifest["params"]["selected"]["lambda1"] in (0.05, 0.1, 0.2)

    def test_bad_grid_value_exits_two(self, sim_dir, tmp_path):
        code = run([
            "grid-search", "--input", str(sim_dir / "data.csv"), "--has-header",
            "--time-column", "t", "--method", "static",
            "--lambda1-grid", "0.05,oops", "--output-dir", str(tmp_path / "x"),
        ])
        assert code == 2
