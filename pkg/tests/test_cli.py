import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from ergodiag import Family, ProcessConfig, RngSeed, sample_path
from ergodiag.cli import main


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)

SPIKE_DOC = {"process": {"family": "SPARSE_SPIKES", "params": {}}}
AR1_DOC = {"process": {"family": "AR1", "params": {"phi": 0.5, "gamma0": 1.0}}}


def load_report_schema() -> dict:
    ref = resources.files("ergodiag") / "schemas" / "report.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


class TestSimulate:
    def run_simulate(self, tmp_path, doc, out_name="paths.csv", **kw):
        args = {"seed": "42", "n": "5", "replicates": "2", **kw}
        out = tmp_path / out_name
        code = main(
            [
                "simulate",
                "--config", write_config(tmp_path, doc),
                "--out", str(out),
                "--seed", args["seed"],
                "--n", args["n"],
                "--replicates", args["replicates"],
            ]
        )
        return code, out

    def test_row_count_and_support(self, tmp_path):
        code, out = self.run_simulate(tmp_path, SPIKE_DOC)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,replicate,x"
        assert len(lines) == 1 + 5 * 2
        for line in lines[1:]:
            t, rep, x = line.split(",")
            magnitude = float(t) ** 1.5
            assert float(x) in (0.0, magnitude, -magnitude)
            assert rep in ("0", "1")

    def test_replicate_major_t_ascending_order(self, tmp_path):
        code, out = self.run_simulate(tmp_path, SPIKE_DOC)
        assert code == 0
        keys = [tuple(map(int, line.split(",")[:2][::-1])) for line in out.read_text().splitlines()[1:]]
        assert keys == sorted(keys)

    def test_byte_identical_reruns(self, tmp_path):
        _, first = self.run_simulate(tmp_path, SPIKE_DOC, out_name="a.csv")
        _, second = self.run_simulate(tmp_path, SPIKE_DOC, out_name="b.csv")
        assert first.read_bytes() == second.read_bytes()

    def test_values_round_trip_exactly(self, tmp_path):
        config = ProcessConfig(Family.AR1, {"phi": 0.5, "gamma0": 1.0})
        code, out = self.run_simulate(
            tmp_path, AR1_DOC, n="50", replicates="1", seed="7"
        )
        assert code == 0
        expected = sample_path(config, 50, RngSeed(7, 0)).values
        parsed = [float(line.split(",")[2]) for line in out.read_text().splitlines()[1:]]
        assert np.array_equal(np.asarray(parsed), expected)

    def test_invalid_phi_exits_2_naming_field(self, tmp_path, capsys):
        doc = {"process": {"family": "AR1", "params": {"phi": 1.5, "gamma0": 1.0}}}
        code, _ = self.run_simulate(tmp_path, doc)
        assert code == 2
        assert "phi" in capsys.readouterr().err

    def test_unknown_top_level_key_exits_2(self, tmp_path, capsys):
        doc = {**SPIKE_DOC, "simulate": {}}
        code, _ = self.run_simulate(tmp_path, doc)
        assert code == 2
        assert "simulate" in capsys.readouterr().err

    def test_missing_config_file_exits_3(self, tmp_path):
        code = main(
            [
                "simulate",
                "--config", str(tmp_path / "nope.json"),
                "--out", str(tmp_path / "o.csv"),
                "--seed", "1",
                "--n", "5",
                "--replicates", "1",
            ]
        )
        assert code == 3


def write_path_csv(tmp_path, values, name="path.csv", header="x", with_t=False):
    path = tmp_path / name
    lines = [header]
    for i, v in enumerate(values, start=1):
        lines.append(f"{i},{float(v)!r}" if with_t else repr(float(v)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def run_analyze(capsys, input_path, *extra):
    code = main(["analyze", "--input", input_path, *extra])
    captured = capsys.readouterr()
    return code, captured


class TestAnalyze:
    def test_iid_normal_diagnostics(self, tmp_path, capsys):
        rng = np.random.default_rng(1001)
        n = 100_000
        input_path = write_path_csv(tmp_path, rng.standard_normal(n))
        code, captured = run_analyze(capsys, input_path)
        assert code == 0
        result = json.loads(captured.out)
        assert result["n"] == n
        assert 0.9 <= result["tau_hat"] <= 1.1
        assert 0.9 * n <= result["ess"] <= 1.1 * n
        assert not result["window_saturated"]
        assert set(result["chebyshev"]) == {"0.1", "0.05", "0.01"}
        assert "gap" not in result

    def test_ar1_effective_sample_size_near_n_over_three(self, tmp_path, capsys):
        config = ProcessConfig(Family.AR1, {"phi": 0.5, "gamma0": 1.0})
        n = 100_000
        values = sample_path(config, n, RngSeed(2002, 0)).values
        input_path = write_path_csv(tmp_path, values, header="t,x", with_t=True)
        code, captured = run_analyze(capsys, input_path)
        assert code == 0
        result = json.loads(captured.out)
        assert result["ess"] == pytest.approx(n / 3, rel=0.10)
        assert result["tau_hat"] == pytest.approx(3.0, rel=0.10)

    def test_target_mean_reports_gap(self, tmp_path, capsys):
        values = np.linspace(0.0, 1.0, 20)
        input_path = write_path_csv(tmp_path, values)
        code, captured = run_analyze(capsys, input_path, "--target-mean", "0.75")
        assert code == 0
        result = json.loads(captured.out)
        assert result["gap"] == pytest.approx(abs(values.mean() - 0.75), rel=1e-12)

    def test_constant_series_exits_2_degenerate(self, tmp_path, capsys):
        input_path = write_path_csv(tmp_path, [2.5] * 40)
        code, captured = run_analyze(capsys, input_path)
        assert code == 2
        assert "degenerate series" in captured.err

    def test_short_series_exits_2_insufficient(self, tmp_path, capsys):
        input_path = write_path_csv(tmp_path, [1.0, 2.0, 3.0])
        code, captured = run_analyze(capsys, input_path)
        assert code == 2
        assert "insufficient data" in captured.err

    def test_unsupported_header_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n", encoding="utf-8")
        code, captured = run_analyze(capsys, str(bad))
        assert code == 2
        assert "header" in captured.err

    def test_accepts_simulate_output_with_one_replicate(self, tmp_path, capsys):
        config_path = write_config(tmp_path, AR1_DOC)
        out = tmp_path / "sim.csv"
        assert (
            main(
                [
                    "simulate", "--config", config_path, "--out", str(out),
                    "--seed", "5", "--n", "200", "--replicates", "1",
                ]
            )
            == 0
        )
        code, captured = run_analyze(capsys, str(out))
        assert code == 0
        result = json.loads(captured.out)
        expected = sample_path(
            ProcessConfig(Family.AR1, {"phi": 0.5, "gamma0": 1.0}), 200, RngSeed(5, 0)
        ).values
        assert result["mean"] == pytest.approx(expected.mean(), rel=1e-15)

    def test_rejects_simulate_output_with_many_replicates(self, tmp_path, capsys):
        config_path = write_config(tmp_path, AR1_DOC)
        out = tmp_path / "sim.csv"
        main(
            [
                "simulate", "--config", config_path, "--out", str(out),
                "--seed", "5", "--n", "50", "--replicates", "3",
            ]
        )
        code, captured = run_analyze(capsys, str(out))
        assert code == 2
        assert "replicate" in captured.err


EXPERIMENT_DOC = {
    "process": {"family": "SPARSE_SPIKES", "params": {}},
    "experiment": {
        "base_seed": 99,
        "n_grid": [100, 1000],
        "replicates": 2000,
        "epsilons": [0.1, 0.05],
        "checks": ["VARIANCE_IDENTITY", "WLLN", "FOURTH_MOMENT"],
    },
}


class TestExperiment:
    def run_experiment_cmd(self, tmp_path, doc, out_name="out"):
        out_dir = tmp_path / out_name
        code = main(
            [
                "experiment",
                "--config", write_config(tmp_path, doc, name=f"{out_name}.json"),
                "--out-dir", str(out_dir),
            ]
        )
        return code, out_dir

    def test_spike_experiment_passes_and_writes_outputs(self, tmp_path, capsys):
        code, out_dir = self.run_experiment_cmd(tmp_path, EXPERIMENT_DOC)
        assert code == 0
        stdout = capsys.readouterr().out
        assert "VARIANCE_IDENTITY: PASS" in stdout
        assert "FOURTH_MOMENT: PASS" in stdout

        report = json.loads((out_dir / "report.json").read_text())
        jsonschema.validate(report, load_report_schema())
        assert report["verdicts"]["WLLN"]["status"] == "PASS"

        curves = (out_dir / "curves.csv").read_text().splitlines()
        assert curves[0] == "n,exact_var_an,empirical_mse,mc_se,eps,empirical_tail,chebyshev_bound"
        assert len(curves) == 1 + 2 * 2  # |n_grid| x |epsilons|

    def test_failing_check_exits_1(self, tmp_path):
        doc = {
            "process": {"family": "COMMON_SHOCK", "params": {"sigma_z": 1.0, "sigma_eps": 1.0}},
            "experiment": {
                "base_seed": 4,
                "n_grid": [10, 100, 1000],
                "replicates": 1000,
                "epsilons": [0.2],
                "checks": ["L2_CONVERGENCE"],
            },
        }
        code, out_dir = self.run_experiment_cmd(tmp_path, doc)
        assert code == 1
        report = json.loads((out_dir / "report.json").read_text())
        assert report["verdicts"]["L2_CONVERGENCE"]["status"] == "FAIL"

    def test_same_process_with_suitable_checks_exits_0(self, tmp_path):
        doc = {
            "process": {"family": "COMMON_SHOCK", "params": {"sigma_z": 1.0, "sigma_eps": 1.0}},
            "experiment": {
                "base_seed": 4,
                "n_grid": [10, 100, 1000],
                "replicates": 1000,
                "epsilons": [0.2],
                "checks": ["NONCONVERGENCE"],
            },
        }
        code, _ = self.run_experiment_cmd(tmp_path, doc)
        assert code == 0

    def test_missing_base_seed_exits_2(self, tmp_path, capsys):
        doc = {**SPIKE_DOC, "experiment": {"n_grid": [10, 100], "replicates": 200}}
        code, _ = self.run_experiment_cmd(tmp_path, doc)
        assert code == 2
        assert "base_seed" in capsys.readouterr().err

    def test_unknown_experiment_key_exits_2(self, tmp_path, capsys):
        doc = {
            **SPIKE_DOC,
            "experiment": {"base_seed": 1, "grid": [10, 100]},
        }
        code, _ = self.run_experiment_cmd(tmp_path, doc)
        assert code == 2
        assert "grid" in capsys.readouterr().err

    def test_unknown_check_name_exits_2(self, tmp_path, capsys):
        doc = {
            **SPIKE_DOC,
            "experiment": {"base_seed": 1, "checks": ["STATIONARITY"]},
        }
        code, _ = self.run_experiment_cmd(tmp_path, doc)
        assert code == 2
        assert "STATIONARITY" in capsys.readouterr().err

    def test_byte_identical_across_runs_and_threads(self, tmp_path, monkeypatch):
        doc = {
            **AR1_DOC,
            "experiment": {
                "base_seed": 55,
                "n_grid": [10, 100],
                "replicates": 500,
                "epsilons": [0.2],
                "checks": ["VARIANCE_IDENTITY"],
            },
        }
        outputs = []
        for name, threads in [("r1", "1"), ("r2", "1"), ("r4", "4")]:
            monkeypatch.setenv("ERGODIAG_THREADS", threads)
            code, out_dir = self.run_experiment_cmd(tmp_path, doc, out_name=name)
            assert code == 0
            outputs.append(
                (
                    (out_dir / "report.json").read_bytes(),
                    (out_dir / "curves.csv").read_bytes(),
                )
            )
        assert outputs[0] == outputs[1] == outputs[2]

    def test_invalid_thread_env_exits_2(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("ERGODIAG_THREADS", "many")
        code, _ = self.run_experiment_cmd(tmp_path, EXPERIMENT_DOC, out_name="bad")
        assert code == 2
        assert "ERGODIAG_THREADS" in capsys.readouterr().err
