import csv

import pytest

from elasticsgd.errors import ConfigError, InputError
from elasticsgd.fabric.costmodel import CostModel
from elasticsgd.harness import load_experiment, predict_speedup, run_experiments
from elasticsgd.harness.cli import main
from elasticsgd.harness.reports import compare_report, load_record_from_csv
from elasticsgd.trainers import RunRecord

CONFIG = """
[experiment]
output_dir = {out}
cost_model = fdr
compute_seconds = 0.0002

[dataset]
kind = synthetic
classes = 3
dim = 8
per_class = 40
test_per_class = 20
seed = 0

[model]
layers = 8 6 3
activation = relu
seed = 1

[trainer:sync3]
method = sync-easgd3
iterations = 30
batch_size = 8
eta = 0.1
rho = 0.3
workers = 4
eval_every = 10
seed = 2

[trainer:baseline]
method = original-easgd
iterations = 60
batch_size = 8
eta = 0.1
rho = 0.3
workers = 4
eval_every = 20
seed = 2
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG.format(out=tmp_path / "out"))
    return str(path)


class TestRunExperiments:
    def test_two_trainers_emit_four_csvs_and_summary(self, config_path, tmp_path):
        cfg = load_experiment(config_path)
        results = run_experiments(cfg)
        out = tmp_path / "out"
        csvs = sorted(p.name for p in out.glob("*.csv"))
        assert csvs == ["baseline_breakdown.csv", "baseline_curve.csv",
                        "sync3_breakdown.csv", "sync3_curve.csv"]
        assert (out / "summary.txt").exists()
        assert len(results) == 2

    def test_rerun_byte_identical(self, config_path, tmp_path):
        cfg = load_experiment(config_path)
        run_experiments(cfg)
        first = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.csv")}
        run_experiments(load_experiment(config_path))
        second = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.csv")}
        assert first == second

    def test_breakdown_comm_ratio_consistent(self, config_path, tmp_path):
        run_experiments(load_experiment(config_path))
        with open(tmp_path / "out" / "sync3_breakdown.csv", newline="") as fh:
            row = next(csv.DictReader(fh))
        comm = sum(float(row[c]) for c in ("peer_param", "data_stage", "master_param"))
        assert float(row["comm_ratio"]) == pytest.approx(
            comm / float(row["total_s"]), abs=1e-9)

    def test_curve_csv_roundtrips(self, config_path, tmp_path):
        results = dict(run_experiments(load_experiment(config_path)))
        label, rec = "sync3", results["sync3"]
        _, loaded = load_record_from_csv(str(tmp_path / "out" / "sync3_curve.csv"))
        assert loaded.times == rec.times
        assert loaded.iterations == rec.iterations
        assert loaded.train_loss == rec.train_loss
        assert loaded.workload == rec.workload

    def test_output_dir_env_override(self, config_path, tmp_path, monkeypatch):
        override = tmp_path / "elsewhere"
        monkeypatch.setenv("ELASTICSGD_OUTPUT_DIR", str(override))
        cfg = load_experiment(config_path)
        assert cfg.output_dir == override

    def test_parallel_runs_match_sequential(self, config_path):
        cfg = load_experiment(config_path)
        seq = dict(run_experiments(cfg))
        par = dict(run_experiments(load_experiment(config_path), parallel=True))
        assert {n: r.weights_digest for n, r in seq.items()} == \
               {n: r.weights_digest for n, r in par.items()}

    def test_harness_never_alters_trainer_math(self, config_path):
        # the digest reported by the harness equals a direct library call
        from elasticsgd.trainers import run_trainer

        cfg = load_experiment(config_path)
        harness_digests = {n: r.weights_digest for n, r in run_experiments(cfg)}
        problem = cfg.problem()
        for name, trainer_cfg in cfg.trainers:
            direct = run_trainer(trainer_cfg, problem, cfg.cost_model)
            assert direct.weights_digest == harness_digests[name]


class TestConfigErrors:
    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_experiment("/nonexistent/exp.ini")

    def test_missing_key_names_section_and_key(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[experiment]\n[dataset]\nkind = synthetic\n"
                        "[model]\nlayers = 4 2\n[trainer:x]\nmethod = async-sgd\n")
        with pytest.raises(ConfigError, match="classes"):
            load_experiment(str(path))

    def test_bad_value_names_key(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(CONFIG.format(out=tmp_path).replace(
            "iterations = 30", "iterations = thirty"))
        with pytest.raises(ConfigError, match="iterations"):
            load_experiment(str(path))

    def test_layer_dataset_mismatch(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(CONFIG.format(out=tmp_path).replace(
            "layers = 8 6 3", "layers = 5 6 3"))
        with pytest.raises(ConfigError, match="layers"):
            load_experiment(str(path))


class TestPredictSpeedup:
    def test_p8_ratio(self):
        pred = predict_speedup(8, 10**6, CostModel.preset("fdr"))
        assert pred.ratio == pytest.approx(8 / 3, rel=1e-12)

    def test_p2_ratio(self):
        pred = predict_speedup(2, 1000, CostModel.preset("qdr"))
        assert pred.ratio == pytest.approx(2.0, rel=1e-12)

    def test_alexnet_scale(self):
        # 249 MB model over 4096 workers: 4096 messages vs 12 tree rounds
        pred = predict_speedup(4096, 249 * 2**20, CostModel.preset("fdr"))
        assert pred.ratio == pytest.approx(4096 / 12, rel=1e-12)

    def test_needs_two_workers(self):
        with pytest.raises(InputError):
            predict_speedup(1, 100, CostModel.preset("fdr"))


def fake_record(label, times, accs, workload="w1"):
    return (label, RunRecord(
        method=label, workload=workload, times=list(times),
        iterations=list(range(1, len(times) + 1)),
        train_loss=[0.0] * len(times), test_accuracy=list(accs),
        total_seconds=times[-1],
    ))


class TestCompareReport:
    def test_identical_records_identical_target_time(self):
        a = fake_record("a", [1.0, 2.0], [0.5, 0.99])
        b = fake_record("b", [1.0, 2.0], [0.5, 0.99])
        rep = compare_report([a, b], 0.9)
        assert rep.rows[0].time_to_target == rep.rows[1].time_to_target

    def test_dominating_record_listed_first(self):
        slow = fake_record("slow", [1.0, 4.0], [0.2, 0.95])
        fast = fake_record("fast", [1.0, 2.0], [0.8, 0.95])
        rep = compare_report([slow, fast], 0.9)
        assert rep.rows[0].label == "fast"

    def test_time_interpolated_between_eval_points(self):
        rec = fake_record("x", [0.0, 10.0], [0.0, 1.0])
        other = fake_record("y", [0.0, 10.0], [0.0, 0.5])
        rep = compare_report([rec, other], 0.5)
        row = next(r for r in rep.rows if r.label == "x")
        assert row.time_to_target == pytest.approx(5.0)

    def test_log10_error_transform(self):
        rec = fake_record("x", [1.0], [0.99])
        other = fake_record("y", [1.0], [0.9])
        rep = compare_report([rec, other], 0.5)
        assert rep.log10_error_series["x"][0][1] == pytest.approx(-2.0)

    def test_workload_mismatch_rejected(self):
        a = fake_record("a", [1.0], [0.9], workload="w1")
        b = fake_record("b", [1.0], [0.9], workload="w2")
        with pytest.raises(InputError, match="workload"):
            compare_report([a, b], 0.5)

    def test_ordering_violation_flagged(self):
        first = fake_record("first", [1.0, 8.0], [0.0, 0.99])
        second = fake_record("second", [1.0, 2.0], [0.0, 0.99])
        rep = compare_report([first, second], 0.9, expected_order=["first", "second"])
        assert rep.ordering_violations


class TestCli:
    def test_run_exit_codes(self, config_path, tmp_path, capsys):
        assert main(["run", config_path]) == 0
        out = capsys.readouterr().out
        assert "sync3" in out and "baseline" in out

    def test_run_config_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[experiment]\n")
        assert main(["run", str(bad)]) == 2

    def test_predict_cli(self, capsys):
        assert main(["predict", "--workers", "8", "--model-bytes", "1000000",
                     "--net", "fdr"]) == 0
        assert "2.66" in capsys.readouterr().out

    def test_compare_cli(self, config_path, tmp_path, capsys):
        main(["run", config_path])
        out = tmp_path / "out"
        code = main(["compare", str(out / "sync3_curve.csv"),
                     str(out / "baseline_curve.csv"), "--target-acc", "0.5"])
        assert code == 0
        assert "time to reach" in capsys.readouterr().out
