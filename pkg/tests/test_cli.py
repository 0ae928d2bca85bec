import csv

import numpy as np
import pytest

from prbm import checkpoint
from prbm.cli import main, parse_config_text, resolve_config, build_parser
from prbm.data import load_bars
from prbm.errors import ConfigError
from prbm.exact import binary_configs, joint_table
from prbm.model import ModelShape, init_model, zeros_model

TINY = ["--set", "n=2", "--set", "m=2", "--set", "p=1", "--set", "T=300", "--set", "p_true=1", "--set", "coupling=3.0"]


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def bars(tmp_path):
    assert run("synth", "--out", tmp_path / "data", "--seed", 1, *TINY) == 0
    return tmp_path / "data" / "bars.csv"


class TestConfig:
    def test_parse(self):
        values = parse_config_text("# comment\nm = 4\nalpha=0.25  # trailing\nshuffle = yes\n\ndata = a.csv\n")
        assert values == {"m": 4, "alpha": 0.25, "shuffle": True, "data": "a.csv"}

    @pytest.mark.parametrize("text", ["bogus = 1", "m = four", "m 4", "shuffle = maybe"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed = 1\nm = 3\nout = from_file\n")
        args = build_parser().parse_args(["--config", str(path), "train", "--set", "m=5", "--set", "seed=2", "--seed", "3"])
        cfg = resolve_config(args)
        assert (cfg.seed, cfg.m, cfg.out) == (3, 5, "from_file")

    def test_global_flags_survive_subcommand(self):
        cfg = resolve_config(build_parser().parse_args(["--seed", "9", "--out", "x", "train"]))
        assert (cfg.seed, cfg.out) == (9, "x")

    @pytest.mark.parametrize("item", ["alpha=1.5", "eta=0", "k=0", "train_fraction=1", "predict_mode=greedy", "p=-1"])
    def test_invalid_values(self, tmp_path, item, capsys):
        assert run("--out", tmp_path, "--set", item, "synth") == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("error: ConfigError:")


class TestSynth:
    def test_full_scale_rows(self, tmp_path):
        assert run("synth", "--out", tmp_path, "--set", "n=100", "--set", "T=1560") == 0
        with open(tmp_path / "bars.csv") as fh:
            assert sum(1 for _ in fh) == 156_000 + 1

    def test_identical_bytes(self, tmp_path):
        run("synth", "--out", tmp_path / "a", "--seed", 5, *TINY)
        run("synth", "--out", tmp_path / "b", "--seed", 5, *TINY)
        assert (tmp_path / "a" / "bars.csv").read_bytes() == (tmp_path / "b" / "bars.csv").read_bytes()

    def test_ingest_round_trip(self, tmp_path, bars):
        assert run("ingest", "--data", bars, "--out", tmp_path / "ing") == 0
        rows = read_csv(tmp_path / "ing" / "directions.csv")
        assert rows[0] == ["timestamp", "S000", "S001"]
        assert len(rows) == 301
        assert load_bars(bars).T == 300

    def test_explicit_output(self, tmp_path):
        assert run("synth", "--output", tmp_path / "x" / "y.csv", "--set", "n=2", "--set", "T=20") == 0
        assert load_bars(tmp_path / "x" / "y.csv").n == 2


class TestTrain:
    def test_zero_epochs_is_initialization(self, tmp_path, bars):
        assert run("train", "--data", bars, "--out", tmp_path, "--seed", 4, *TINY, "--set", "epochs=0") == 0
        init_ss, _ = np.random.SeedSequence(4).spawn(2)
        expected = init_model(ModelShape(2, 2, 1, 0.5), np.random.Generator(np.random.PCG64(init_ss)))
        assert checkpoint.load(tmp_path / "model.prbm") == expected
        assert len(read_csv(tmp_path / "trace.csv")) == 2  # header + epoch 0

    def test_reproducible(self, tmp_path, bars):
        for name in ("a", "b"):
            assert run("train", "--data", bars, "--out", tmp_path / name, *TINY, "--set", "epochs=3", "--set", "eta=0.05") == 0
        assert (tmp_path / "a" / "model.prbm").read_bytes() == (tmp_path / "b" / "model.prbm").read_bytes()
        a, b = (parse_config_text((tmp_path / d / "config.used").read_text()) for d in ("a", "b"))
        assert a.pop("out") != b.pop("out") and a == b

    def test_trace_nll_decreases(self, tmp_path, bars):
        assert run("train", "--data", bars, "--out", tmp_path, *TINY, "--set", "epochs=200", "--set", "eta=0.05", "--seed", 3) == 0
        rows = read_csv(tmp_path / "trace.csv")
        assert rows[0] == ["epoch", "train_proxy", "val_proxy", "train_nll", "val_nll", "seconds"]
        assert len(rows) == 202
        first, last = float(rows[1][3]), float(rows[-1][3])
        assert last <= 0.9 * first

    def test_config_echo(self, tmp_path, bars):
        run("train", "--data", bars, "--out", tmp_path, *TINY, "--set", "epochs=1")
        echoed = parse_config_text((tmp_path / "config.used").read_text())
        assert echoed["m"] == 2 and echoed["n"] == 2 and echoed["data"] == str(bars)

    def test_missing_data(self, tmp_path, capsys):
        assert run("train", "--out", tmp_path) == 1
        assert "no data file" in capsys.readouterr().err

    def test_n_mismatch(self, tmp_path, bars, capsys):
        assert run("train", "--data", bars, "--out", tmp_path, "--set", "n=3") == 1
        assert capsys.readouterr().err.startswith("error: ConfigError:")

    def test_unreadable_data(self, tmp_path, capsys):
        assert run("train", "--data", tmp_path / "nope.csv", "--out", tmp_path) == 1
        assert capsys.readouterr().err.startswith("error: FileNotFoundError:")


def write_predictions(path, cm):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["actual", "predicted", "move"])
        for (a, f), count in cm.items():
            for _ in range(count):
                w.writerow([a, f, 1.0 if a else -1.0])


class TestEval:
    def test_reported_counts_fixture(self, tmp_path):
        preds = tmp_path / "preds.csv"
        write_predictions(preds, {(1, 1): 5756, (1, 0): 6246, (0, 1): 5057, (0, 0): 8341})
        assert run("eval", "--predictions", preds, "--out", tmp_path) == 0
        report = dict(read_csv(tmp_path / "report.csv")[1:])
        assert abs(float(report["loss"]) - 0.445) < 1e-10
        assert (report["wins"], report["losses"], report["decisions"]) == ("14097", "11303", "25400")
        assert abs(float(report["win_loss_ratio"]) - 1.2472) < 5e-5
        assert "1.2472" in (tmp_path / "report.txt").read_text()

    def test_perfect_predictions(self, tmp_path):
        preds = tmp_path / "preds.csv"
        write_predictions(preds, {(1, 1): 3, (0, 0): 4})
        assert run("eval", "--predictions", preds, "--out", tmp_path) == 0
        report = dict(read_csv(tmp_path / "report.csv")[1:])
        assert float(report["loss"]) == 0.0 and report["win_loss_ratio"] == "inf"

    def test_model_reports_identical(self, tmp_path, bars):
        run("train", "--data", bars, "--out", tmp_path, *TINY, "--set", "epochs=2", "--set", "eta=0.05")
        ckpt = tmp_path / "model.prbm"
        for name, seed in (("a", 1), ("b", 2)):
            assert run("eval", "--data", bars, "--checkpoint", ckpt, "--out", tmp_path / name, "--seed", seed) == 0
        for f in ("report.csv", "report.txt", "predictions.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        assert len(read_csv(tmp_path / "a" / "predictions.csv")) == 1 + 2 * (300 - 1 - 239)

    def test_checkpoint_shape_mismatch(self, tmp_path, bars, capsys):
        checkpoint.save(zeros_model(ModelShape(3, 2, 1, 0.5)), tmp_path / "m3.prbm")
        assert run("eval", "--data", bars, "--checkpoint", tmp_path / "m3.prbm", "--out", tmp_path) == 1
        assert capsys.readouterr().err.startswith("error: ConfigError:")

    def test_corrupt_checkpoint(self, tmp_path, bars, capsys):
        (tmp_path / "bad.prbm").write_bytes(b"PRBM1" + b"\0" * 10)
        assert run("eval", "--data", bars, "--checkpoint", tmp_path / "bad.prbm", "--out", tmp_path) == 1
        assert capsys.readouterr().err.startswith("error: FormatError:")


def window_file(path, rows):
    """Bar CSV with one timestamp per row of 0/1 directions (oldest first)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "symbol", "open", "close"])
        for t, row in enumerate(rows):
            for i, d in enumerate(row):
                w.writerow([f"2017-06-05T10:{t:02d}:00", f"S{i:03d}", "10", "11" if d else "9"])
    return path


class TestPredict:
    def test_zero_weights(self, tmp_path):
        checkpoint.save(zeros_model(ModelShape(2, 3, 2, 0.5)), tmp_path / "z.prbm")
        win = window_file(tmp_path / "w.csv", [[1, 0], [0, 1]])
        assert run("predict", "--checkpoint", tmp_path / "z.prbm", "--window", win, "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "prediction.csv")
        assert rows == [["symbol", "probability", "direction"], ["S000", "0.5", "1"], ["S001", "0.5", "1"]]

    def test_mean_field_ignores_seed(self, tmp_path):
        model = init_model(ModelShape(2, 3, 2, 0.5), np.random.default_rng(0), scale=1.0)
        checkpoint.save(model, tmp_path / "m.prbm")
        win = window_file(tmp_path / "w.csv", [[1, 0], [1, 1]])
        for name, seed in (("a", 1), ("b", 2)):
            run("predict", "--checkpoint", tmp_path / "m.prbm", "--window", win, "--out", tmp_path / name, "--seed", seed)
        assert (tmp_path / "a" / "prediction.csv").read_bytes() == (tmp_path / "b" / "prediction.csv").read_bytes()

    def test_planted_matches_oracle(self, tmp_path):
        from test_sampling import planted_model

        model = planted_model()
        checkpoint.save(model, tmp_path / "p.prbm")
        win = window_file(tmp_path / "w.csv", [[1]])
        assert run("predict", "--checkpoint", tmp_path / "p.prbm", "--window", win, "--out", tmp_path) == 0
        prob = float(read_csv(tmp_path / "prediction.csv")[1][1])
        P = joint_table(model).sum(axis=1)
        V = binary_configs(2, 1)
        on = V[:, 1, 0] == 1
        exact = P[on & (V[:, 0, 0] == 1)].sum() / P[on].sum()
        assert abs(prob - exact) < 0.01

    def test_wrong_window_length(self, tmp_path, capsys):
        checkpoint.save(zeros_model(ModelShape(2, 3, 2, 0.5)), tmp_path / "z.prbm")
        win = window_file(tmp_path / "w.csv", [[1, 0]])
        assert run("predict", "--checkpoint", tmp_path / "z.prbm", "--window", win, "--out", tmp_path) == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ConfigError:") and "exactly p=2" in err


class TestCompare:
    def test_layout(self, tmp_path, bars):
        argv = ["compare", "--data", bars, "--out", tmp_path, *TINY, "--set", "epochs=2", "--set", "iterations=2"]
        assert run(*argv) == 0
        rows = read_csv(tmp_path / "compare.csv")
        assert rows[0] == ["Model", "1", "2", "Mean", "Std"]
        assert [r[0] for r in rows[1:]] == ["p-RBM", "VAR(1)", "RW"]
        # the baselines are deterministic
        assert float(rows[2][-1]) == 0.0 and float(rows[3][-1]) == 0.0

    def test_single_iteration(self, tmp_path, bars):
        argv = ["compare", "--data", bars, "--out", tmp_path, *TINY, "--set", "epochs=1", "--set", "iterations=1"]
        assert run(*argv) == 0
        assert all(float(r[-1]) == 0.0 for r in read_csv(tmp_path / "compare.csv")[1:])

    def test_structured_data_beats_rw(self, tmp_path, bars):
        argv = ["compare", "--data", bars, "--out", tmp_path, *TINY, "--set", "epochs=100", "--set", "eta=0.05", "--set", "iterations=1"]
        assert run(*argv) == 0
        rows = {r[0]: float(r[-2]) for r in read_csv(tmp_path / "compare.csv")[1:]}
        assert rows["p-RBM"] < rows["RW"]


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "prbm", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "synth" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "prbm", "predict", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr.count("\n") == 1
