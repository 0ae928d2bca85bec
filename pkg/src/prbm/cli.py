"""Command-line workflows: synth, ingest, train, eval, predict, compare.

Settings come from a flat ``key = value`` file given with ``--config``;
``--set key=value`` and the dedicated flags (``--seed``, ``--out``, ``--data``,
...) override it, in that order of increasing precedence. Every command
writes its artifacts to the output directory and exits non-zero with a
single ``error: <Kind>: <reason>`` line on failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import checkpoint
from .data import load_bars, directions, synth_markov, write_bars
from .errors import ConfigError, PRBMError
from .evaluation import compare_models, evaluate
from .experiments import make_split, prbm_predictor, rw_predictor, var1_predictor
from .model import ModelShape, init_model
from .sampling import PREDICT_MODES, predict_direction
from .training import TrainConfig, train


@dataclass(frozen=True)
class RunConfig:
    data: str = ""
    n: int = 0
    m: int = 1000
    p: int = 30
    alpha: float = 0.5
    eta: float = 0.001
    k: int = 1
    epochs: int = 10
    seed: int = 0
    train_fraction: float = 0.8
    minibatch: int = 1
    shuffle: bool = False
    predict_mode: str = "mean-field"
    k_pred: int = 20
    out: str = "out"
    iterations: int = 5
    notional: float = 1.0
    # synthetic data
    T: int = 1560
    p_true: int = 2
    coupling: float = 1.0
    density: float = 0.2

    def validate(self) -> "RunConfig":
        try:
            if self.n:
                ModelShape(self.n, self.m, self.p, self.alpha)
            else:
                ModelShape(1, self.m, self.p, self.alpha)
            TrainConfig(self.eta, self.k, self.epochs, self.seed, self.minibatch, self.shuffle)
        except PRBMError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.predict_mode not in PREDICT_MODES:
            raise ConfigError(f"predict_mode must be one of {PREDICT_MODES}")
        if self.k_pred < 1 or self.iterations < 1:
            raise ConfigError("k_pred and iterations must be >= 1")
        if self.n < 0 or self.T < 2 or self.p_true < 1:
            raise ConfigError("n must be >= 0, T >= 2 and p_true >= 1")
        return self

    def dump(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _coerce(key: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    kind = types[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, raw = line.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), raw)
    return values


def resolve_config(args) -> RunConfig:
    values = {}
    config = getattr(args, "config", None)
    if config:
        try:
            values.update(parse_config_text(Path(config).read_text(encoding="utf-8")))
        except OSError as exc:
            raise ConfigError(f"cannot read config {config}: {exc.strerror}") from None
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), raw)
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        values["out"] = args.out
    if getattr(args, "data", None):
        values["data"] = args.data
    return RunConfig(**values).validate()


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seeds(cfg: RunConfig, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(cfg.seed).spawn(count)


def _load_dataset(cfg: RunConfig):
    if not cfg.data:
        raise ConfigError("no data file given (set data = PATH or pass --data)")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        bars = load_bars(cfg.data)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    data = directions(bars)
    if cfg.n and cfg.n != data.n:
        raise ConfigError(f"config n={cfg.n} but {cfg.data} has {data.n} stocks")
    return data


def cmd_synth(cfg: RunConfig, args) -> Path:
    n = cfg.n or 100
    _, bars = synth_markov(n, cfg.p_true, cfg.T, cfg.coupling, cfg.seed, density=cfg.density)
    path = Path(args.output) if args.output else _outdir(cfg) / "bars.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_bars(bars, path)
    print(f"wrote {path} ({bars.T} bars x {bars.n} stocks)")
    return path


def cmd_ingest(cfg: RunConfig, args) -> None:
    data = _load_dataset(cfg)
    out = _outdir(cfg)
    for name, arr, fmt in (("directions.csv", data.directions, "{:d}"), ("moves.csv", data.moves, "{!r}")):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp", *data.symbols])
            for ts, row in zip(data.timestamps, arr):
                w.writerow([ts, *(fmt.format(x.item()) for x in row)])
    ups = float(data.directions.mean())
    print(f"T={data.T} n={data.n} up_fraction={ups:.4f}; wrote {out / 'directions.csv'}")


def cmd_train(cfg: RunConfig, args) -> Path:
    data = _load_dataset(cfg)
    split = make_split(data, cfg.p, cfg.train_fraction)
    init_ss, train_ss = _seeds(cfg, 2)
    shape = ModelShape(data.n, cfg.m, cfg.p, cfg.alpha)
    model = init_model(shape, np.random.Generator(np.random.PCG64(init_ss)))
    tcfg = TrainConfig(
        eta=cfg.eta,
        k=cfg.k,
        epochs=cfg.epochs,
        seed=int(train_ss.generate_state(1, np.uint64)[0]),
        minibatch=cfg.minibatch,
        shuffle=cfg.shuffle,
    )
    model, trace = train(model, split.train_windows, tcfg, validation=split.val_windows)
    out = _outdir(cfg)
    ckpt = Path(args.checkpoint) if args.checkpoint else out / "model.prbm"
    checkpoint.save(model, ckpt)
    trace.to_csv(out / "trace.csv")
    (out / "config.used").write_text(replace(cfg, n=data.n).dump(), encoding="utf-8")
    print(f"wrote {ckpt} after {cfg.epochs} epochs on {len(split.train_windows)} windows")
    return ckpt


def _read_predictions(path):
    actual, predicted, moves = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"actual", "predicted", "move"}
        if not reader.fieldnames or not need <= set(reader.fieldnames):
            raise ConfigError(f"{path}: predictions need columns {sorted(need)}")
        for row in reader:
            try:
                actual.append(int(row["actual"]))
                predicted.append(int(row["predicted"]))
                moves.append(float(row["move"]))
            except ValueError:
                raise ConfigError(f"{path}:{reader.line_num}: bad prediction row") from None
    return np.array(actual), np.array(predicted), np.array(moves)


def cmd_eval(cfg: RunConfig, args):
    out = _outdir(cfg)
    if args.predictions:
        actual, predicted, moves = _read_predictions(args.predictions)
    else:
        model = checkpoint.load(_checkpoint_path(cfg, args))
        data = _load_dataset(cfg)
        if model.shape.n != data.n:
            raise ConfigError(f"checkpoint has n={model.shape.n} but data has {data.n} stocks")
        split = make_split(data, model.shape.p, cfg.train_fraction)
        (pred_ss,) = _seeds(cfg, 1)
        pred = predict_direction(
            model,
            split.val_windows[:, 1:, :],
            cfg.k_pred,
            cfg.predict_mode,
            np.random.Generator(np.random.PCG64(pred_ss)),
        )
        actual, predicted, moves = split.val_actual, pred.direction, split.val_moves
        with open(out / "predictions.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp", "symbol", "actual", "predicted", "probability", "move"])
            for r, row in enumerate(split.val_rows):
                for i, sym in enumerate(data.symbols):
                    w.writerow([
                        data.timestamps[row], sym, int(actual[r, i]), int(predicted[r, i]),
                        repr(float(pred.probs[r, i])), repr(float(moves[r, i])),
                    ])
    report = evaluate(actual, predicted, moves, notional=cfg.notional)
    report.to_csv(out / "report.csv")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text(), end="")
    return report


def _checkpoint_path(cfg: RunConfig, args) -> Path:
    return Path(args.checkpoint) if args.checkpoint else Path(cfg.out) / "model.prbm"


def cmd_predict(cfg: RunConfig, args) -> Path:
    model = checkpoint.load(_checkpoint_path(cfg, args))
    if not args.window:
        raise ConfigError("predict needs --window FILE")
    bars = load_bars(args.window)
    past = directions(bars)
    s = model.shape
    if past.n != s.n:
        raise ConfigError(f"window has {past.n} stocks, checkpoint expects {s.n}")
    if past.T != s.p:
        raise ConfigError(f"window has {past.T} rows, checkpoint needs exactly p={s.p}")
    lagged = past.directions[::-1].astype(np.float64)  # row 0 = most recent = lag 1
    (pred_ss,) = _seeds(cfg, 1)
    pred = predict_direction(model, lagged, cfg.k_pred, cfg.predict_mode, np.random.Generator(np.random.PCG64(pred_ss)))
    path = _outdir(cfg) / "prediction.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["symbol", "probability", "direction"])
        for sym, prob, d in zip(past.symbols, pred.probs, pred.direction):
            w.writerow([sym, repr(float(prob)), int(d)])
    print(f"wrote {path}")
    return path


def cmd_compare(cfg: RunConfig, args):
    data = _load_dataset(cfg)
    split = make_split(data, cfg.p, cfg.train_fraction)
    tcfg = TrainConfig(eta=cfg.eta, k=cfg.k, epochs=cfg.epochs, seed=0, minibatch=cfg.minibatch, shuffle=cfg.shuffle)
    models = {
        "p-RBM": prbm_predictor(cfg.m, cfg.alpha, tcfg, cfg.k_pred, cfg.predict_mode),
        "VAR(1)": var1_predictor(),
        "RW": rw_predictor(),
    }
    table = compare_models(models, split, cfg.iterations, cfg.seed)
    out = _outdir(cfg)
    table.to_csv(out / "compare.csv")
    (out / "compare.txt").write_text(table.to_text(), encoding="utf-8")
    print(table.to_text(), end="")
    return table


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from resetting globals given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    parser = argparse.ArgumentParser(prog="prbm", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("synth", parents=[common], help="write a synthetic bar CSV")
    p.add_argument("--output", metavar="FILE")
    p = sub.add_parser("ingest", parents=[common], help="extract directions from a bar CSV")
    p.add_argument("--data", metavar="FILE")
    p = sub.add_parser("train", parents=[common], help="train a p-RBM with CD-k")
    p.add_argument("--data", metavar="FILE")
    p.add_argument("--checkpoint", metavar="FILE")
    p = sub.add_parser("eval", parents=[common], help="score validation predictions")
    p.add_argument("--data", metavar="FILE")
    p.add_argument("--checkpoint", metavar="FILE")
    p.add_argument("--predictions", metavar="FILE", help="score a CSV of actual,predicted,move instead of a model")
    p = sub.add_parser("predict", parents=[common], help="predict the next bar from p past bars")
    p.add_argument("--checkpoint", metavar="FILE")
    p.add_argument("--window", metavar="FILE", help="bar CSV holding exactly p timestamps")
    p = sub.add_parser("compare", parents=[common], help="p-RBM vs VAR(1) vs RW over several runs")
    p.add_argument("--data", metavar="FILE")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args)
    except (PRBMError, OSError) as exc:
        kind = type(exc).__name__
        msg = str(exc).replace("\n", " ")
        print(f"error: {kind}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
