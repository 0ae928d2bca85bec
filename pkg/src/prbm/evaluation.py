"""Direction scoring: misclassification rate, confusion matrix, backtest, run tables.

Scoring functions take directions encoded as -1 (down) / +1 (up). Use
:func:`signed` to convert the 0/1 encoding used everywhere else.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from os import PathLike
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "signed",
    "misclassification_loss",
    "ConfusionMatrix",
    "confusion",
    "BacktestResult",
    "backtest",
    "EvalReport",
    "evaluate",
    "summarize_losses",
    "ComparisonTable",
    "compare_models",
]


def signed(directions) -> np.ndarray:
    """Map 0/1 directions to -1/+1."""
    d = np.asarray(directions)
    if not np.all((d == 0) | (d == 1)):
        raise DomainError("directions must be 0 or 1")
    return np.where(d == 1, 1, -1).astype(np.int8)


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual)
    f = np.asarray(predicted)
    if a.shape != f.shape:
        raise DimensionError(f"actual {a.shape} and predicted {f.shape} differ")
    if a.size == 0:
        raise DimensionError("nothing to score")
    for name, x in (("actual", a), ("predicted", f)):
        if not np.all(np.abs(x) == 1):
            raise DomainError(f"{name} entries must be -1 or +1")
    return a.astype(np.int64), f.astype(np.int64)


def misclassification_loss(actual, predicted) -> float:
    """``(1 / 2N) * sum |1 - a * f|`` over all entries: the fraction of wrong directions."""
    a, f = _pair(actual, predicted)
    return float(np.abs(1 - a * f).sum() / (2 * a.size))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed (real direction, predicted direction)."""

    up_up: int
    up_down: int
    down_up: int
    down_down: int

    def __post_init__(self):
        if min(self.up_up, self.up_down, self.down_up, self.down_down) < 0:
            raise DomainError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.up_up + self.up_down + self.down_up + self.down_down

    @property
    def wins(self) -> int:
        return self.up_up + self.down_down

    @property
    def losses(self) -> int:
        return self.up_down + self.down_up

    @property
    def loss(self) -> float:
        return self.losses / self.total

    def to_text(self) -> str:
        cells = [f"{c:,}" for c in (self.up_up, self.up_down, self.down_up, self.down_down)]
        w = max(9, *(len(c) for c in cells))
        return "\n".join([
            f"{'':<16}{'Predicted direction':^{2 * w + 2}}",
            f"{'Real direction':<16}{'Up':>{w}}  {'Down':>{w}}",
            f"{'Up':<16}{cells[0]:>{w}}  {cells[1]:>{w}}",
            f"{'Down':<16}{cells[2]:>{w}}  {cells[3]:>{w}}",
        ]) + "\n"


def confusion(actual, predicted) -> ConfusionMatrix:
    a, f = _pair(actual, predicted)
    return ConfusionMatrix(
        up_up=int(np.sum((a == 1) & (f == 1))),
        up_down=int(np.sum((a == 1) & (f == -1))),
        down_up=int(np.sum((a == -1) & (f == 1))),
        down_down=int(np.sum((a == -1) & (f == -1))),
    )


@dataclass(frozen=True)
class BacktestResult:
    wins: int
    losses: int
    ratio: float
    ratio_infinite: bool
    strategy_return: float


def backtest(actual, predicted, moves, notional: float = 1.0, basis=None) -> BacktestResult:
    """One trade per stock per bar, long when the prediction is up, short otherwise.

    A trade wins when the predicted direction matches the real one. The
    strategy return is ``sum(f * moves) * notional`` divided by the capital
    deployed, ``sum(|basis|) * notional``; ``basis`` defaults to one unit per
    trade. With no losing trades the ratio is ``inf`` and ``ratio_infinite``
    is set.
    """
    a, f = _pair(actual, predicted)
    moves = np.asarray(moves, dtype=np.float64)
    if moves.shape != a.shape:
        raise DimensionError(f"moves {moves.shape} do not match directions {a.shape}")
    wins = int(np.sum(a == f))
    losses = a.size - wins
    ratio = math.inf if losses == 0 else wins / losses
    deployed = a.size if basis is None else float(np.abs(np.asarray(basis, dtype=np.float64)).sum())
    ret = float((f * moves).sum() * notional / (deployed * notional))
    return BacktestResult(wins, losses, ratio, losses == 0, ret)


@dataclass(frozen=True)
class EvalReport:
    loss: float
    confusion: ConfusionMatrix
    backtest: BacktestResult

    @property
    def wins(self) -> int:
        return self.backtest.wins

    @property
    def losses(self) -> int:
        return self.backtest.losses

    @property
    def win_loss_ratio(self) -> float:
        return self.backtest.ratio

    def to_csv(self, path: str | PathLike) -> None:
        c, b = self.confusion, self.backtest
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "value"])
            for key, value in [
                ("loss", repr(self.loss)),
                ("decisions", c.total),
                ("up_up", c.up_up),
                ("up_down", c.up_down),
                ("down_up", c.down_up),
                ("down_down", c.down_down),
                ("wins", b.wins),
                ("losses", b.losses),
                ("win_loss_ratio", "inf" if b.ratio_infinite else repr(b.ratio)),
                ("strategy_return", repr(b.strategy_return)),
            ]:
                w.writerow([key, value])

    def to_text(self) -> str:
        b = self.backtest
        ratio = "inf" if b.ratio_infinite else f"{b.ratio:.4f}"
        return (
            self.confusion.to_text()
            + f"\nmisclassification rate  {self.loss:.4f}\n"
            + f"decisions               {self.confusion.total}\n"
            + f"winning trades          {b.wins}\n"
            + f"losing trades           {b.losses}\n"
            + f"win/loss ratio          {ratio}\n"
            + f"strategy return         {b.strategy_return:.6f}\n"
        )


def evaluate(actual01, predicted01, moves, notional: float = 1.0, basis=None) -> EvalReport:
    """Score 0/1 directions against 0/1 truth and signed bar moves."""
    a, f = signed(actual01), signed(predicted01)
    return EvalReport(
        loss=misclassification_loss(a, f),
        confusion=confusion(a, f),
        backtest=backtest(a, f, moves, notional=notional, basis=basis),
    )


def summarize_losses(losses: Sequence[float], ddof: int = 1) -> tuple[float, float]:
    """Mean and standard deviation; a single run has standard deviation 0."""
    x = np.asarray(losses, dtype=np.float64)
    if x.size == 0:
        raise DomainError("no losses to summarize")
    std = 0.0 if x.size <= ddof else float(np.std(x, ddof=ddof))
    return float(np.mean(x)), std


@dataclass(frozen=True, eq=False)
class ComparisonTable:
    """Per-iteration losses, one row per model."""

    names: tuple[str, ...]
    losses: np.ndarray  # (models, iterations)
    ddof: int = 1

    def summary(self, name: str) -> tuple[float, float]:
        return summarize_losses(self.losses[self.names.index(name)], self.ddof)

    def header(self) -> list[str]:
        return ["Model", *(str(i + 1) for i in range(self.losses.shape[1])), "Mean", "Std"]

    def rows(self) -> list[list]:
        out = []
        for name, row in zip(self.names, self.losses):
            mean, std = summarize_losses(row, self.ddof)
            out.append([name, *row.tolist(), mean, std])
        return out

    def to_csv(self, path: str | PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for row in self.rows():
                w.writerow([row[0], *(repr(float(x)) for x in row[1:])])

    def to_text(self) -> str:
        header = self.header()
        body = [[row[0], *(f"{x:.4f}" for x in row[1:])] for row in self.rows()]
        widths = [max(len(r[c]) for r in [header, *body]) for c in range(len(header))]
        buf = io.StringIO()
        for r in [header, *body]:
            cells = [r[0].ljust(widths[0])] + [r[c].rjust(widths[c]) for c in range(1, len(r))]
            buf.write("  ".join(cells).rstrip() + "\n")
        return buf.getvalue()


Predictor = Callable[[object, np.random.SeedSequence], np.ndarray]


def compare_models(
    models: Mapping[str, Predictor],
    split,
    iterations: int,
    seed: int,
    actual01=None,
) -> ComparisonTable:
    """Re-run every predictor ``iterations`` times and tabulate validation losses.

    Each predictor is called as ``predictor(split, seed_sequence)`` and must
    return 0/1 predictions shaped like ``actual01``. When ``actual01`` is
    omitted it is read from ``split.val_actual``. Iteration ``r`` of every
    model receives the ``r``-th child of ``SeedSequence(seed)``.
    """
    if int(iterations) != iterations or iterations < 1:
        raise DomainError(f"iterations must be a positive integer, got {iterations!r}")
    truth = signed(split.val_actual if actual01 is None else actual01)
    seeds = np.random.SeedSequence(seed).spawn(int(iterations))
    names = tuple(models)
    losses = np.empty((len(names), int(iterations)))
    for r, ss in enumerate(seeds):
        for q, name in enumerate(names):
            fresh = np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key)
            pred = models[name](split, fresh)
            losses[q, r] = misclassification_loss(truth, signed(pred))
    return ComparisonTable(names, losses)
