"""Train/validation splits and the direction predictors compared in run tables."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .baselines import fit_rw, fit_var1, predict_rw, predict_var1
from .data import DirectionDataset, split_index, windows
from .model import ModelShape, init_model
from .sampling import predict_direction
from .training import TrainConfig, train

__all__ = ["ExperimentSplit", "make_split", "prbm_predictor", "rw_predictor", "var1_predictor"]


@dataclass(frozen=True, eq=False)
class ExperimentSplit:
    """Chronological split of a dataset into p-RBM windows and aligned targets.

    Window ``w`` predicts row ``w + p``. ``first_val_row`` is the first row
    predicted in validation; all rows before it are available for fitting.
    """

    dataset: DirectionDataset
    p: int
    train_windows: np.ndarray
    val_windows: np.ndarray
    first_val_row: int

    @property
    def val_rows(self) -> np.ndarray:
        return np.arange(self.first_val_row, self.dataset.T)

    @property
    def val_actual(self) -> np.ndarray:
        return self.dataset.directions[self.first_val_row :]

    @property
    def val_moves(self) -> np.ndarray:
        return self.dataset.moves[self.first_val_row :]

    @property
    def decisions(self) -> int:
        return self.val_windows.shape[0] * self.dataset.n


def make_split(dataset: DirectionDataset, p: int, train_fraction: float = 0.8) -> ExperimentSplit:
    w = windows(dataset, p)
    cut = split_index(len(w), train_fraction)
    return ExperimentSplit(dataset, p, w[:cut], w[cut:], cut + p)


def prbm_predictor(m: int, alpha: float, config: TrainConfig, k_pred: int = 20, mode: str = "mean-field"):
    """Train a fresh p-RBM per call and predict every validation window."""

    def predict(split: ExperimentSplit, seed: np.random.SeedSequence) -> np.ndarray:
        init_ss, train_ss, pred_ss = seed.spawn(3)
        shape = ModelShape(split.dataset.n, m, split.p, alpha)
        model = init_model(shape, np.random.Generator(np.random.PCG64(init_ss)))
        cfg = replace(config, seed=int(train_ss.generate_state(1, np.uint64)[0]))
        model, _ = train(model, split.train_windows, cfg, track_nll=False)
        rng = np.random.Generator(np.random.PCG64(pred_ss))
        return predict_direction(model, split.val_windows[:, 1:, :], k_pred, mode, rng).direction

    return predict


def rw_predictor():
    """Random walk with drift on the cumulative move series.

    The drift is the mean training move, so every validation bar is
    predicted in the drift's direction.
    """

    def predict(split: ExperimentSplit, seed=None) -> np.ndarray:
        level = np.cumsum(split.dataset.moves[: split.first_val_row], axis=0)
        model = fit_rw(level)
        _, direction = predict_rw(model, np.zeros_like(split.val_moves))
        return direction

    return predict


def var1_predictor():
    """VAR(1) on the per-bar moves; each bar is forecast from the previous one."""

    def predict(split: ExperimentSplit, seed=None) -> np.ndarray:
        model = fit_var1(split.dataset.moves[: split.first_val_row])
        prev = split.dataset.moves[split.first_val_row - 1 : -1]
        _, direction = predict_var1(model, prev)
        return direction

    return predict
