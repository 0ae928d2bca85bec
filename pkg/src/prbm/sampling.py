"""Seeded Gibbs sampling, clamped prediction and hidden expectations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, DomainError
from .model import (
    PRBM,
    _check_units,
    hidden_activation_probs,
    visible_activation_probs,
)

__all__ = [
    "make_rng",
    "spawn_rngs",
    "ChainState",
    "Prediction",
    "sample_hidden",
    "sample_visible",
    "gibbs_chain",
    "hidden_expectation_matrix",
    "predict_direction",
]

PREDICT_MODES = ("mean-field", "stochastic")


def make_rng(seed) -> np.random.Generator:
    """A PCG64 generator; accepts an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed, count: int) -> list[np.random.Generator]:
    """Split ``seed`` into ``count`` independent streams, deterministically."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(count)]


def _bernoulli(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(probs.shape) < probs).astype(np.float64)


def sample_hidden(model: PRBM, v, rng: np.random.Generator) -> np.ndarray:
    return _bernoulli(hidden_activation_probs(model, v), rng)


def sample_visible(model: PRBM, h, rng: np.random.Generator) -> np.ndarray:
    return _bernoulli(visible_activation_probs(model, h), rng)


@dataclass(frozen=True)
class ChainState:
    v: np.ndarray
    h: np.ndarray
    step: int


def gibbs_chain(model: PRBM, v0, k: int, rng: np.random.Generator) -> ChainState:
    """Run ``k`` alternating hidden/visible sweeps starting from ``v0``.

    ``v0`` may carry leading batch dimensions, in which case every chain is
    advanced in lock step from the same stream.
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    v = _check_units(v0, model.shape.visible_shape, "visible")
    h = None
    for _ in range(int(k)):
        h = sample_hidden(model, v, rng)
        v = sample_visible(model, h, rng)
    return ChainState(v=v, h=h, step=int(k))


def hidden_expectation_matrix(model: PRBM, v) -> np.ndarray:
    """Expected hidden units stacked into a matrix the size of the full weight matrix.

    Every one of the ``(p+1)n + 1`` rows equals
    ``[E[h_t|v], ..., E[h_{t-p}|v], 1]``. Scaling its rows by the augmented
    visible vector gives the outer product ``v~ E[h~|v]^T``.
    """
    s = model.shape
    probs = hidden_activation_probs(model, v)
    row = np.concatenate([probs.reshape(*probs.shape[:-2], -1), np.ones(probs.shape[:-2] + (1,))], axis=-1)
    rows = s.lags * s.n + 1
    return np.broadcast_to(row[..., None, :], row.shape[:-1] + (rows, row.shape[-1])).copy()


class Prediction(NamedTuple):
    probs: np.ndarray
    direction: np.ndarray


def predict_direction(
    model: PRBM,
    past,
    k_pred: int = 20,
    mode: str = "mean-field",
    rng: np.random.Generator | None = None,
) -> Prediction:
    """Predict the present visible block from the ``p`` most recent ones.

    ``past`` has shape ``(..., p, n)`` with row 0 holding lag 1. The past
    blocks stay clamped while the present block is refined for ``k_pred``
    hidden/visible rounds. In ``"mean-field"`` mode the present block starts
    at 0.5 and is replaced by its activation probabilities each round, so the
    result does not depend on ``rng``. In ``"stochastic"`` mode it starts
    from a Bernoulli(0.5) draw and is resampled each round; the returned
    probabilities are those of the final round. Directions are
    ``probs >= 0.5``.
    """
    s = model.shape
    past = np.asarray(past, dtype=np.float64)
    if past.ndim < 2 or past.shape[-2:] != (s.p, s.n):
        raise DimensionError(f"past blocks have shape {past.shape}, expected (..., {s.p}, {s.n})")
    if int(k_pred) != k_pred or k_pred < 1:
        raise DomainError(f"k_pred must be a positive integer, got {k_pred!r}")
    if mode not in PREDICT_MODES:
        raise DomainError(f"mode must be one of {PREDICT_MODES}, got {mode!r}")

    batch = past.shape[:-2]
    v = np.empty(batch + s.visible_shape)
    v[..., 1:, :] = past
    if mode == "mean-field":
        v[..., 0, :] = 0.5
        for _ in range(int(k_pred)):
            vp = visible_activation_probs(model, hidden_activation_probs(model, v))
            v[..., 0, :] = vp[..., 0, :]
        probs = v[..., 0, :].copy()
    else:
        if rng is None:
            raise DomainError("stochastic prediction needs an rng")
        v[..., 0, :] = _bernoulli(np.full(batch + (s.n,), 0.5), rng)
        for _ in range(int(k_pred)):
            h = sample_hidden(model, v, rng)
            probs = visible_activation_probs(model, h)[..., 0, :]
            v[..., 0, :] = _bernoulli(probs, rng)
    return Prediction(probs=probs, direction=(probs >= 0.5).astype(np.int8))
