"""k-step contrastive divergence for the p-RBM."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from os import PathLike

import numpy as np

from .errors import DimensionError, DomainError, NumericError
from .exact import exact_nll, nll_tractable
from .model import PRBM, GradientBlocks, _check_units, free_energy, hidden_activation_probs
from .sampling import gibbs_chain

__all__ = [
    "TrainConfig",
    "TraceRecord",
    "TrainTrace",
    "TrainingDiverged",
    "cd_gradient",
    "minibatch_gradient",
    "apply_update",
    "train",
]


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.001
    k: int = 1
    epochs: int = 10
    seed: int = 0
    minibatch: int = 1
    shuffle: bool = False
    workers: int | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"eta must be > 0, got {self.eta!r}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k!r}")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise DomainError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        if int(self.minibatch) != self.minibatch or self.minibatch < 1:
            raise DomainError(f"minibatch must be a positive integer, got {self.minibatch!r}")
        if self.seed < 0:
            raise DomainError("seed must be non-negative")


def cd_gradient(model: PRBM, v0, k: int, rng: np.random.Generator) -> GradientBlocks:
    """CD-k estimate of the log-likelihood gradient at ``v0``.

    Both phases use expected hidden units; the model phase uses the visible
    sample after ``k`` Gibbs sweeps. Block ``(i, j)`` of the coupling
    gradient is ``alpha**|i-j| (v0_i E[h_j|v0]^T - vk_i E[h_j|vk]^T)``. A
    batch of starting points gives the mean over the batch.
    """
    s = model.shape
    v0 = _check_units(v0, s.visible_shape, "visible")
    batch = v0.reshape(-1, *s.visible_shape)
    vk = gibbs_chain(model, batch, k, rng).v
    e0 = hidden_activation_probs(model, batch)
    ek = hidden_activation_probs(model, vk)
    B = len(batch)
    mask = model.forgetting[: s.lags, : s.lags]
    vh = np.einsum("bin,bjm->ijnm", batch, e0) - np.einsum("bin,bjm->ijnm", vk, ek)
    return GradientBlocks(
        vh=mask[:, :, None, None] * vh / B,
        vbias=(batch - vk).sum(axis=0) / B,
        hbias=(e0 - ek).sum(axis=0) / B,
    )


def minibatch_gradient(model: PRBM, batch, k: int, rngs, workers: int | None = None) -> GradientBlocks:
    """Mean of per-example CD-k gradients, one rng stream per example.

    Per-example work may run on a thread pool; the reduction always adds the
    examples in index order, so the result does not depend on ``workers``.
    """
    batch = _check_units(batch, model.shape.visible_shape, "visible")
    if batch.ndim != 3:
        raise DimensionError("batch must have shape (B, p+1, n)")
    if len(rngs) != len(batch):
        raise DimensionError(f"{len(batch)} examples but {len(rngs)} rng streams")
    jobs = list(zip(batch, rngs))
    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            grads = list(pool.map(lambda job: cd_gradient(model, job[0], k, job[1]), jobs))
    else:
        grads = [cd_gradient(model, v, k, r) for v, r in jobs]
    total = grads[0]
    for g in grads[1:]:
        total = total + g
    return total / len(grads)


def apply_update(model: PRBM, grad: GradientBlocks, eta: float) -> PRBM:
    """Gradient ascent step ``W <- W + eta * grad`` on every block."""
    if grad.vh.shape != model.vh.shape or grad.vbias.shape != model.vbias.shape or grad.hbias.shape != model.hbias.shape:
        raise DimensionError("gradient blocks do not match the model")
    vh = model.vh + eta * grad.vh
    vbias = model.vbias + eta * grad.vbias
    hbias = model.hbias + eta * grad.hbias
    if not (np.all(np.isfinite(vh)) and np.all(np.isfinite(vbias)) and np.all(np.isfinite(hbias))):
        raise NumericError("update produced non-finite weights")
    return model.replace(vh=vh, vbias=vbias, hbias=hbias)


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    train_proxy: float
    val_proxy: float
    train_nll: float | None
    val_nll: float | None
    seconds: float


@dataclass
class TrainTrace:
    """Per-epoch training diagnostics.

    ``records`` holds one entry per completed epoch. ``initial`` describes
    the model before the first update and is written as epoch 0 in CSV.
    The proxy columns are mean free energies, which differ from the NLL
    only by ``log Z``.
    """

    initial: TraceRecord | None = None
    records: list[TraceRecord] = field(default_factory=list)

    COLUMNS = ("epoch", "train_proxy", "val_proxy", "train_nll", "val_nll", "seconds")

    def rows(self):
        return ([self.initial] if self.initial else []) + self.records

    def to_csv(self, path: str | PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for r in self.rows():
                w.writerow([
                    r.epoch,
                    repr(r.train_proxy),
                    "" if np.isnan(r.val_proxy) else repr(r.val_proxy),
                    "" if r.train_nll is None else repr(r.train_nll),
                    "" if r.val_nll is None else repr(r.val_nll),
                    f"{r.seconds:.6f}",
                ])


class TrainingDiverged(NumericError):
    """Raised when an update goes non-finite; carries the last good state."""

    def __init__(self, message, model: PRBM, trace: TrainTrace):
        super().__init__(message)
        self.model = model
        self.trace = trace


def _record(model, epoch, train_windows, val_windows, with_nll, seconds) -> TraceRecord:
    train_proxy = float(np.mean(free_energy(model, train_windows)))
    val_proxy = float(np.mean(free_energy(model, val_windows))) if len(val_windows) else float("nan")
    train_nll = val_nll = None
    if with_nll:
        train_nll = exact_nll(model, train_windows, method="visible")
        if len(val_windows):
            val_nll = exact_nll(model, val_windows, method="visible")
    return TraceRecord(epoch, train_proxy, val_proxy, train_nll, val_nll, seconds)


def train(model: PRBM, windows, config: TrainConfig, validation=None, track_nll: bool | None = None):
    """Run CD-k over ``windows`` for ``config.epochs`` epochs.

    ``windows`` has shape ``(N, p+1, n)``. Examples are visited in order (or
    in a seeded per-epoch permutation when ``config.shuffle``) and grouped
    into minibatches whose gradients are averaged. Every example draws from
    its own stream derived from ``(seed, epoch, position)``, so a fixed seed
    reproduces the weights bit for bit. Exact NLL columns are filled when
    ``track_nll`` is true, defaulting to whether the model is small enough.

    Returns ``(model, trace)``. If an update goes non-finite,
    :class:`TrainingDiverged` is raised holding the last finite model and
    the trace so far.
    """
    s = model.shape
    windows = _check_units(windows, s.visible_shape, "visible")
    if windows.ndim != 3 or len(windows) == 0:
        raise DomainError("training needs a non-empty (N, p+1, n) window stack")
    val = np.empty((0,) + s.visible_shape) if validation is None else _check_units(validation, s.visible_shape, "visible")
    if track_nll is None:
        track_nll = nll_tractable(model)

    trace = TrainTrace()
    trace.initial = _record(model, 0, windows, val, track_nll, 0.0)
    root = np.random.SeedSequence(config.seed)
    N = len(windows)
    for epoch, epoch_ss in enumerate(root.spawn(config.epochs), start=1):
        start = time.perf_counter()
        order_ss, chain_ss = epoch_ss.spawn(2)
        order = np.random.Generator(np.random.PCG64(order_ss)).permutation(N) if config.shuffle else np.arange(N)
        chain_seeds = chain_ss.spawn(N)
        for lo in range(0, N, config.minibatch):
            idx = order[lo : lo + config.minibatch]
            rngs = [np.random.Generator(np.random.PCG64(chain_seeds[q])) for q in range(lo, lo + len(idx))]
            grad = minibatch_gradient(model, windows[idx], config.k, rngs, workers=config.workers)
            try:
                model = apply_update(model, grad, config.eta)
            except NumericError as exc:
                raise TrainingDiverged(f"epoch {epoch}: {exc}", model, trace) from exc
        trace.records.append(_record(model, epoch, windows, val, track_nll, time.perf_counter() - start))
    return model, trace
