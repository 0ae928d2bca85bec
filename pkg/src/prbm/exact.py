"""Brute-force enumeration for tiny p-RBMs.

Everything here sums over explicit configurations and works in the log
domain. It is the ground truth the stochastic code is tested against, so it
deliberately avoids the sampling module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, DimensionError
from .model import (
    PRBM,
    GradientBlocks,
    _check_units,
    energy,
    free_energy,
    hidden_activation_probs,
)

__all__ = [
    "EnumerationBudget",
    "DEFAULT_BUDGET",
    "binary_configs",
    "partition_function",
    "joint_table",
    "exact_joint",
    "visible_marginal",
    "log_hidden_sum",
    "log_hidden_sum_bruteforce",
    "exact_loglik",
    "exact_nll",
    "exact_gradient",
    "exact_conditionals",
    "exact_block_conditional",
    "nll_tractable",
]


@dataclass(frozen=True)
class EnumerationBudget:
    max_total_bits: int = 24

    def check(self, bits: int, what: str) -> None:
        if bits > self.max_total_bits:
            raise CapacityError(f"{what} needs 2**{bits} configurations; budget is 2**{self.max_total_bits}")


DEFAULT_BUDGET = EnumerationBudget()

# visible rows per chunk are chosen so one energy slab holds about this many entries
_SLAB = 1 << 20


def binary_configs(lags: int, width: int) -> np.ndarray:
    """All ``2**(lags*width)`` binary block arrays, shape ``(N, lags, width)``.

    Row ``r`` is the binary expansion of ``r`` with the most significant
    bit first.
    """
    bits = lags * width
    codes = np.arange(1 << bits, dtype=np.int64)
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    flat = (codes[:, None] >> shifts) & 1
    return flat.astype(np.float64).reshape(-1, lags, width)


def _flat_weights(model: PRBM) -> np.ndarray:
    s = model.shape
    return model.effective_vh.transpose(0, 2, 1, 3).reshape(s.lags * s.n, s.lags * s.m)


def _neg_energy_slabs(model: PRBM, budget: EnumerationBudget):
    """Yield ``(v_index_slice, -E)`` slabs covering the full joint table."""
    s = model.shape
    budget.check(s.lags * (s.n + s.m), "full joint enumeration")
    V = binary_configs(s.lags, s.n).reshape(-1, s.lags * s.n)
    H = binary_configs(s.lags, s.m).reshape(-1, s.lags * s.m)
    Wf = _flat_weights(model)
    hterm = H @ model.hbias.reshape(-1)
    HW = Wf @ H.T
    step = max(1, _SLAB // H.shape[0])
    for start in range(0, V.shape[0], step):
        Vc = V[start : start + step]
        neg = Vc @ HW + (Vc @ model.vbias.reshape(-1))[:, None] + hterm[None, :]
        yield slice(start, start + Vc.shape[0]), neg


def partition_function(model: PRBM, budget: EnumerationBudget = DEFAULT_BUDGET, method: str = "joint") -> float:
    """``log Z``.

    ``method="joint"`` sums ``exp(-E)`` over every visible and hidden
    configuration. ``method="visible"`` enumerates visible configurations
    only and sums the hidden units out in closed form, which stays
    tractable for much wider hidden layers.
    """
    s = model.shape
    if method == "joint":
        parts = [logsumexp(neg) for _, neg in _neg_energy_slabs(model, budget)]
        return float(logsumexp(parts))
    if method == "visible":
        budget.check(s.lags * s.n, "visible enumeration")
        V = binary_configs(s.lags, s.n)
        step = max(1, _SLAB // max(1, s.lags * s.m))
        parts = [logsumexp(-free_energy(model, V[i : i + step])) for i in range(0, len(V), step)]
        return float(logsumexp(parts))
    raise ValueError(f"unknown method {method!r}")


def joint_table(model: PRBM, budget: EnumerationBudget = DEFAULT_BUDGET) -> np.ndarray:
    """Joint probabilities as an ``(Nv, Nh)`` table indexed like :func:`binary_configs`."""
    neg = np.vstack([slab for _, slab in _neg_energy_slabs(model, budget)])
    return np.exp(neg - logsumexp(neg))


def exact_joint(model: PRBM, v, h, budget: EnumerationBudget = DEFAULT_BUDGET) -> float:
    return float(np.exp(-energy(model, v, h) - partition_function(model, budget)))


def visible_marginal(model: PRBM, budget: EnumerationBudget = DEFAULT_BUDGET) -> np.ndarray:
    """``p(v)`` for every visible configuration, by summing the joint table."""
    return joint_table(model, budget).sum(axis=1)


def log_hidden_sum(model: PRBM, v, budget: EnumerationBudget = DEFAULT_BUDGET) -> np.ndarray | float:
    """``log sum_h exp(-E(v, h))`` using the per-unit factorization."""
    budget.check(model.shape.lags * model.shape.m, "hidden sum")
    return -free_energy(model, v)


def log_hidden_sum_bruteforce(model: PRBM, v, budget: EnumerationBudget = DEFAULT_BUDGET) -> float:
    """Same quantity as :func:`log_hidden_sum`, enumerating every hidden configuration."""
    s = model.shape
    budget.check(s.lags * s.m, "hidden enumeration")
    v = _check_units(v, s.visible_shape, "visible")
    if v.ndim != 2:
        raise DimensionError("brute-force hidden sum takes a single visible configuration")
    H = binary_configs(s.lags, s.m)
    neg = (
        np.einsum("in,ijnm,kjm->k", v, model.effective_vh, H)
        + float(np.sum(v * model.vbias))
        + np.einsum("kjm,jm->k", H, model.hbias)
    )
    return float(logsumexp(neg))


def exact_loglik(model: PRBM, v, budget: EnumerationBudget = DEFAULT_BUDGET, log_z: float | None = None):
    """``log p(v)``; ``log_z`` may be passed in to avoid recomputing it."""
    if log_z is None:
        log_z = partition_function(model, budget)
    return log_hidden_sum(model, v, budget) - log_z


def exact_nll(model: PRBM, windows, budget: EnumerationBudget = DEFAULT_BUDGET, method: str = "joint") -> float:
    """Mean negative log-likelihood over a stack of visible windows."""
    log_z = partition_function(model, budget, method=method)
    return float(-np.mean(exact_loglik(model, windows, budget, log_z=log_z)))


def nll_tractable(model: PRBM, max_units: int = 20) -> bool:
    """Whether per-layer enumeration is cheap enough for training traces."""
    s = model.shape
    return s.lags * max(s.n, s.m) <= max_units


def exact_gradient(model: PRBM, v, budget: EnumerationBudget = DEFAULT_BUDGET) -> GradientBlocks:
    """Gradient of the mean log-likelihood of ``v`` with respect to the stored weights.

    The data term uses the hidden conditional of each example; the model
    term is an expectation under the enumerated joint table.
    """
    s = model.shape
    v = _check_units(v, s.visible_shape, "visible")
    batch = v.reshape(-1, *s.visible_shape)
    mask = model.forgetting[: s.lags, : s.lags]

    eh = hidden_activation_probs(model, batch)
    data_vh = np.einsum("bin,bjm->ijnm", batch, eh) / len(batch)
    data_vb = batch.mean(axis=0)
    data_hb = eh.mean(axis=0)

    P = joint_table(model, budget)
    V = binary_configs(s.lags, s.n).reshape(-1, s.lags * s.n)
    H = binary_configs(s.lags, s.m).reshape(-1, s.lags * s.m)
    model_vh = (V.T @ P @ H).reshape(s.lags, s.n, s.lags, s.m).transpose(0, 2, 1, 3)
    model_vb = (V.T @ P.sum(axis=1)).reshape(s.visible_shape)
    model_hb = (H.T @ P.sum(axis=0)).reshape(s.hidden_shape)

    return GradientBlocks(
        vh=mask[:, :, None, None] * (data_vh - model_vh),
        vbias=data_vb - model_vb,
        hbias=data_hb - model_hb,
    )


class Conditionals(NamedTuple):
    probs: np.ndarray
    factorization_error: float


def _block_factorization_error(logw: np.ndarray, lags: int, width: int) -> tuple[np.ndarray, float]:
    post = np.exp(logw - logsumexp(logw))
    table = post.reshape((1 << width,) * lags)
    product = np.ones_like(table)
    for lag in range(lags):
        others = tuple(a for a in range(lags) if a != lag)
        marg = table.sum(axis=others)
        shape = [1] * lags
        shape[lag] = -1
        product = product * marg.reshape(shape)
    configs = binary_configs(lags, width)
    unit_probs = np.einsum("k,kij->ij", post, configs)
    return unit_probs, float(np.max(np.abs(table - product)))


def exact_conditionals(model: PRBM, v=None, h=None, budget: EnumerationBudget = DEFAULT_BUDGET) -> Conditionals:
    """Per-unit conditionals of one layer given the other, by enumeration.

    Pass exactly one of ``v`` or ``h``. Besides the unit probabilities the
    result carries the largest deviation between the enumerated conditional
    over the whole layer and the product of its per-lag block marginals.
    """
    s = model.shape
    if (v is None) == (h is None):
        raise ValueError("pass exactly one of v or h")
    if v is not None:
        budget.check(s.lags * s.m, "hidden enumeration")
        v = _check_units(v, s.visible_shape, "visible")
        H = binary_configs(s.lags, s.m)
        logw = -energy(model, np.broadcast_to(v, (len(H),) + v.shape), H)
        probs, err = _block_factorization_error(logw, s.lags, s.m)
    else:
        budget.check(s.lags * s.n, "visible enumeration")
        h = _check_units(h, s.hidden_shape, "hidden")
        V = binary_configs(s.lags, s.n)
        logw = -energy(model, V, np.broadcast_to(h, (len(V),) + h.shape))
        probs, err = _block_factorization_error(logw, s.lags, s.n)
    return Conditionals(probs=probs, factorization_error=err)


def exact_block_conditional(model: PRBM, i: int, j: int, h_block, budget: EnumerationBudget = DEFAULT_BUDGET) -> np.ndarray:
    """``p(v_{t-i,u} = 1 | h_{t-j} = h_block)`` under the joint, other blocks marginalized."""
    s = model.shape
    h_block = np.asarray(h_block, dtype=np.float64)
    if h_block.shape != (s.m,):
        raise DimensionError(f"hidden block has shape {h_block.shape}, expected ({s.m},)")
    P = joint_table(model, budget)
    V = binary_configs(s.lags, s.n)
    H = binary_configs(s.lags, s.m)
    keep = np.all(H[:, j, :] == h_block, axis=1)
    w = P[:, keep].sum(axis=1)
    return np.einsum("k,kn->n", w, V[:, i, :]) / w.sum()
