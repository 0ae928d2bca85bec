"""p-RBM parameterization and the deterministic functions of its parameters.

A p-RBM couples p + 1 time-indexed copies of an RBM. Units are kept as
block arrays indexed by lag: a visible configuration is an array of shape
``(p + 1, n)`` whose row ``i`` holds ``v_{t-i}`` (row 0 is the present),
and a hidden configuration has shape ``(p + 1, m)``. The trailing block of
ones that pairs units with biases is never stored; it is appended only when
the full block matrix is assembled. Every function below accepts arbitrary
leading batch dimensions on unit arrays.

Weights are stored as three arrays::

    vh     (p+1, p+1, n, m)   vh[i, j] couples v_{t-i} with h_{t-j}
    vbias  (p+1, n)           bias of v_{t-i}
    hbias  (p+1, m)           bias of h_{t-j}

The coupling between lags ``i`` and ``j`` is attenuated by the forgetting
factor ``alpha ** |i - j|`` (with ``0 ** 0 == 1``); biases are never
attenuated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import expit

from .errors import DimensionError, DomainError

__all__ = [
    "ModelShape",
    "PRBM",
    "build_forgetting_matrix",
    "zeros_model",
    "init_model",
    "energy",
    "block_energy",
    "free_energy",
    "hidden_logits",
    "visible_logits",
    "hidden_activation_probs",
    "visible_activation_probs",
    "assemble_full_matrix",
    "expand_forgetting_matrix",
    "augment",
    "GradientBlocks",
]


@dataclass(frozen=True)
class ModelShape:
    """Sizes of a p-RBM: ``n`` visible and ``m`` hidden units per step,
    memory depth ``p`` and forgetting rate ``alpha``."""

    n: int
    m: int
    p: int
    alpha: float

    def __post_init__(self):
        for name, lo in (("n", 1), ("m", 1), ("p", 0)):
            value = getattr(self, name)
            if int(value) != value or value < lo:
                raise DomainError(f"{name} must be an integer >= {lo}, got {value!r}")
            object.__setattr__(self, name, int(value))
        alpha = float(self.alpha)
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def lags(self) -> int:
        return self.p + 1

    @property
    def visible_shape(self) -> tuple[int, int]:
        return (self.p + 1, self.n)

    @property
    def hidden_shape(self) -> tuple[int, int]:
        return (self.p + 1, self.m)


def build_forgetting_matrix(alpha: float, p: int) -> np.ndarray:
    """Return the ``(p+2, p+2)`` forgetting matrix.

    Entry ``(i, j)`` is ``alpha ** |i - j|`` for ``i, j <= p`` and 1 on the
    last row and column. ``0 ** 0`` is taken as 1, so ``alpha = 0`` keeps the
    same-lag couplings and removes only the cross-lag ones.

    >>> build_forgetting_matrix(0.5, 1)
    array([[1. , 0.5, 1. ],
           [0.5, 1. , 1. ],
           [1. , 1. , 1. ]])
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if int(p) != p or p < 0:
        raise DomainError(f"p must be a non-negative integer, got {p!r}")
    p = int(p)
    idx = np.arange(p + 1)
    lag = np.abs(idx[:, None] - idx[None, :])
    A = np.ones((p + 2, p + 2))
    # numpy already evaluates 0.0 ** 0 as 1.0
    A[: p + 1, : p + 1] = np.power(alpha, lag)
    return A


@lru_cache(maxsize=64)
def _shared_forgetting(alpha: float, p: int) -> np.ndarray:
    A = build_forgetting_matrix(alpha, p)
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class PRBM:
    """Immutable p-RBM parameters. See the module docstring for the layout."""

    shape: ModelShape
    vh: np.ndarray = field(repr=False)
    vbias: np.ndarray = field(repr=False)
    hbias: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = self.shape
        expected = {
            "vh": (s.lags, s.lags, s.n, s.m),
            "vbias": (s.lags, s.n),
            "hbias": (s.lags, s.m),
        }
        for name, want in expected.items():
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            if arr.shape != want:
                raise DimensionError(f"{name} has shape {arr.shape}, expected {want}")
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, PRBM):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.vh, other.vh)
            and np.array_equal(self.vbias, other.vbias)
            and np.array_equal(self.hbias, other.hbias)
        )

    __hash__ = None

    @property
    def forgetting(self) -> np.ndarray:
        return _shared_forgetting(self.shape.alpha, self.shape.p)

    @cached_property
    def effective_vh(self) -> np.ndarray:
        """Coupling blocks with the forgetting factors applied."""
        mask = self.forgetting[: self.shape.lags, : self.shape.lags]
        eff = mask[:, :, None, None] * self.vh
        eff.setflags(write=False)
        return eff

    @cached_property
    def _flat_vh(self) -> np.ndarray:
        # effective_vh laid out as a ((p+1)n, (p+1)m) matrix for batched matmuls
        L, n, m = self.shape.lags, self.shape.n, self.shape.m
        flat = np.ascontiguousarray(self.effective_vh.transpose(0, 2, 1, 3).reshape(L * n, L * m))
        flat.setflags(write=False)
        return flat

    def replace(self, **changes) -> "PRBM":
        kw = dict(shape=self.shape, vh=self.vh, vbias=self.vbias, hbias=self.hbias)
        kw.update(changes)
        return PRBM(**kw)


def zeros_model(shape: ModelShape) -> PRBM:
    L = shape.lags
    return PRBM(
        shape,
        np.zeros((L, L, shape.n, shape.m)),
        np.zeros((L, shape.n)),
        np.zeros((L, shape.m)),
    )


def init_model(shape: ModelShape, rng: np.random.Generator, scale: float = 0.01) -> PRBM:
    """Coupling blocks drawn i.i.d. from N(0, scale**2); biases zero."""
    L = shape.lags
    vh = rng.normal(0.0, scale, size=(L, L, shape.n, shape.m))
    return PRBM(shape, vh, np.zeros((L, shape.n)), np.zeros((L, shape.m)))


def _check_units(arr, want: tuple[int, int], what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[-2:] != want:
        raise DimensionError(f"{what} block array has shape {arr.shape}, expected (..., {want[0]}, {want[1]})")
    return arr


def energy(model: PRBM, v, h) -> np.ndarray | float:
    """Energy of visible/hidden block configurations, summed lag by lag."""
    v = _check_units(v, model.shape.visible_shape, "visible")
    h = _check_units(h, model.shape.hidden_shape, "hidden")
    field = np.einsum("...in,ijnm->...jm", v, model.effective_vh)
    coupling = np.einsum("...jm,...jm->...", field, h)
    vis = np.einsum("...in,in->...", v, model.vbias)
    hid = np.einsum("...jm,jm->...", h, model.hbias)
    # bias terms first, then coupling: with p = 0 this is the classic RBM sum term for term
    out = -vis - hid - coupling
    return float(out) if np.ndim(out) == 0 else out


def hidden_logits(model: PRBM, v) -> np.ndarray:
    v = _check_units(v, model.shape.visible_shape, "visible")
    flat = v.reshape(v.shape[:-2] + (-1,)) @ model._flat_vh
    return flat.reshape(v.shape[:-2] + model.shape.hidden_shape) + model.hbias


def visible_logits(model: PRBM, h) -> np.ndarray:
    h = _check_units(h, model.shape.hidden_shape, "hidden")
    flat = h.reshape(h.shape[:-2] + (-1,)) @ model._flat_vh.T
    return flat.reshape(h.shape[:-2] + model.shape.visible_shape) + model.vbias


def hidden_activation_probs(model: PRBM, v) -> np.ndarray:
    """``p(h_{t-j,u} = 1 | v)`` for every lag ``j`` and unit ``u``."""
    return expit(hidden_logits(model, v))


def visible_activation_probs(model: PRBM, h) -> np.ndarray:
    """``p(v_{t-i,u} = 1 | h)`` for every lag ``i`` and unit ``u``."""
    return expit(visible_logits(model, h))


def free_energy(model: PRBM, v) -> np.ndarray | float:
    """``-log sum_h exp(-E(v, h))``, with the hidden sum done in closed form."""
    v = _check_units(v, model.shape.visible_shape, "visible")
    vis = np.einsum("...in,in->...", v, model.vbias)
    soft = np.logaddexp(0.0, hidden_logits(model, v)).sum(axis=(-2, -1))
    out = -(vis + soft)
    return float(out) if np.ndim(out) == 0 else out


def augment(blocks) -> np.ndarray:
    """Flatten a ``(p+1, k)`` block array and append the trailing 1."""
    blocks = np.asarray(blocks, dtype=np.float64)
    flat = blocks.reshape(*blocks.shape[:-2], -1)
    ones = np.ones(flat.shape[:-1] + (1,))
    return np.concatenate([flat, ones], axis=-1)


def assemble_full_matrix(model: PRBM) -> np.ndarray:
    """Lay the blocks out as one ``((p+1)n+1, (p+1)m+1)`` matrix.

    Coupling block ``(i, j)`` sits at rows ``i*n:(i+1)*n`` and columns
    ``j*m:(j+1)*m``; the visible biases fill the last column, the hidden
    biases the last row, and the bottom-right corner is zero.
    """
    s = model.shape
    L, n, m = s.lags, s.n, s.m
    W = np.zeros((L * n + 1, L * m + 1))
    W[: L * n, : L * m] = model.vh.transpose(0, 2, 1, 3).reshape(L * n, L * m)
    W[: L * n, -1] = model.vbias.reshape(-1)
    W[-1, : L * m] = model.hbias.reshape(-1)
    return W


def expand_forgetting_matrix(A: np.ndarray, n: int, m: int) -> np.ndarray:
    """Blow the ``(p+2, p+2)`` forgetting matrix up to the full matrix size."""
    p1 = A.shape[0] - 1
    rows = np.r_[np.repeat(np.arange(p1), n), p1]
    cols = np.r_[np.repeat(np.arange(p1), m), p1]
    return A[np.ix_(rows, cols)]


def block_energy(model: PRBM, v, h) -> float:
    """Energy through the assembled matrix, ``-v~^T (A o W~) h~``.

    Independent of :func:`energy`; kept for cross-checking the two layouts.
    """
    s = model.shape
    v = _check_units(v, s.visible_shape, "visible")
    h = _check_units(h, s.hidden_shape, "hidden")
    masked = expand_forgetting_matrix(model.forgetting, s.n, s.m) * assemble_full_matrix(model)
    out = -np.einsum("...a,ab,...b->...", augment(v), masked, augment(h))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class GradientBlocks:
    """Per-block gradient with the same layout as :class:`PRBM` weights."""

    vh: np.ndarray
    vbias: np.ndarray
    hbias: np.ndarray

    @classmethod
    def zeros_like(cls, model: PRBM) -> "GradientBlocks":
        return cls(np.zeros_like(model.vh), np.zeros_like(model.vbias), np.zeros_like(model.hbias))

    def __add__(self, other: "GradientBlocks") -> "GradientBlocks":
        return GradientBlocks(self.vh + other.vh, self.vbias + other.vbias, self.hbias + other.hbias)

    def __sub__(self, other: "GradientBlocks") -> "GradientBlocks":
        return GradientBlocks(self.vh - other.vh, self.vbias - other.vbias, self.hbias - other.hbias)

    def __mul__(self, c: float) -> "GradientBlocks":
        return GradientBlocks(self.vh * c, self.vbias * c, self.hbias * c)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "GradientBlocks":
        return GradientBlocks(self.vh / c, self.vbias / c, self.hbias / c)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.vh.ravel(), self.vbias.ravel(), self.hbias.ravel()])

    def allclose(self, other: "GradientBlocks", **kw) -> bool:
        return np.allclose(self.flat(), other.flat(), **kw)
