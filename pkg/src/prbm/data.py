"""Bar ingestion, direction extraction, windowing and synthetic sequences.

Bar files are long-format CSV with header ``timestamp,symbol,open,close``,
one row per (bar, stock), ordered by timestamp. Timestamps are ISO-8601.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from datetime import datetime, timedelta
from os import PathLike

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import DataFormatError, DomainError

__all__ = [
    "BarTable",
    "DirectionDataset",
    "load_bars",
    "write_bars",
    "directions",
    "windows",
    "split",
    "split_index",
    "synth_markov",
]

COLUMNS = ("timestamp", "symbol", "open", "close")


@dataclass(frozen=True, eq=False)
class BarTable:
    timestamps: tuple[str, ...]
    symbols: tuple[str, ...]
    open: np.ndarray
    close: np.ndarray
    dropped: int = 0

    @property
    def T(self) -> int:
        return len(self.timestamps)

    @property
    def n(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True, eq=False)
class DirectionDataset:
    """Binary directions and the signed bar moves they came from, both ``(T, n)``."""

    directions: np.ndarray
    moves: np.ndarray
    symbols: tuple[str, ...] = ()
    timestamps: tuple[str, ...] = ()

    @property
    def T(self) -> int:
        return self.directions.shape[0]

    @property
    def n(self) -> int:
        return self.directions.shape[1]


def load_bars(path: str | PathLike) -> BarTable:
    """Read and validate a bar CSV.

    Timestamps with a missing price for any stock, or with a stock absent
    altogether, are dropped; the number dropped is reported through
    ``BarTable.dropped`` and a warning.
    """
    rows: dict[str, dict[str, tuple[float, float] | None]] = {}
    order: list[str] = []
    symbols: list[str] = []
    seen_symbols = set()
    last = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != COLUMNS:
            raise DataFormatError(f"{path}:1: expected header {','.join(COLUMNS)}, got {','.join(header)}")
        for record in reader:
            line = reader.line_num
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != 4:
                raise DataFormatError(f"{path}:{line}: expected 4 fields, got {len(record)}")
            ts, sym, o, c = (x.strip() for x in record)
            try:
                when = datetime.fromisoformat(ts)
            except ValueError:
                raise DataFormatError(f"{path}:{line}: bad timestamp {ts!r}") from None
            if last is not None and when < last:
                raise DataFormatError(f"{path}:{line}: timestamp {ts} goes backwards")
            last = when
            if not sym:
                raise DataFormatError(f"{path}:{line}: empty symbol")
            if ts not in rows:
                rows[ts] = {}
                order.append(ts)
            if sym in rows[ts]:
                raise DataFormatError(f"{path}:{line}: duplicate bar for {sym} at {ts}")
            if sym not in seen_symbols:
                seen_symbols.add(sym)
                symbols.append(sym)
            if not o or not c:
                rows[ts][sym] = None
                continue
            try:
                po, pc = float(o), float(c)
            except ValueError:
                raise DataFormatError(f"{path}:{line}: non-numeric price") from None
            if not (po > 0 and pc > 0 and math.isfinite(po) and math.isfinite(pc)):
                raise DataFormatError(f"{path}:{line}: prices must be positive and finite")
            rows[ts][sym] = (po, pc)

    symbols.sort()
    kept, opens, closes = [], [], []
    for ts in order:
        bar = rows[ts]
        if any(bar.get(sym) is None for sym in symbols):
            continue
        kept.append(ts)
        opens.append([bar[sym][0] for sym in symbols])
        closes.append([bar[sym][1] for sym in symbols])
    dropped = len(order) - len(kept)
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} timestamp(s) with missing values", stacklevel=2)
    shape = (len(kept), len(symbols))
    return BarTable(
        timestamps=tuple(kept),
        symbols=tuple(symbols),
        open=np.array(opens, dtype=np.float64).reshape(shape),
        close=np.array(closes, dtype=np.float64).reshape(shape),
        dropped=dropped,
    )


def write_bars(bars: BarTable, path: str | PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for t, ts in enumerate(bars.timestamps):
            for i, sym in enumerate(bars.symbols):
                w.writerow([ts, sym, f"{bars.open[t, i]:.6f}", f"{bars.close[t, i]:.6f}"])


def directions(bars: BarTable) -> DirectionDataset:
    """Direction 1 when a bar closes above its open, else 0 (flat bars are 0)."""
    moves = bars.close - bars.open
    return DirectionDataset(
        directions=(moves > 0).astype(np.int8),
        moves=moves,
        symbols=bars.symbols,
        timestamps=bars.timestamps,
    )


def windows(data, p: int) -> np.ndarray:
    """Overlapping ``(p+1, n)`` windows, stride 1, oldest window first.

    Window ``w`` covers rows ``w .. w+p``; its block 0 is row ``w+p`` (the
    latest) and block ``p`` is row ``w``.
    """
    arr = data.directions if isinstance(data, DirectionDataset) else np.asarray(data)
    if arr.ndim != 2:
        raise DomainError(f"expected a (T, n) array, got shape {arr.shape}")
    if int(p) != p or p < 0:
        raise DomainError(f"p must be a non-negative integer, got {p!r}")
    T = arr.shape[0]
    if T <= p:
        raise DomainError(f"need more than p={p} rows, got T={T}")
    view = sliding_window_view(arr, p + 1, axis=0)  # (T-p, n, p+1), oldest row first
    return np.ascontiguousarray(view[:, :, ::-1].transpose(0, 2, 1)).astype(np.float64)


def split_index(count: int, train_fraction: float = 0.8) -> int:
    """Number of leading items that go to training: ``floor(fraction * count)``."""
    if not 0.0 < train_fraction < 1.0:
        raise DomainError(f"train_fraction must lie in (0, 1), got {train_fraction!r}")
    cut = math.floor(train_fraction * count + 1e-9)
    if cut < 1 or cut >= count:
        raise DomainError(f"split of {count} items at {train_fraction} leaves one side empty")
    return cut


def split(items, train_fraction: float = 0.8):
    """Chronological split of a time-ordered stack into ``(train, validation)``."""
    cut = split_index(len(items), train_fraction)
    return items[:cut], items[cut:]


def synth_markov(
    n: int,
    p_true: int,
    T: int,
    coupling: float,
    seed: int,
    density: float = 0.2,
    start: str = "2017-06-05T09:30:00",
    step_minutes: int = 5,
) -> tuple[DirectionDataset, BarTable]:
    """Sample binary sequences with a known order-``p_true`` Markov structure.

    With ``s = 2v - 1``, unit ``i`` at time ``t`` is on with probability
    ``logistic(sum_l C[l] @ s_{t-1-l})[i]``. ``C[0]`` has ``coupling`` on its
    diagonal; every other coefficient is nonzero with probability
    ``density`` and then uniform in ``coupling * [-0.5, 0.5]``. With
    ``coupling = 0`` the columns are i.i.d. Bernoulli(0.5).

    Matching price bars are generated too: each bar moves the price by a
    random relative amount whose sign is the sampled direction, and the next
    bar opens at the previous close. Prices are rounded to 6 decimals so the
    bars survive a CSV round trip unchanged.
    """
    if n < 1 or p_true < 1 or T <= p_true:
        raise DomainError("need n >= 1, p_true >= 1 and T > p_true")
    rng = np.random.Generator(np.random.PCG64(seed))
    C = np.where(rng.random((p_true, n, n)) < density, coupling * rng.uniform(-0.5, 0.5, (p_true, n, n)), 0.0)
    C[0][np.diag_indices(n)] = coupling

    spins = np.empty((T, n))
    spins[:p_true] = np.where(rng.random((p_true, n)) < 0.5, 1.0, -1.0)
    uniforms = rng.random((T, n))
    for t in range(p_true, T):
        past = spins[t - p_true : t][::-1]  # row l is s_{t-1-l}
        logits = np.einsum("lij,lj->i", C, past)
        spins[t] = np.where(uniforms[t] < expit(logits), 1.0, -1.0)
    dirs = (spins > 0).astype(np.int8)

    mag = 0.0005 + 0.002 * np.abs(rng.standard_normal((T, n)))
    opens = np.empty((T, n))
    closes = np.empty((T, n))
    price = _round6(rng.uniform(20.0, 200.0, n))
    for t in range(T):
        opens[t] = price
        closes[t] = _round6(price * np.exp(spins[t] * mag[t]))
        price = closes[t]

    t0 = datetime.fromisoformat(start)
    stamps = tuple((t0 + timedelta(minutes=step_minutes * t)).isoformat() for t in range(T))
    symbols = tuple(f"S{i:03d}" for i in range(n))
    bars = BarTable(stamps, symbols, opens, closes)
    data = directions(bars)
    if not np.array_equal(data.directions, dirs):
        raise RuntimeError("synthetic price rounding flipped a direction")
    return data, bars


def _round6(x: np.ndarray) -> np.ndarray:
    return np.array([float(f"{v:.6f}") for v in np.ravel(x)]).reshape(np.shape(x))
