"""
Checking the reported numbers
=============================

The published error rates come from a data pull that no longer exists,
but the arithmetic around them can still be redone.
"""

import numpy as np

from prbm.data import split_index
from prbm.evaluation import ConfusionMatrix, summarize_losses

# Confusion counts for 100 stocks: (real, predicted) = up/up, up/down, down/up, down/down
cm = ConfusionMatrix(5756, 6246, 5057, 8341)
print(cm.to_text())
print(f"error {cm.loss:.4f}, {cm.wins:,} wins, {cm.losses:,} losses, ratio {cm.wins / cm.losses:.4f}")

# Per-iteration errors of the repeated runs
rows = {
    "p-RBM": (0.4450, 0.4945, 0.4638, 0.4979, 0.4830),
    "RW": (0.4798, 0.4790, 0.4759, 0.5289, 0.4780),
    "VAR(1)": (0.4571, 0.4404, 0.4588, 0.4582, 0.4587),
}
for name, row in rows.items():
    mean, sample = summarize_losses(row, ddof=1)
    _, population = summarize_losses(row, ddof=0)
    print(f"{name:7s} mean {mean:.4f}  sample std {sample:.4f}  population std {population:.4f}")
# The p-RBM row matches the sample std, the others the population std.

# How many validation decisions does a 20-day pull give?
for T in (1560, 1300):
    windows = T - 30
    val = windows - split_index(windows, 0.8)
    print(f"T={T}: {windows} windows, {val} validation windows, {val * 100:,} decisions")
