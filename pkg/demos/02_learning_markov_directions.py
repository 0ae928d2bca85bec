"""
Learning directions from a planted Markov process
=================================================

Synthetic up/down sequences where each stock tends to repeat its last
move. A p-RBM trained by CD-1 should pick that up, a random walk cannot.
"""

import numpy as np

from prbm import ModelShape, TrainConfig, init_model, train
from prbm.data import synth_markov
from prbm.evaluation import evaluate
from prbm.experiments import make_split, rw_predictor, var1_predictor
from prbm.exact import exact_nll
from prbm.sampling import make_rng, predict_direction

data, bars = synth_markov(n=2, p_true=1, T=600, coupling=3.0, seed=1)
print(f"{data.T} bars, {data.n} stocks, up fraction {data.directions.mean():.3f}")

# chronological 80/20 split of the stride-1 windows
split = make_split(data, p=1, train_fraction=0.8)
print(len(split.train_windows), "training windows,", len(split.val_windows), "validation windows")

model = init_model(ModelShape(n=2, m=2, p=1, alpha=0.5), make_rng(0))
model, trace = train(model, split.train_windows, TrainConfig(eta=0.05, k=1, epochs=200, seed=3),
                     validation=split.val_windows)

# the model is tiny, so the trace carries exact NLL next to the free-energy proxy
for r in trace.rows()[::50]:
    print(f"epoch {r.epoch:3d}  train NLL {r.train_nll:.4f}  val NLL {r.val_nll:.4f}")
print("final validation NLL", round(exact_nll(model, split.val_windows), 4))

pred = predict_direction(model, split.val_windows[:, 1:, :]).direction
for name, guess in [("p-RBM", pred), ("VAR(1)", var1_predictor()(split)), ("RW", rw_predictor()(split))]:
    report = evaluate(split.val_actual, guess, split.val_moves)
    print(f"{name:7s} misclassification {report.loss:.3f}  win/loss {report.win_loss_ratio:.2f}")

# the confusion matrix in the usual layout
print(evaluate(split.val_actual, pred, split.val_moves).confusion.to_text())
