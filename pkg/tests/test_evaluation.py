import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prbm.errors import DimensionError, DomainError
from prbm.evaluation import (
    ComparisonTable,
    ConfusionMatrix,
    backtest,
    compare_models,
    confusion,
    evaluate,
    misclassification_loss,
    signed,
    summarize_losses,
)

REPORTED_COUNTS = ConfusionMatrix(up_up=5756, up_down=6246, down_up=5057, down_down=8341)


def labels_from_counts(cm):
    """Expand confusion counts into aligned +-1 label vectors."""
    pairs = [(1, 1)] * cm.up_up + [(1, -1)] * cm.up_down + [(-1, 1)] * cm.down_up + [(-1, -1)] * cm.down_down
    a, f = np.array(pairs).T
    return a, f


class TestLoss:
    def test_reported_counts(self):
        a, f = labels_from_counts(REPORTED_COUNTS)
        assert misclassification_loss(a, f) == pytest.approx(11303 / 25400, abs=1e-15)
        assert abs(misclassification_loss(a, f) - 0.445) < 1e-10

    def test_perfect_and_inverted(self):
        a = np.array([[1, -1, 1], [-1, -1, 1]])
        assert misclassification_loss(a, a) == 0.0
        assert misclassification_loss(a, -a) == 1.0

    def test_errors(self):
        with pytest.raises(DimensionError):
            misclassification_loss([1, -1], [1])
        with pytest.raises(DomainError):
            misclassification_loss([1, 0], [1, 1])
        with pytest.raises(DimensionError):
            misclassification_loss([], [])

    @pytest.mark.parametrize("a, f", list(itertools.product(itertools.product((0, 1), repeat=4), repeat=2)))
    def test_encoding_bridge_exhaustive(self, a, f):
        direct = sum(x != y for x, y in zip(a, f)) / 4
        assert misclassification_loss(signed(a), signed(f)) == direct

    @given(st.lists(st.tuples(st.sampled_from([-1, 1]), st.sampled_from([-1, 1])), min_size=1, max_size=50))
    def test_loss_and_accuracy(self, pairs):
        a, f = np.array(pairs).T
        loss = misclassification_loss(a, f)
        assert 0.0 <= loss <= 1.0
        assert loss + np.mean(a == f) == pytest.approx(1.0)

    def test_signed_rejects(self):
        with pytest.raises(DomainError):
            signed([0, 2])


class TestConfusion:
    def test_round_trip_reported_counts(self):
        a, f = labels_from_counts(REPORTED_COUNTS)
        cm = confusion(a, f)
        assert cm == REPORTED_COUNTS
        assert cm.total == 25400 and cm.wins == 14097 and cm.losses == 11303
        assert cm.loss == misclassification_loss(a, f)

    def test_single_cell(self):
        cm = confusion(np.ones(7), np.ones(7))
        assert (cm.up_up, cm.up_down, cm.down_up, cm.down_down) == (7, 0, 0, 0)

    def test_planted_errors(self):
        rng = np.random.default_rng(0)
        a = np.where(rng.random((40, 5)) < 0.5, 1, -1)
        flip = np.zeros_like(a, dtype=bool)
        flip[::3, 1] = True
        flip[5, :] = True
        f = np.where(flip, -a, a)
        cm = confusion(a, f)
        assert cm.up_down == int(np.sum(flip & (a == 1)))
        assert cm.down_up == int(np.sum(flip & (a == -1)))
        assert cm.losses == int(flip.sum())

    def test_negative_counts(self):
        with pytest.raises(DomainError):
            ConfusionMatrix(1, -1, 0, 0)

    def test_text_layout(self):
        text = REPORTED_COUNTS.to_text()
        assert "5,756" in text and "8,341" in text
        assert text.splitlines()[1].split() == ["Real", "direction", "Up", "Down"]


class TestBacktest:
    def test_reported_counts(self):
        a, f = labels_from_counts(REPORTED_COUNTS)
        res = backtest(a, f, np.where(a > 0, 1.0, -1.0))
        assert (res.wins, res.losses) == (14097, 11303)
        assert abs(res.ratio - 1.2472) < 5e-5

    def test_perfect(self):
        a = np.array([1, -1, 1])
        res = backtest(a, a, np.array([0.5, -0.25, 1.0]))
        assert res.losses == 0 and res.ratio_infinite and res.ratio == float("inf")
        assert res.strategy_return == pytest.approx((0.5 + 0.25 + 1.0) / 3)

    def test_four_trades(self):
        moves = np.array([1.0, -1.0, 1.0, -1.0])
        actual = np.where(moves > 0, 1, -1)
        predicted = np.array([1, 1, 1, -1])
        res = backtest(actual, predicted, moves)
        assert (res.wins, res.losses, res.ratio) == (3, 1, 3.0)
        assert res.strategy_return == pytest.approx((1 + 1 + 1 + 1 - 2) / 4)
        assert not res.ratio_infinite

    def test_basis(self):
        res = backtest([1, -1], [1, 1], [2.0, -1.0], notional=10.0, basis=[100.0, 50.0])
        assert res.strategy_return == pytest.approx((2.0 - (-1.0) * -1) / 150.0)

    def test_shape(self):
        with pytest.raises(DimensionError):
            backtest([1, -1], [1, -1], [1.0])


class TestEvaluate:
    def test_report_invariants(self, tmp_path):
        rng = np.random.default_rng(1)
        moves = rng.standard_normal((30, 4))
        actual = (moves > 0).astype(int)
        pred = rng.integers(0, 2, (30, 4))
        rep = evaluate(actual, pred, moves)
        c = rep.confusion
        assert rep.loss == (c.up_down + c.down_up) / c.total
        assert rep.wins == c.up_up + c.down_down and rep.losses == c.up_down + c.down_up
        assert rep.wins + rep.losses == actual.size
        rep.to_csv(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "metric,value" and lines[1] == f"loss,{rep.loss!r}"
        assert "win/loss ratio" in rep.to_text()

    def test_perfect_predictor(self):
        moves = np.array([[0.1, -0.2], [0.3, 0.0]])
        actual = (moves > 0).astype(int)
        rep = evaluate(actual, actual, moves)
        assert rep.loss == 0.0 and rep.backtest.ratio_infinite
        assert "inf" in rep.to_text()


P_RBM_ROW = (0.4450, 0.4945, 0.4638, 0.4979, 0.4830)
RW_ROW = (0.4798, 0.4790, 0.4759, 0.5289, 0.4780)


class TestSummary:
    def test_prbm_row(self):
        mean, std = summarize_losses(P_RBM_ROW)
        assert abs(mean - 0.4768) < 5e-4 and abs(std - 0.0222) < 5e-4

    def test_rw_row_sample_std(self):
        mean, std = summarize_losses(RW_ROW)
        assert abs(mean - 0.4883) < 5e-4
        assert std == pytest.approx(0.022732, abs=1e-6)

    @pytest.mark.parametrize(
        "row, printed",
        [
            (RW_ROW, 0.0203),
            ((0.4571, 0.4404, 0.4588, 0.4582, 0.4587), 0.0072),  # VAR(1)
            ((0.4386, 0.4029, 0.4158, 0.4495, 0.4432), 0.0177),  # 3 layer LSTM
            ((0.4542, 0.4542, 0.4572, 0.4563, 0.4560), 0.0012),  # 1 layer LSTM
        ],
    )
    def test_other_rows_use_population_std(self, row, printed):
        assert abs(summarize_losses(row, ddof=0)[1] - printed) < 1e-4
        assert abs(summarize_losses(row, ddof=1)[1] - printed) > 1e-4

    def test_prbm_row_is_not_population_std(self):
        assert abs(summarize_losses(P_RBM_ROW, ddof=0)[1] - 0.0222) > 2e-3

    def test_single_run(self):
        assert summarize_losses([0.4]) == (0.4, 0.0)

    def test_empty(self):
        with pytest.raises(DomainError):
            summarize_losses([])


class FakeSplit:
    def __init__(self, actual):
        self.val_actual = actual


class TestCompare:
    def test_deterministic_predictor_has_zero_std(self):
        actual = np.array([[1, 0], [0, 1], [1, 1]])
        table = compare_models({"const": lambda split, ss: np.ones_like(actual)}, FakeSplit(actual), 5, seed=0)
        assert table.losses.shape == (1, 5)
        assert table.summary("const") == (pytest.approx(2 / 6), 0.0)

    def test_layout_and_summary(self, tmp_path):
        actual = np.random.default_rng(0).integers(0, 2, (20, 3))

        def noisy(split, ss):
            return np.random.Generator(np.random.PCG64(ss)).integers(0, 2, actual.shape)

        table = compare_models({"noisy": noisy, "truth": lambda s, ss: actual}, FakeSplit(actual), 3, seed=4)
        assert table.header() == ["Model", "1", "2", "3", "Mean", "Std"]
        for row, cells in zip(table.rows(), table.losses):
            assert row[-2] == np.mean(cells) and row[-1] == np.std(cells, ddof=1)
        table.to_csv(tmp_path / "c.csv")
        assert (tmp_path / "c.csv").read_text().splitlines()[0] == "Model,1,2,3,Mean,Std"
        assert table.to_text().splitlines()[2].startswith("truth")
        again = compare_models({"noisy": noisy, "truth": lambda s, ss: actual}, FakeSplit(actual), 3, seed=4)
        np.testing.assert_array_equal(again.losses, table.losses)

    def test_every_model_sees_same_seed(self):
        seen = {}

        def record(name):
            def predict(split, ss):
                seen.setdefault(name, []).append(ss.generate_state(2).tolist())
                return np.ones((2, 2), dtype=int)

            return predict

        compare_models({"a": record("a"), "b": record("b")}, FakeSplit(np.ones((2, 2), dtype=int)), 3, seed=9)
        assert seen["a"] == seen["b"]
        assert len({tuple(s) for s in seen["a"]}) == 3

    def test_bad_iterations(self):
        with pytest.raises(DomainError):
            compare_models({}, FakeSplit(np.ones((1, 1))), 0, seed=0)

    def test_text_table(self):
        table = ComparisonTable(("p-RBM", "RW"), np.array([P_RBM_ROW, RW_ROW]))
        lines = table.to_text().splitlines()
        assert lines[0].split() == ["Model", "1", "2", "3", "4", "5", "Mean", "Std"]
        assert lines[1].split()[-2:] == ["0.4768", "0.0222"]
