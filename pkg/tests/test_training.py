import numpy as np
import pytest

from stormloc.calibrate import (
    fit_temperature,
    fit_temperature_to_logits,
    nll_at_temperature,
    validation_logits,
)
from stormloc.errors import ConfigError, NumericError
from stormloc.grid import DEFAULT_GRID
from stormloc.nn.adam import AdamState, adam_step
from stormloc.nn.ops import mean_cross_entropy
from stormloc.nn.unet import ModelConfig, build_unet, forward_batch, stack_field
from stormloc.synth import Dataset, NoiseModel, build_dataset
from stormloc.train import TrainConfig, save_history, train


def single_sample_dataset():
    base = build_dataset(20, NoiseModel(corrupt_prob=0.0), seed=7, grid=DEFAULT_GRID)
    s = base.samples[0]
    return Dataset(samples=[s, s], split_assignment=["train", "val"], seed=7)


class TestTrain:
    def test_overfits_single_sample(self):
        data = single_sample_dataset()
        model = build_unet(ModelConfig(grid=DEFAULT_GRID), seed=0)
        result = train(model, data, TrainConfig(batch_size=1, epochs=200, seed=0))
        assert result.history.train_loss[-1] < 0.01

    def test_bit_identical_history_for_equal_seeds(self):
        data = build_dataset(24, NoiseModel(), seed=3, grid=DEFAULT_GRID)
        histories = []
        for _ in range(2):
            model = build_unet(ModelConfig(grid=DEFAULT_GRID), seed=1)
            res = train(model, data, TrainConfig(epochs=2, seed=5))
            histories.append((tuple(res.history.train_loss), tuple(res.history.val_loss)))
        assert histories[0] == histories[1]

    def test_validation_loss_improves(self, small_run):
        _, result = small_run
        assert result.history.val_loss[-1] < result.history.val_loss[0]

    def test_history_lengths_and_finiteness(self, small_run):
        _, result = small_run
        h = result.history
        assert len(h.train_loss) == len(h.val_loss) == len(h.seconds) == 6
        assert np.isfinite(h.train_loss).all() and np.isfinite(h.val_loss).all()

    def test_single_batch_loss_mostly_monotone(self):
        data = build_dataset(32, NoiseModel(), seed=11, grid=DEFAULT_GRID)
        model = build_unet(ModelConfig(grid=DEFAULT_GRID), seed=2)
        x = np.stack([stack_field(s.field) for s in data.samples])
        y = np.array([s.label_cell.flat for s in data.samples], dtype=np.int64)
        state = AdamState.for_params(model.arrays())
        losses = []
        for _ in range(50):
            loss = mean_cross_entropy(forward_batch(model, x), y)
            losses.append(loss.item())
            loss.backward()
            adam_step(model.arrays(), model.grads(), state)
            model.zero_grad()
        upticks = sum(b > a for a, b in zip(losses, losses[1:]))
        assert upticks <= 5

    def test_non_finite_loss_aborts_with_location(self):
        data = build_dataset(24, NoiseModel(), seed=3, grid=DEFAULT_GRID)
        model = build_unet(ModelConfig(grid=DEFAULT_GRID), seed=1)
        model.params["head.b"].data[0] = np.nan
        with pytest.raises(NumericError, match="epoch 0, batch 0"):
            train(model, data, TrainConfig(epochs=1, seed=0))

    def test_empty_split_rejected(self):
        data = build_dataset(24, NoiseModel(), seed=3, grid=DEFAULT_GRID)
        no_val = Dataset(
            samples=data.samples,
            split_assignment=["train"] * len(data.samples),
            seed=3,
        )
        model = build_unet(ModelConfig(grid=DEFAULT_GRID), seed=1)
        with pytest.raises(ConfigError):
            train(model, no_val, TrainConfig(epochs=1))

    def test_best_model_tracks_best_val_epoch(self, small_run):
        data, result = small_run
        h = result.history
        assert h.val_loss[h.best_epoch] == min(h.val_loss)

    def test_save_history_round_trips(self, small_run, tmp_path):
        _, result = small_run
        path = tmp_path / "history.csv"
        save_history(result.history, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss,seconds"
        assert len(lines) == 7
        first = lines[1].split(",")
        assert float(first[1]) == pytest.approx(result.history.train_loss[0], rel=1e-9)


def calibrated_logit_rows(n_classes=8, rows_per_class=(50, 100, 150, 200, 250, 125, 75, 50)):
    """Rows all equal to log q, targets hitting class c exactly q_c of the time.

    The empirical target distribution equals softmax(logits), so T = 1
    minimizes the NLL exactly.
    """
    counts = np.array(rows_per_class)
    q = counts / counts.sum()
    logits = np.log(q)
    targets = np.repeat(np.arange(n_classes), counts)
    rows = np.tile(logits, (len(targets), 1))
    return rows, targets


class TestTemperature:
    def test_calibrated_logits_fit_near_one(self):
        rows, targets = calibrated_logit_rows()
        assert fit_temperature_to_logits(rows, targets) == pytest.approx(1.0, abs=0.05)

    def test_three_times_logits_fit_near_three(self):
        rows, targets = calibrated_logit_rows()
        t = fit_temperature_to_logits(rows * 3.0, targets)
        assert 2.5 <= t <= 3.5

    def test_scale_equivariance(self):
        # NLL(T; 2z) = NLL(T/2; z), so the argmin doubles with the logits
        rows, targets = calibrated_logit_rows()
        t1 = fit_temperature_to_logits(rows * 1.5, targets)
        t2 = fit_temperature_to_logits(rows * 3.0, targets)
        assert t2 == pytest.approx(2.0 * t1, rel=1e-3)

    def test_never_worse_than_unit_temperature(self, small_run):
        data, result = small_run
        logits, targets = validation_logits(result.model, data.subset("val"))
        t = result.model.temperature
        assert t > 0
        assert nll_at_temperature(logits, targets, t) <= nll_at_temperature(logits, targets, 1.0) + 1e-12

    def test_argmax_unchanged_by_fit(self, small_run):
        data, result = small_run
        logits, _ = validation_logits(result.model, data.subset("val"))
        before = logits.argmax(axis=1)
        after = (logits / result.model.temperature).argmax(axis=1)
        np.testing.assert_array_equal(before, after)

    def test_fit_temperature_requires_val(self, small_run):
        _, result = small_run
        with pytest.raises(ConfigError):
            fit_temperature(result.model, [])
