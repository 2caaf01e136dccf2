"""Deterministic mini-batch training loop with Adam and cross-entropy."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError
from .nn.adam import AdamState, adam_step
from .nn.ops import mean_cross_entropy
from .nn.unet import ModelState, forward_batch, stack_field
from .synth import Dataset

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 32
    epochs: int = 30
    lr: float = 1e-3
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    @property
    def best_epoch(self) -> int:
        """Epoch (0-based) with the lowest validation loss."""
        return int(np.argmin(self.val_loss))


@dataclass
class TrainResult:
    model: ModelState          # last-epoch parameters (the default artifact)
    best_model: ModelState     # parameters at the best-validation epoch
    history: TrainHistory


def _split_arrays(data: Dataset, split: str) -> tuple[np.ndarray, np.ndarray]:
    samples = data.subset(split)
    if not samples:
        return np.empty((0, 2, 0, 0)), np.empty(0, dtype=np.int64)
    x = np.stack([stack_field(s.field) for s in samples])
    y = np.array([s.label_cell.flat for s in samples], dtype=np.int64)
    return x, y


def _eval_loss(model: ModelState, x: np.ndarray, y: np.ndarray, batch_size: int) -> float:
    total = 0.0
    for s in range(0, len(x), batch_size):
        xb, yb = x[s:s + batch_size], y[s:s + batch_size]
        loss = mean_cross_entropy(forward_batch(model, xb), yb)
        total += loss.item() * len(xb)
    return total / len(x)


def train(model: ModelState, data: Dataset, cfg: TrainConfig) -> TrainResult:
    """Train in place and return last/best parameter snapshots plus history.

    Per epoch: a seeded shuffle of the train split, batches of
    ``cfg.batch_size`` (the final short batch is kept), one Adam step per
    batch on the mean cross-entropy. Fully deterministic given the model
    seed and ``cfg.seed``.
    """
    x_train, y_train = _split_arrays(data, "train")
    x_val, y_val = _split_arrays(data, "val")
    if len(x_train) == 0 or len(x_val) == 0:
        raise ConfigError("training needs nonempty train and val splits")
    state = AdamState.for_params(model.arrays(), lr=cfg.lr)
    history = TrainHistory()
    best_val = np.inf
    best_model = model.copy()
    n = len(x_train)
    for epoch in range(cfg.epochs):
        tic = time.perf_counter()
        if cfg.shuffle:
            order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        else:
            order = np.arange(n)
        epoch_loss = 0.0
        for bi, s in enumerate(range(0, n, cfg.batch_size)):
            idx = order[s:s + cfg.batch_size]
            logits = forward_batch(model, x_train[idx])
            loss = mean_cross_entropy(logits, y_train[idx])
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {bi}")
            loss.backward()
            adam_step(model.arrays(), model.grads(), state)
            model.zero_grad()
            epoch_loss += value * len(idx)
        val_loss = _eval_loss(model, x_val, y_val, cfg.batch_size)
        history.train_loss.append(epoch_loss / n)
        history.val_loss.append(val_loss)
        history.seconds.append(time.perf_counter() - tic)
        if val_loss < best_val:
            best_val = val_loss
            best_model = model.copy()
        log.info(
            "epoch %d/%d train %.4f val %.4f (%.1fs)",
            epoch + 1, cfg.epochs, history.train_loss[-1], val_loss, history.seconds[-1],
        )
    return TrainResult(model=model, best_model=best_model, history=history)


def save_history(history: TrainHistory, path: str | Path) -> None:
    """Write the per-epoch table as `epoch,train_loss,val_loss,seconds`."""
    lines = ["epoch,train_loss,val_loss,seconds"]
    for i, (tr, vl, sec) in enumerate(
        zip(history.train_loss, history.val_loss, history.seconds)
    ):
        lines.append(f"{i},{tr:.10g},{vl:.10g},{sec:.3f}")
    Path(path).write_text("\n".join(lines) + "\n")
