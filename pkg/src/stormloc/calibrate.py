"""Post-hoc temperature scaling: one positive scalar dividing all logits.

The temperature minimizes validation NLL. It never changes any argmax, only
confidence. The search is derivative-free golden-section on log T, which is
deterministic and robust to the objective's flatness at large T.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .nn.ops import stable_softmax
from .nn.unet import ModelState, forward_batch, stack_field
from .synth import Sample

T_MIN = 0.05
T_MAX = 20.0
LOG_T_TOL = 1e-4

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def nll_at_temperature(logits: np.ndarray, targets: np.ndarray, temperature: float) -> float:
    """Mean negative log-likelihood of temperature-scaled logit rows."""
    z = logits / temperature
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(targets)), targets]))


def fit_temperature_to_logits(logits: np.ndarray, targets: np.ndarray) -> float:
    """Golden-section search for argmin_T NLL(logits / T) on log T.

    The bracket is [log T_MIN, log T_MAX]; iteration stops once the bracket
    is narrower than LOG_T_TOL. T = 1 is never beaten by the returned value.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or len(logits) != len(targets):
        raise ConfigError("need one target per logit row")

    def objective(log_t: float) -> float:
        return nll_at_temperature(logits, targets, math.exp(log_t))

    a, b = math.log(T_MIN), math.log(T_MAX)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > LOG_T_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    t = math.exp((a + b) / 2.0)
    # The argmin includes T = 1; guard against a bracket that narrowly misses it.
    if nll_at_temperature(logits, targets, t) > nll_at_temperature(logits, targets, 1.0):
        return 1.0
    return t


def validation_logits(model: ModelState, samples: list[Sample], batch_size: int = 32
                      ) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([stack_field(s.field) for s in samples])
    y = np.array([s.label_cell.flat for s in samples], dtype=np.int64)
    rows = []
    for s in range(0, len(x), batch_size):
        rows.append(forward_batch(model, x[s:s + batch_size]).data)
    return np.concatenate(rows, axis=0), y


def fit_temperature(model: ModelState, val_samples: list[Sample]) -> ModelState:
    """Fit the temperature on validation samples and store it on the model."""
    if not val_samples:
        raise ConfigError("temperature fitting needs a nonempty validation split")
    logits, targets = validation_logits(model, val_samples)
    model.temperature = fit_temperature_to_logits(logits, targets)
    return model


def calibrated_proba(logits: np.ndarray, temperature: float) -> np.ndarray:
    return stable_softmax(logits / temperature, axis=-1)
