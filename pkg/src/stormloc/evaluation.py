"""Localization metrics, the exact one-tailed binomial test, denoising
reports against synthetic ground truth, and preference-study tallies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .grid import cell_center, great_circle_km, CellIndex, KM_PER_DEG
from .nn.unet import ModelState, predict_cell_flat, predict_proba
from .synth import Dataset, Sample

if TYPE_CHECKING:  # records come from the study module; only the fields matter here
    from .study import PreferenceRecord

#: A rater cannot tell markers apart closer than about one cell diagonal.
RATER_INDIFFERENCE_KM = math.sqrt(2.0) * KM_PER_DEG  # ~157 km at 1 degree


def binom_test_one_tailed(k: int, n: int) -> float:
    """Exact tail P(X >= k) for X ~ Binomial(n, 1/2).

    Null: both outcomes equally likely; alternative: successes more likely.
    Exact integer binomial coefficients, summed in log space.
    """
    if n < 1 or not 0 <= k <= n:
        raise ConfigError(f"invalid binomial test ({k}, {n})")
    if k == 0:
        return 1.0

    def log_sum(lo: int, hi: int) -> float:
        logs = [math.log(math.comb(n, i)) for i in range(lo, hi + 1)]
        top = max(logs)
        return top + math.log(math.fsum(math.exp(v - top) for v in logs)) - n * math.log(2.0)

    # Summing the smaller side keeps full precision near both ends of [0, 1].
    if k - 1 < n - k + 1:
        return max(0.0, 1.0 - math.exp(log_sum(0, k - 1)))
    return min(1.0, math.exp(log_sum(k, n)))


def localization_error(model: ModelState, sample: Sample, reference: str = "label") -> float:
    """Km between the model's most probable cell center and a reference cell."""
    if reference == "label":
        ref = sample.label_cell
    elif reference == "truth":
        if sample.true_cell is None:
            raise DataError("sample has no ground-truth cell")
        ref = sample.true_cell
    else:
        raise ConfigError(f"reference must be 'label' or 'truth', got {reference!r}")
    grid = model.config.grid
    pred = CellIndex.from_flat(predict_cell_flat(model, sample.field), grid)
    return great_circle_km(cell_center(pred, grid), cell_center(ref, grid))


@dataclass(frozen=True)
class EvalRecord:
    sample_index: int
    predicted_cell: int
    label_cell: int
    true_cell: int | None
    corrupted: bool
    model_vs_label_km: float
    model_vs_truth_km: float | None
    label_vs_truth_km: float | None
    prob_at_label: float


@dataclass
class EvalReport:
    """Per-sample localization records plus corrupted-subset medians."""

    split: str
    records: list[EvalRecord] = field(default_factory=list)
    median_model_vs_truth_km: float = float("nan")
    median_label_vs_truth_km: float = float("nan")
    n_corrupted: int = 0

    def to_csv(self) -> str:
        lines = [
            "sample_index,predicted_cell,label_cell,true_cell,corrupted,"
            "model_vs_label_km,model_vs_truth_km,label_vs_truth_km,prob_at_label"
        ]
        for r in self.records:
            lines.append(
                f"{r.sample_index},{r.predicted_cell},{r.label_cell},"
                f"{'' if r.true_cell is None else r.true_cell},{int(r.corrupted)},"
                f"{r.model_vs_label_km:.3f},"
                f"{'' if r.model_vs_truth_km is None else f'{r.model_vs_truth_km:.3f}'},"
                f"{'' if r.label_vs_truth_km is None else f'{r.label_vs_truth_km:.3f}'},"
                f"{r.prob_at_label:.6g}"
            )
        return "\n".join(lines) + "\n"


def denoising_report(model: ModelState, data: Dataset, split: str) -> EvalReport:
    """Compare model-vs-truth and label-vs-truth error on the corrupted subset.

    Requires synthetic samples (ground truth present). Medians are over
    corrupted samples only; records cover the whole split.
    """
    indices = data.indices(split)
    if not indices:
        raise DataError(f"split {split!r} is empty")
    grid = model.config.grid
    report = EvalReport(split=split)
    model_err: list[float] = []
    label_err: list[float] = []
    for i in indices:
        s = data.samples[i]
        if s.true_cell is None:
            raise DataError("denoising report needs samples with ground truth")
        proba = predict_proba(model, s.field)
        pred_flat = int(np.argmax(proba))
        pred = CellIndex.from_flat(pred_flat, grid)
        p_label = float(proba.reshape(-1)[s.label_cell.flat])
        mvl = great_circle_km(cell_center(pred, grid), cell_center(s.label_cell, grid))
        mvt = great_circle_km(cell_center(pred, grid), cell_center(s.true_cell, grid))
        lvt = great_circle_km(cell_center(s.label_cell, grid), cell_center(s.true_cell, grid))
        report.records.append(
            EvalRecord(
                sample_index=i,
                predicted_cell=pred_flat,
                label_cell=s.label_cell.flat,
                true_cell=s.true_cell.flat,
                corrupted=s.corrupted,
                model_vs_label_km=mvl,
                model_vs_truth_km=mvt,
                label_vs_truth_km=lvt,
                prob_at_label=p_label,
            )
        )
        if s.corrupted:
            model_err.append(mvt)
            label_err.append(lvt)
    report.n_corrupted = len(model_err)
    if not model_err:
        # nothing corrupted: medians cover the whole split (labels == truth)
        model_err = [r.model_vs_truth_km for r in report.records]
        label_err = [r.label_vs_truth_km for r in report.records]
    report.median_model_vs_truth_km = float(np.median(model_err))
    report.median_label_vs_truth_km = float(np.median(label_err))
    return report


def simulated_rater(model: ModelState, sample: Sample) -> str:
    """Distance-only stand-in for the blinded human rater.

    Prefers whichever marker is closer to the true center by more than one
    cell diagonal; otherwise reports no preference.
    """
    if sample.true_cell is None:
        raise DataError("the simulated rater needs ground truth")
    grid = model.config.grid
    truth = cell_center(sample.true_cell, grid)
    pred = CellIndex.from_flat(predict_cell_flat(model, sample.field), grid)
    d_model = great_circle_km(cell_center(pred, grid), truth)
    d_label = great_circle_km(cell_center(sample.label_cell, grid), truth)
    if d_model < d_label - RATER_INDIFFERENCE_KM:
        return "model"
    if d_label < d_model - RATER_INDIFFERENCE_KM:
        return "label"
    return "neither"


@dataclass(frozen=True)
class PreferenceTally:
    prefer_model: int
    prefer_label: int
    neither: int
    p_value: float
    vacuous: bool = False  # no decided judgments; p reported as 1.0

    @property
    def total(self) -> int:
        return self.prefer_model + self.prefer_label + self.neither


def tally_choices(choices: Iterable[str]) -> PreferenceTally:
    """Tally resolved choices; the test uses only decided judgments."""
    counts = {"model": 0, "label": 0, "neither": 0}
    for c in choices:
        if c not in counts:
            raise ConfigError(f"unknown choice {c!r}")
        counts[c] += 1
    decided = counts["model"] + counts["label"]
    if decided == 0:
        return PreferenceTally(0, 0, counts["neither"], p_value=1.0, vacuous=True)
    return PreferenceTally(
        prefer_model=counts["model"],
        prefer_label=counts["label"],
        neither=counts["neither"],
        p_value=binom_test_one_tailed(counts["model"], decided),
    )


def study_summary(records: Sequence["PreferenceRecord"]) -> PreferenceTally:
    """Tally de-blinded preference records (choices already resolved)."""
    return tally_choices(r.resolved_choice for r in records)


def format_preference_table(tallies: dict[str, PreferenceTally]) -> str:
    """Fixed-width block of per-split preference counts and p-values."""
    splits = list(tallies)
    width = max(12, *(len(s) + 2 for s in splits))
    header = "Preference".ljust(14) + "".join(s.rjust(width) for s in splits)
    rows = [header, "-" * len(header)]
    for label, attr in (("Model", "prefer_model"), ("Label", "prefer_label"),
                        ("Neither", "neither"), ("Total", "total")):
        row = label.ljust(14)
        row += "".join(str(getattr(tallies[s], attr)).rjust(width) for s in splits)
        rows.append(row)
    rows.append("-" * len(header))
    prow = "p-value".ljust(14)
    for s in splits:
        t = tallies[s]
        prow += (f"{t.p_value:.2g}" + ("*" if t.vacuous else "")).rjust(width)
    rows.append(prow)
    if any(t.vacuous for t in tallies.values()):
        rows.append("* no decided judgments; test vacuous")
    return "\n".join(rows)
