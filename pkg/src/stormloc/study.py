"""Blinded preference study: item sampling, blinding, and the judgment log.

Each study item shows two anonymous markers (the model's most probable cell
and the label cell) in a randomized order. The first/second-to-model/label
assignment lives only on the server side; rater-facing payloads never carry
it. Judgments go to an append-only, checksummed, tab-separated log so that
every acknowledged record survives a crash.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .grid import GeoPoint, cell_center, CellIndex
from .nn.unet import ModelState, predict_cell_flat
from .synth import Dataset

log = logging.getLogger(__name__)

CHOICES = ("first", "second", "neither")


@dataclass(frozen=True)
class StudyItem:
    """One blinded comparison; ``first_is_model`` never leaves the server."""

    item_id: str
    split: str
    sample_index: int
    marker_first: GeoPoint
    marker_second: GeoPoint
    first_is_model: bool

    def resolve(self, choice: str) -> str:
        """Map a first/second/neither choice to model/label/neither."""
        if choice == "neither":
            return "neither"
        if choice == "first":
            return "model" if self.first_is_model else "label"
        if choice == "second":
            return "label" if self.first_is_model else "model"
        raise ConfigError(f"unknown choice {choice!r}")


@dataclass(frozen=True)
class PreferenceRecord:
    """One de-blinded judgment."""

    item_id: str
    rater_id: str
    choice: str
    timestamp: int
    resolved_choice: str


def sample_study_items(
    data: Dataset,
    split: str,
    n: int,
    seed: int,
    model: ModelState,
) -> list[StudyItem]:
    """Seeded sample of study items (without replacement) from a split.

    Marker order is randomized per item from the same seeded stream. If the
    split holds fewer than ``n`` samples, all of them are used.
    """
    indices = data.indices(split)
    if not indices:
        raise DataError(f"split {split!r} is empty")
    if len(indices) < n:
        log.warning("split %s has only %d samples; using all of them", split, len(indices))
        n = len(indices)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(indices), size=n, replace=False)
    grid = model.config.grid
    items: list[StudyItem] = []
    for k, pos in enumerate(chosen):
        idx = indices[int(pos)]
        sample = data.samples[idx]
        pred = CellIndex.from_flat(predict_cell_flat(model, sample.field), grid)
        model_pt = cell_center(pred, grid)
        label_pt = cell_center(sample.label_cell, grid)
        first_is_model = bool(rng.integers(0, 2))
        items.append(
            StudyItem(
                item_id=f"{split}-{k:03d}",
                split=split,
                sample_index=idx,
                marker_first=model_pt if first_is_model else label_pt,
                marker_second=label_pt if first_is_model else model_pt,
                first_is_model=first_is_model,
            )
        )
    return items


def rater_payload(item: StudyItem, data: Dataset) -> dict:
    """The blinded JSON-safe payload shown to a rater."""
    field = data.samples[item.sample_index].field
    grid = field.grid
    return {
        "item_id": item.item_id,
        "grid": {
            "lat0": grid.lat0,
            "lon0": grid.lon0,
            "dlat": grid.dlat,
            "dlon": grid.dlon,
            "height": grid.height,
            "width": grid.width,
        },
        "u": field.u.tolist(),
        "v": field.v.tolist(),
        "markers": [
            {"lat": item.marker_first.lat, "lon": item.marker_first.lon},
            {"lat": item.marker_second.lat, "lon": item.marker_second.lon},
        ],
    }


# --- Append-only judgment log -------------------------------------------------
#
# One record per line: item_id \t rater \t choice \t unix_ts \t crc32
# where crc32 is the decimal CRC32 of "item_id\trater\tchoice\tunix_ts".


def _line_crc(item_id: str, rater: str, choice: str, ts: int) -> int:
    return zlib.crc32(f"{item_id}\t{rater}\t{choice}\t{ts}".encode())


def format_record_line(item_id: str, rater: str, choice: str, ts: int) -> str:
    return f"{item_id}\t{rater}\t{choice}\t{ts}\t{_line_crc(item_id, rater, choice, ts)}\n"


@dataclass(frozen=True)
class LogEntry:
    item_id: str
    rater_id: str
    choice: str
    timestamp: int


def load_log(path: str | Path) -> list[LogEntry]:
    """Read the judgment log, skipping torn or corrupt trailing lines."""
    path = Path(path)
    if not path.exists():
        return []
    entries: list[LogEntry] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 5:
            log.warning("%s:%d: malformed record skipped", path, lineno)
            continue
        item_id, rater, choice, ts_text, crc_text = parts
        try:
            ts, crc = int(ts_text), int(crc_text)
        except ValueError:
            log.warning("%s:%d: malformed record skipped", path, lineno)
            continue
        if crc != _line_crc(item_id, rater, choice, ts) or choice not in CHOICES:
            log.warning("%s:%d: corrupt record skipped", path, lineno)
            continue
        entries.append(LogEntry(item_id, rater, choice, ts))
    return entries


def resolve_records(
    entries: list[LogEntry],
    items_by_id: dict[str, StudyItem],
) -> list[PreferenceRecord]:
    """De-blind log entries against the study's item table."""
    records = []
    for e in entries:
        item = items_by_id.get(e.item_id)
        if item is None:
            raise DataError(f"log references unknown item {e.item_id!r}")
        records.append(
            PreferenceRecord(
                item_id=e.item_id,
                rater_id=e.rater_id,
                choice=e.choice,
                timestamp=e.timestamp,
                resolved_choice=item.resolve(e.choice),
            )
        )
    return records
