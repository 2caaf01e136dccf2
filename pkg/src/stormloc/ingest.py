"""Ingest real gridded wind data from a portable manifest + raw-field layout.

Manifest format (text, UTF-8):

    # height=128 width=224 lat0=-0.375 lon0=43.625
    timestamp,lat,lon,field_file
    1980-10-19T03:00:00Z,10.4,75.7,fields/19801019_0300.f32
    ...

The ``#`` header declares the fine-grid dimensions and the center of its
cell (0, 0). Each field file is raw little-endian f32: the full u plane then
the full v plane, row-major at the fine resolution. Paths are relative to
the manifest.

Ingestion applies the same restrictions the training pipeline assumes:
3-hourly timestamps only, labels inside the basin, exactly one storm per
timestamp (timestamps with several label rows are dropped). Fields are
block-mean coarsened to the target grid, and labels converted to cells. The
fine grid must tile the target grid exactly: an integer factor per axis and
fine cell (0,0) centered so that factor x factor blocks average to target
cell centers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError, OutOfBasinError
from .grid import GeoPoint, GridSpec, cell_index, coarsen, in_basin, snap_filter
from .synth import Dataset, Sample, WindField, _quantize_f32, _split_counts

_GEOM_TOL = 1e-6


@dataclass(frozen=True)
class _ManifestRow:
    timestamp: datetime
    lat: float
    lon: float
    field_file: str


def _parse_header(line: str, path: Path) -> dict[str, float]:
    if not line.startswith("#"):
        raise DataError(f"{path}: first line must be the '# height=... width=...' header")
    out: dict[str, float] = {}
    for token in line[1:].split():
        if "=" not in token:
            raise DataError(f"{path}: malformed header token {token!r}")
        key, val = token.split("=", 1)
        out[key] = float(val)
    for key in ("height", "width", "lat0", "lon0"):
        if key not in out:
            raise DataError(f"{path}: header missing {key}=")
    return out


def _parse_timestamp(text: str, path: Path) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise DataError(f"{path}: bad timestamp {text!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _read_raw_field(path: Path, height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    if not path.exists():
        raise DataError(f"missing field file {path}")
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != 2 * height * width:
        raise DataError(f"{path}: expected {2 * height * width} f32 values, found {raw.size}")
    planes = raw.astype(np.float64).reshape(2, height, width)
    return planes[0], planes[1]


def ingest_table(manifest_path: str | Path, grid: GridSpec, seed: int = 0) -> Dataset:
    """Build a dataset from a manifest of labeled raw wind fields.

    Samples are ordered by timestamp; splits are assigned 70/15/15 by a
    shuffle seeded with ``seed``. Ingested samples carry no ground-truth cell.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"missing manifest {manifest_path}")
    lines = manifest_path.read_text().splitlines()
    if not lines:
        raise DataError(f"{manifest_path}: empty manifest")
    header = _parse_header(lines[0], manifest_path)
    fine_h, fine_w = int(header["height"]), int(header["width"])
    if fine_h % grid.height or fine_w % grid.width:
        raise DataError(
            f"fine dims {fine_h}x{fine_w} not divisible by target {grid.height}x{grid.width}"
        )
    factor = fine_h // grid.height
    if fine_w // grid.width != factor:
        raise DataError("coarsening factor must match on both axes")
    # Fine cell (0,0) must sit so each factor x factor block is centered on a
    # target cell: lat0_fine = lat0 - (factor-1)/2 * dlat/factor.
    fine_dlat, fine_dlon = grid.dlat / factor, grid.dlon / factor
    want_lat0 = grid.lat0 - (factor - 1) / 2.0 * fine_dlat
    want_lon0 = grid.lon0 - (factor - 1) / 2.0 * fine_dlon
    if abs(header["lat0"] - want_lat0) > _GEOM_TOL or abs(header["lon0"] - want_lon0) > _GEOM_TOL:
        raise DataError(
            f"fine grid origin ({header['lat0']}, {header['lon0']}) does not align with the "
            f"target grid (expected ({want_lat0}, {want_lon0}))"
        )

    reader = csv.DictReader(lines[1:])
    if reader.fieldnames != ["timestamp", "lat", "lon", "field_file"]:
        raise DataError(f"{manifest_path}: expected columns timestamp,lat,lon,field_file")
    rows: list[_ManifestRow] = []
    seen: set[tuple] = set()
    for raw in reader:
        row = _ManifestRow(
            timestamp=_parse_timestamp(raw["timestamp"], manifest_path),
            lat=float(raw["lat"]),
            lon=float(raw["lon"]),
            field_file=raw["field_file"],
        )
        key = (row.timestamp, row.lat, row.lon, row.field_file)
        if key in seen:
            raise DataError(f"{manifest_path}: duplicate row for timestamp {raw['timestamp']}")
        seen.add(key)
        rows.append(row)

    by_ts: dict[datetime, list[_ManifestRow]] = {}
    for row in rows:
        by_ts.setdefault(row.timestamp, []).append(row)
    kept = snap_filter(sorted(by_ts))
    samples: list[Sample] = []
    for ts in kept:
        group = by_ts[ts]
        if len({r.field_file for r in group}) > 1:
            raise DataError(f"{manifest_path}: timestamp {ts} references several field files")
        if len(group) != 1:
            continue  # more than one storm in the basin at this time
        row = group[0]
        if not in_basin(GeoPoint(lat=row.lat, lon=row.lon)):
            continue
        u_fine, v_fine = _read_raw_field(manifest_path.parent / row.field_file, fine_h, fine_w)
        try:
            label = cell_index(GeoPoint(lat=row.lat, lon=row.lon), grid)
        except OutOfBasinError as exc:
            raise OutOfBasinError(f"{manifest_path}: label at ({row.lat}, {row.lon}): {exc}") from exc
        field = _quantize_f32(
            WindField(
                u=coarsen(u_fine, factor),
                v=coarsen(v_fine, factor),
                grid=grid,
                timestamp=ts,
            )
        )
        samples.append(
            Sample(field=field, label_cell=label, true_cell=None, corrupted=False)
        )
    n = len(samples)
    n_train, n_val, _ = _split_counts(n)
    perm = np.random.default_rng(seed).permutation(n)
    tags = [""] * n
    for k, idx in enumerate(perm):
        tags[idx] = "train" if k < n_train else ("val" if k < n_train + n_val else "test")
    return Dataset(samples=samples, split_assignment=tags, seed=seed)
