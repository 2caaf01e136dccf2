"""Synthetic cyclone scenes with ground-truth centers and controlled label noise.

Every sample is built from an analytic vortex (linear spin-up to ``v_max`` at
``r_max_km``, 1/r decay beyond) so the true center is unambiguous. Labels are
then corrupted with a configurable probability by a random cell offset, which
mimics the location noise seen when pairing wind reanalyses with best-track
archives.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, NumericError, OutOfBasinError
from .grid import (
    CellIndex,
    GeoPoint,
    GridSpec,
    cell_index,
    distance_field_km,
    in_basin,
)

MAX_WIND_MS = 150.0

SPLIT_NAMES = ("train", "val", "test")

#: Start of the synthetic 3-hourly timeline.
EPOCH = datetime(1980, 1, 1, 0, 0, tzinfo=timezone.utc)


@dataclass(frozen=True, eq=False)
class WindField:
    """A two-channel (u east, v north) wind snapshot on a grid, in m/s."""

    u: np.ndarray
    v: np.ndarray
    grid: GridSpec
    timestamp: datetime

    def __post_init__(self) -> None:
        shape = (self.grid.height, self.grid.width)
        if self.u.shape != shape or self.v.shape != shape:
            raise DimensionError(f"wind planes must be {shape}, got {self.u.shape}/{self.v.shape}")
        if not (np.isfinite(self.u).all() and np.isfinite(self.v).all()):
            raise NumericError("wind field contains non-finite values")
        if max(np.abs(self.u).max(), np.abs(self.v).max(), 0.0) > MAX_WIND_MS:
            raise NumericError(f"wind speed component exceeds {MAX_WIND_MS} m/s")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WindField):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.timestamp == other.timestamp
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
        )


@dataclass(frozen=True)
class VortexSpec:
    """Analytic vortex: tangential speed v_max*(r/r_max) inside, v_max*(r_max/r) outside."""

    center: GeoPoint
    v_max: float
    r_max_km: float
    spin: int = 1  # +1 = counter-clockwise (NH cyclonic), -1 = clockwise

    def __post_init__(self) -> None:
        if not 5.0 < self.v_max <= 80.0:
            raise ConfigError(f"v_max {self.v_max} outside (5, 80] m/s")
        if not 20.0 < self.r_max_km <= 500.0:
            raise ConfigError(f"r_max {self.r_max_km} outside (20, 500] km")
        if self.spin not in (1, -1):
            raise ConfigError("spin must be +1 or -1")


@dataclass(frozen=True)
class NoiseModel:
    """Label corruption and background-wind parameters."""

    corrupt_prob: float = 0.25
    offset_min_cells: int = 3
    offset_max_cells: int = 10
    background_sigma: float = 2.0  # m/s

    def __post_init__(self) -> None:
        if not 0.0 <= self.corrupt_prob <= 1.0:
            raise ConfigError("corrupt_prob must be in [0, 1]")
        if self.offset_min_cells < 1 or self.offset_max_cells <= self.offset_min_cells:
            raise ConfigError("offset range must satisfy 1 <= min < max")
        if self.background_sigma < 0:
            raise ConfigError("background_sigma must be >= 0")


@dataclass(frozen=True, eq=False)
class Sample:
    """One wind field with its (possibly corrupted) training label.

    ``true_cell`` is the synthetic ground truth; it is None for ingested real
    data. ``clamped`` marks corrupted labels whose offset was cut down by the
    grid boundary.
    """

    field: WindField
    label_cell: CellIndex
    true_cell: CellIndex | None
    corrupted: bool
    clamped: bool = False

    def __post_init__(self) -> None:
        if not self.corrupted and self.true_cell is not None and self.label_cell != self.true_cell:
            raise ConfigError("uncorrupted sample must have label_cell == true_cell")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.field == other.field
            and self.label_cell == other.label_cell
            and self.true_cell == other.true_cell
            and self.corrupted == other.corrupted
            and self.clamped == other.clamped
        )


@dataclass(eq=False)
class Dataset:
    """Samples plus a per-sample train/val/test tag and the generating seed."""

    samples: list[Sample]
    split_assignment: list[str]
    seed: int

    def __post_init__(self) -> None:
        if len(self.samples) != len(self.split_assignment):
            raise ConfigError("one split tag per sample required")
        bad = set(self.split_assignment) - set(SPLIT_NAMES)
        if bad:
            raise ConfigError(f"unknown split tags {bad}")

    def __len__(self) -> int:
        return len(self.samples)

    def indices(self, split: str) -> list[int]:
        if split not in SPLIT_NAMES:
            raise ConfigError(f"unknown split {split!r}")
        return [i for i, tag in enumerate(self.split_assignment) if tag == split]

    def subset(self, split: str) -> list[Sample]:
        return [self.samples[i] for i in self.indices(split)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.split_assignment == other.split_assignment
            and self.samples == other.samples
        )


def rankine_wind(spec: VortexSpec, grid: GridSpec, timestamp: datetime = EPOCH) -> WindField:
    """Evaluate the vortex's tangential wind at every cell center.

    Radial distance uses the haversine; the tangential direction comes from
    the local east/north displacement, rotated a quarter turn by ``spin``.
    """
    r = distance_field_km(grid, spec.center)
    with np.errstate(divide="ignore", invalid="ignore"):
        speed = np.where(
            r <= spec.r_max_km,
            spec.v_max * (r / spec.r_max_km),
            spec.v_max * (spec.r_max_km / np.maximum(r, 1e-12)),
        )
    lat, lon = grid.center_mesh()
    dlon = (lon - spec.center.lon + 180.0) % 360.0 - 180.0
    ex = dlon * np.cos(np.radians((lat + spec.center.lat) / 2.0))
    ey = lat - spec.center.lat
    norm = np.hypot(ex, ey)
    safe = np.maximum(norm, 1e-12)
    rx, ry = ex / safe, ey / safe
    # Counter-clockwise tangential = radial rotated +90 degrees: (rx, ry) -> (-ry, rx).
    u = np.where(norm > 0, -spec.spin * speed * ry, 0.0)
    v = np.where(norm > 0, spec.spin * speed * rx, 0.0)
    return WindField(u=u, v=v, grid=grid, timestamp=timestamp)


def compose_scene(
    vortices: Sequence[VortexSpec],
    noise: NoiseModel,
    rng: np.random.Generator,
    grid: GridSpec,
    timestamp: datetime = EPOCH,
) -> WindField:
    """Sum 1-3 vortices and add i.i.d. Gaussian background wind (u drawn first)."""
    if not 1 <= len(vortices) <= 3:
        raise ConfigError(f"a scene takes 1-3 vortices, got {len(vortices)}")
    for vx in vortices:
        if not in_basin(vx.center):
            raise OutOfBasinError(f"vortex center {vx.center} outside the basin")
    shape = (grid.height, grid.width)
    u = np.zeros(shape)
    v = np.zeros(shape)
    for vx in vortices:
        f = rankine_wind(vx, grid, timestamp)
        u += f.u
        v += f.v
    if noise.background_sigma > 0:
        u += rng.normal(0.0, noise.background_sigma, shape)
        v += rng.normal(0.0, noise.background_sigma, shape)
    return WindField(u=u, v=v, grid=grid, timestamp=timestamp)


class LabelCorruption(NamedTuple):
    cell: CellIndex
    corrupted: bool
    clamped: bool


def corrupt_label(
    true_cell: CellIndex,
    noise: NoiseModel,
    rng: np.random.Generator,
    grid: GridSpec,
) -> LabelCorruption:
    """With probability ``corrupt_prob``, displace the label by a random offset.

    The offset's Chebyshev norm is uniform over [offset_min_cells,
    offset_max_cells]; the result is clamped into the grid (flagged when
    clamping changed it).
    """
    if rng.random() >= noise.corrupt_prob:
        return LabelCorruption(true_cell, False, False)
    lo, hi = noise.offset_min_cells, noise.offset_max_cells
    while True:
        dr, dc = (int(x) for x in rng.integers(-hi, hi + 1, size=2))
        if lo <= max(abs(dr), abs(dc)) <= hi:
            break
    row = min(max(true_cell.row + dr, 0), grid.height - 1)
    col = min(max(true_cell.col + dc, 0), grid.width - 1)
    clamped = (row != true_cell.row + dr) or (col != true_cell.col + dc)
    return LabelCorruption(CellIndex.from_rc(row, col, grid), True, clamped)


def _quantize_f32(field: WindField) -> WindField:
    """Round wind values to f32 precision so pack round-trips are bit-exact."""
    return WindField(
        u=field.u.astype(np.float32).astype(np.float64),
        v=field.v.astype(np.float32).astype(np.float64),
        grid=field.grid,
        timestamp=field.timestamp,
    )


def _split_counts(n: int) -> tuple[int, int, int]:
    n_val = round(0.15 * n)
    n_test = round(0.15 * n)
    return n - n_val - n_test, n_val, n_test


def _random_point(rng: np.random.Generator, grid: GridSpec) -> GeoPoint:
    # One-cell margin keeps vortex centers strictly inside grid and basin.
    lat = grid.lat0 + rng.uniform(grid.dlat, (grid.height - 2) * grid.dlat)
    lon = grid.lon0 + rng.uniform(grid.dlon, (grid.width - 2) * grid.dlon)
    return GeoPoint(lat=lat, lon=lon)


def build_dataset(
    n: int,
    noise: NoiseModel,
    seed: int,
    grid: GridSpec,
) -> Dataset:
    """Generate ``n`` single-storm scenes with noisy labels and 70/15/15 splits.

    Each sample draws from its own generator derived from (seed, index), in a
    fixed order (primary vortex, distractor coin and parameters, background
    noise, label corruption), so generation is deterministic and can be
    sharded by sample.
    """
    if n < 20:
        raise ConfigError("need at least 20 samples for a meaningful split")
    children = np.random.SeedSequence(seed).spawn(n + 1)
    samples: list[Sample] = []
    for i in range(n):
        rng = np.random.default_rng(children[i])
        center = _random_point(rng, grid)
        primary = VortexSpec(
            center=center,
            v_max=rng.uniform(15.0, 60.0),
            r_max_km=rng.uniform(50.0, 300.0),
            spin=1,
        )
        vortices = [primary]
        if rng.random() < 0.2:
            vortices.append(
                VortexSpec(
                    center=_random_point(rng, grid),
                    v_max=rng.uniform(6.0, min(25.0, 0.7 * primary.v_max)),
                    r_max_km=rng.uniform(50.0, 250.0),
                    spin=1,
                )
            )
        field = _quantize_f32(
            compose_scene(vortices, noise, rng, grid, timestamp=EPOCH + timedelta(hours=3 * i))
        )
        true_cell = cell_index(primary.center, grid)
        lab = corrupt_label(true_cell, noise, rng, grid)
        samples.append(
            Sample(
                field=field,
                label_cell=lab.cell,
                true_cell=true_cell,
                corrupted=lab.corrupted,
                clamped=lab.clamped,
            )
        )
    n_train, n_val, n_test = _split_counts(n)
    perm = np.random.default_rng(children[n]).permutation(n)
    tags = [""] * n
    for k, idx in enumerate(perm):
        if k < n_train:
            tags[idx] = "train"
        elif k < n_train + n_val:
            tags[idx] = "val"
        else:
            tags[idx] = "test"
    return Dataset(samples=samples, split_assignment=tags, seed=seed)
