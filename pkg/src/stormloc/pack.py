"""Binary dataset pack: a portable, checksummed container for datasets.

Layout (all little-endian):

    magic    8 bytes  b"STRMPK1\\0"
    version  u32      currently 1
    seed     i64      dataset generation seed
    grid     lat0 f64, lon0 f64, dlat f64, dlon f64, height u32, width u32
    count    u32      number of samples
    per sample:
        timestamp  i64   unix seconds (UTC)
        label_cell u32   flat index
        true_cell  u32   flat index, 0xFFFFFFFF when absent
        flags      u8    bit0 = label corrupted, bit1 = offset clamped at edge
        split      u8    0 train / 1 val / 2 test
        u, v       f32[height*width] each, row-major
    crc32    u32      zlib CRC32 of everything after the magic

Wind values are stored at f32 precision; generators quantize to f32 before
packing so read(write(d)) reproduces d bit-exactly.
"""

from __future__ import annotations

import struct
import zlib
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    ChecksumError,
    DataError,
    TruncatedFileError,
    VersionMismatchError,
)
from .grid import CellIndex, GridSpec
from .synth import Dataset, Sample, WindField, SPLIT_NAMES

MAGIC = b"STRMPK1\x00"
VERSION = 1
_NO_CELL = 0xFFFFFFFF

_HEADER = struct.Struct("<Iq4d2II")  # version, seed, grid, count
_SAMPLE_HEAD = struct.Struct("<qIIBB")


def write_pack(dataset: Dataset, path: str | Path) -> None:
    """Serialize a dataset; the write is atomic (temp file + rename)."""
    grid = dataset.samples[0].field.grid if dataset.samples else None
    parts = [
        _HEADER.pack(
            VERSION,
            dataset.seed,
            grid.lat0 if grid else 0.0,
            grid.lon0 if grid else 0.0,
            grid.dlat if grid else 1.0,
            grid.dlon if grid else 1.0,
            grid.height if grid else 0,
            grid.width if grid else 0,
            len(dataset.samples),
        )
    ]
    for sample, tag in zip(dataset.samples, dataset.split_assignment):
        if grid is not None and sample.field.grid != grid:
            raise DataError("all samples in a pack must share one grid")
        flags = (1 if sample.corrupted else 0) | (2 if sample.clamped else 0)
        parts.append(
            _SAMPLE_HEAD.pack(
                int(sample.field.timestamp.timestamp()),
                sample.label_cell.flat,
                sample.true_cell.flat if sample.true_cell is not None else _NO_CELL,
                flags,
                SPLIT_NAMES.index(tag),
            )
        )
        parts.append(sample.field.u.astype("<f4").tobytes())
        parts.append(sample.field.v.astype("<f4").tobytes())
    payload = b"".join(parts)
    blob = MAGIC + payload + struct.pack("<I", zlib.crc32(payload))
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)


def read_pack(path: str | Path) -> Dataset:
    """Parse a pack file, verifying magic, version, completeness and CRC."""
    if not Path(path).exists():
        raise DataError(f"missing dataset pack {path}")
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"{path}: shorter than the magic header")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a dataset pack")
    if len(blob) < len(MAGIC) + _HEADER.size + 4:
        raise TruncatedFileError(f"{path}: header incomplete")
    version = struct.unpack_from("<I", blob, len(MAGIC))[0]
    if version != VERSION:
        raise VersionMismatchError(f"{path}: pack version {version}, expected {VERSION}")
    payload, crc_bytes = blob[len(MAGIC):-4], blob[-4:]
    if zlib.crc32(payload) != struct.unpack("<I", crc_bytes)[0]:
        raise ChecksumError(f"{path}: CRC32 mismatch")
    (_, seed, lat0, lon0, dlat, dlon, height, width, count) = _HEADER.unpack_from(payload, 0)
    offset = _HEADER.size
    grid = GridSpec(lat0=lat0, lon0=lon0, dlat=dlat, dlon=dlon, height=height, width=width) \
        if count else None
    plane = height * width * 4
    samples: list[Sample] = []
    tags: list[str] = []
    for _ in range(count):
        need = _SAMPLE_HEAD.size + 2 * plane
        if offset + need > len(payload):
            raise TruncatedFileError(f"{path}: sample data ends early")
        ts, label_flat, true_flat, flags, split_id = _SAMPLE_HEAD.unpack_from(payload, offset)
        offset += _SAMPLE_HEAD.size
        u = np.frombuffer(payload, dtype="<f4", count=height * width, offset=offset)
        offset += plane
        v = np.frombuffer(payload, dtype="<f4", count=height * width, offset=offset)
        offset += plane
        if split_id >= len(SPLIT_NAMES):
            raise DataError(f"{path}: unknown split id {split_id}")
        field = WindField(
            u=u.astype(np.float64).reshape(height, width),
            v=v.astype(np.float64).reshape(height, width),
            grid=grid,
            timestamp=datetime.fromtimestamp(ts, tz=timezone.utc),
        )
        samples.append(
            Sample(
                field=field,
                label_cell=CellIndex.from_flat(label_flat, grid),
                true_cell=None if true_flat == _NO_CELL else CellIndex.from_flat(true_flat, grid),
                corrupted=bool(flags & 1),
                clamped=bool(flags & 2),
            )
        )
        tags.append(SPLIT_NAMES[split_id])
    if offset != len(payload):
        raise DataError(f"{path}: {len(payload) - offset} trailing bytes after last sample")
    return Dataset(samples=samples, split_assignment=tags, seed=seed)
