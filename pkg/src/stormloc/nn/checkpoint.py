"""Model checkpoint file: config, temperature and f32 parameters with CRC.

Layout (little-endian):

    magic        8 bytes  b"STRMCK1\\0"
    version      u32      currently 1
    in_channels  u32
    levels       u32
    filters      u32 * levels
    grid         lat0 f64, lon0 f64, dlat f64, dlon f64, height u32, width u32
    temperature  f64
    params       f32, concatenated in canonical order: for each conv layer
                 (enc1.conv1, enc1.conv2, ..., encL.*, dec(L-1).*, ...,
                 dec1.*, head) first the kernel [out,in,3,3] then the bias
                 [out], row-major
    crc32        u32      zlib CRC32 of everything after the magic

Weights are stored at f32; save(load(p)) is byte-identical.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import (
    BadMagicError,
    ChecksumError,
    DataError,
    TruncatedFileError,
    VersionMismatchError,
)
from ..grid import GridSpec
from .tensor import Tensor
from .unet import ModelConfig, ModelState, _layer_shapes

MAGIC = b"STRMCK1\x00"
VERSION = 1

_GRID = struct.Struct("<4d2I")


def save_checkpoint(model: ModelState, path: str | Path) -> None:
    cfg = model.config
    parts = [
        struct.pack("<3I", VERSION, cfg.in_channels, cfg.levels),
        struct.pack(f"<{cfg.levels}I", *cfg.encoder_filters),
        _GRID.pack(cfg.grid.lat0, cfg.grid.lon0, cfg.grid.dlat, cfg.grid.dlon,
                   cfg.grid.height, cfg.grid.width),
        struct.pack("<d", model.temperature),
    ]
    for key in model.param_order():
        parts.append(model.params[key].data.astype("<f4").tobytes())
    payload = b"".join(parts)
    blob = MAGIC + payload + struct.pack("<I", zlib.crc32(payload))
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> ModelState:
    if not Path(path).exists():
        raise DataError(f"missing checkpoint {path}")
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"{path}: shorter than the magic header")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a checkpoint file")
    if len(blob) < len(MAGIC) + 12 + 4:
        raise TruncatedFileError(f"{path}: header incomplete")
    payload = blob[len(MAGIC):-4]
    if zlib.crc32(payload) != struct.unpack("<I", blob[-4:])[0]:
        raise ChecksumError(f"{path}: CRC32 mismatch")
    version, in_channels, levels = struct.unpack_from("<3I", payload, 0)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: checkpoint version {version}, expected {VERSION}")
    offset = 12
    filters = struct.unpack_from(f"<{levels}I", payload, offset)
    offset += 4 * levels
    lat0, lon0, dlat, dlon, height, width = _GRID.unpack_from(payload, offset)
    offset += _GRID.size
    (temperature,) = struct.unpack_from("<d", payload, offset)
    offset += 8
    cfg = ModelConfig(
        grid=GridSpec(lat0=lat0, lon0=lon0, dlat=dlat, dlon=dlon, height=height, width=width),
        in_channels=in_channels,
        encoder_filters=tuple(int(f) for f in filters),
    )
    params: dict[str, Tensor] = {}
    for name, cin, cout in _layer_shapes(cfg):
        for suffix, shape in (("w", (cout, cin, 3, 3)), ("b", (cout,))):
            n = int(np.prod(shape))
            if offset + 4 * n > len(payload):
                raise TruncatedFileError(f"{path}: parameter data ends early at {name}.{suffix}")
            arr = np.frombuffer(payload, dtype="<f4", count=n, offset=offset)
            params[f"{name}.{suffix}"] = Tensor(arr.astype(np.float64).reshape(shape))
            offset += 4 * n
    if offset != len(payload):
        raise TruncatedFileError(f"{path}: {len(payload) - offset} unexpected trailing bytes")
    return ModelState(params, cfg, temperature=temperature)
