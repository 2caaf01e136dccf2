import struct
import zlib

import pytest

from stormloc.errors import (
    BadMagicError,
    ChecksumError,
    TruncatedFileError,
    VersionMismatchError,
)
from stormloc.pack import MAGIC, read_pack, write_pack
from stormloc.synth import Dataset


class TestRoundTrip:
    def test_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.stpk"
        write_pack(Dataset(samples=[], split_assignment=[], seed=42), path)
        out = read_pack(path)
        assert out.seed == 42
        assert out.samples == []

    def test_bit_exact_round_trip(self, tiny_dataset, tmp_path):
        path = tmp_path / "d.stpk"
        write_pack(tiny_dataset, path)
        assert read_pack(path) == tiny_dataset

    def test_write_is_stable(self, tiny_dataset, tmp_path):
        a, b = tmp_path / "a.stpk", tmp_path / "b.stpk"
        write_pack(tiny_dataset, a)
        write_pack(tiny_dataset, b)
        assert a.read_bytes() == b.read_bytes()

    def test_rewrite_after_read_is_identical(self, tiny_dataset, tmp_path):
        a, b = tmp_path / "a.stpk", tmp_path / "b.stpk"
        write_pack(tiny_dataset, a)
        write_pack(read_pack(a), b)
        assert a.read_bytes() == b.read_bytes()


class TestFormatErrors:
    @pytest.fixture()
    def packed(self, tiny_dataset, tmp_path):
        path = tmp_path / "d.stpk"
        write_pack(tiny_dataset, path)
        return path

    def test_bad_magic(self, packed):
        blob = packed.read_bytes()
        packed.write_bytes(b"NOTAPACK" + blob[8:])
        with pytest.raises(BadMagicError):
            read_pack(packed)

    def test_version_mismatch(self, packed):
        blob = bytearray(packed.read_bytes())
        payload = bytearray(blob[8:-4])
        struct.pack_into("<I", payload, 0, 99)
        packed.write_bytes(
            bytes(blob[:8]) + bytes(payload) + struct.pack("<I", zlib.crc32(bytes(payload)))
        )
        with pytest.raises(VersionMismatchError):
            read_pack(packed)

    def test_truncated_payload(self, packed):
        blob = packed.read_bytes()
        # keep a valid CRC over the shortened payload so truncation is what trips
        payload = blob[8:-4][: len(blob) // 2]
        packed.write_bytes(MAGIC + payload + struct.pack("<I", zlib.crc32(payload)))
        with pytest.raises(TruncatedFileError):
            read_pack(packed)

    def test_checksum_failure(self, packed):
        blob = bytearray(packed.read_bytes())
        blob[100] ^= 0xFF
        packed.write_bytes(bytes(blob))
        with pytest.raises(ChecksumError):
            read_pack(packed)

    def test_corrupt_magic_returns_no_partial_data(self, packed):
        blob = packed.read_bytes()
        packed.write_bytes(b"XXXXXXXX" + blob[8:])
        try:
            read_pack(packed)
        except BadMagicError:
            pass
        else:  # pragma: no cover
            pytest.fail("expected BadMagicError")
