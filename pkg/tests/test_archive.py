"""Tests for the binary strategy archive and its compressors."""

import struct

import numpy as np
import pytest

from qsv_toolkit.archive import (
    EFFECT_DTYPE,
    StrategyArchive,
    read_strategy_archive,
    write_strategy_archive,
)
from qsv_toolkit.compression import (
    CompressionInput,
    NoOpCompressor,
    ZstdCompressor,
    create_compressor,
    create_compressor_from_toc,
)
from qsv_toolkit.errors import SchemaError
from qsv_toolkit.families import FAMILIES, FamilyParams, build_strategy
from qsv_toolkit.graphs import Graph
from qsv_toolkit.local_strategies import bell_strategy, stabilizer_strategy


@pytest.fixture(
    params=[
        pytest.param(NoOpCompressor(), id="noop"),
        pytest.param(ZstdCompressor(compression_level=3), id="zstd"),
    ]
)
def compressor(request):
    """Parameterized fixture providing different compressor implementations."""
    return request.param


def _assert_same_strategy(a, b):
    assert a.label == b.label
    assert a.predicted_gap == b.predicted_gap
    assert a.metadata == b.metadata
    assert a.target.fidelity(b.target) == pytest.approx(1.0)
    assert len(a.tests) == len(b.tests)
    for x, y in zip(a.tests, b.tests):
        assert x.probability == y.probability
        assert x.name == y.name
        assert np.array_equal(x.effect.matrix, y.effect.matrix)
        assert (x.branches is None) == (y.branches is None)


class TestNoOpCompressor:
    def test_prepare_effect_keeps_data(self):
        result = NoOpCompressor().prepare_effect(b"\x01\x02", "e0")
        assert isinstance(result, CompressionInput)
        assert result.payload == b"\x01\x02"
        assert result.raw_size == 2

    def test_finalize_records_blob_offsets(self):
        c = NoOpCompressor()
        inputs = [(f"e{i}", c.prepare_effect(b"x" * (i + 1), f"e{i}")) for i in range(3)]
        blob, toc = c.finalize(inputs)
        assert blob == b"x" + b"xx" + b"xxx"
        assert [b["offset"] for b in toc["blobs"]] == [0, 1, 3]
        c.rebase(toc, 64)
        assert [b["offset"] for b in toc["blobs"]] == [64, 65, 67]

    def test_decompress_requires_toc(self):
        with pytest.raises(RuntimeError, match="not initialized"):
            NoOpCompressor().decompress_effect(0)


class TestZstdCompressor:
    def test_repetitive_effect_compresses(self):
        # Projectors are mostly zeros.
        data = np.zeros((64, 64), dtype=EFFECT_DTYPE).tobytes()
        result = ZstdCompressor().prepare_effect(data, "zeros")
        assert result.raw_size == len(data)
        assert len(result.payload) < len(data) / 10

    def test_finalize_records_frames(self):
        c = ZstdCompressor()
        inputs = [("a", c.prepare_effect(b"a" * 100, "a")), ("b", c.prepare_effect(b"b", "b"))]
        blob, toc = c.finalize(inputs)
        frames = toc["frames"]
        assert [f["raw_size"] for f in frames] == [100, 1]
        assert frames[0]["offset"] == 0
        assert frames[1]["offset"] == frames[0]["size"]
        assert frames[1]["offset"] + frames[1]["size"] == len(blob)

    def test_corrupt_frame(self, tmp_path):
        path = tmp_path / "frames.bin"
        path.write_bytes(b"not a zstd frame")
        toc = {"frames": [{"offset": 0, "size": 16, "raw_size": 16}]}
        with pytest.raises(ValueError, match="Corrupt zstd frame"):
            ZstdCompressor.from_toc(toc, path).decompress_effect(0)

    def test_truncated_frame(self, tmp_path):
        path = tmp_path / "frames.bin"
        path.write_bytes(b"abc")
        toc = {"frames": [{"offset": 0, "size": 40, "raw_size": 64}]}
        with pytest.raises(ValueError, match="Truncated"):
            ZstdCompressor.from_toc(toc, path).decompress_effect(0)

    def test_ordinal_out_of_range(self, tmp_path):
        path = tmp_path / "frames.bin"
        path.write_bytes(b"")
        with pytest.raises(ValueError, match="out of range"):
            ZstdCompressor.from_toc({"frames": []}, path).decompress_effect(0)


class TestCompressorRegistry:
    def test_known_schemes(self):
        assert isinstance(create_compressor("none"), NoOpCompressor)
        assert isinstance(create_compressor("zstd-per-effect"), ZstdCompressor)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError, match="Unknown compression scheme"):
            create_compressor("lz4")
        with pytest.raises(ValueError, match="Unknown compression scheme"):
            create_compressor_from_toc({"compression_scheme": "lz4"}, None)


class TestStrategyArchive:
    def test_bell_round_trip(self, tmp_path, compressor):
        path = tmp_path / "bell.qsva"
        s = bell_strategy()
        write_strategy_archive(s, path, compressor)
        restored = read_strategy_archive(path)
        _assert_same_strategy(s, restored)
        assert restored.gap() == pytest.approx(2 / 3)
        for x, y in zip(s.tests, restored.tests):
            for (m1, n1), (m2, n2) in zip(x.branches, y.branches):
                assert np.array_equal(m1.matrix, m2.matrix)
                assert np.array_equal(n1.matrix, n2.matrix)

    @pytest.mark.parametrize("family", sorted(FAMILIES))
    def test_every_family_round_trips(self, tmp_path, graph_files, compressor, family):
        params = FamilyParams(
            theta=0.5,
            d=3,
            n=3,
            k=1,
            schmidt=(0.8, 0.6),
            graph=graph_files[0],
            target="bell",
            lam=0.3,
        )
        s = build_strategy(family, params)
        path = tmp_path / f"{family}.qsva"
        write_strategy_archive(s, path, compressor)
        restored = read_strategy_archive(path)
        _assert_same_strategy(s, restored)
        for x, y in zip(s.tests, restored.tests):
            for (m1, n1), (m2, n2) in zip(x.branches or [], y.branches or []):
                assert m2.dims == m1.dims
                assert n2.dims == n1.dims
                assert np.array_equal(n1.matrix, n2.matrix)
        assert restored.gap() == pytest.approx(s.gap(), abs=1e-12)

    def test_effect_without_dims(self, tmp_path):
        path = tmp_path / "bell.qsva"
        write_strategy_archive(bell_strategy(), path)
        archive = StrategyArchive.read(path)
        del archive.toc["effect_dims"]
        with pytest.raises(SchemaError, match="No dims recorded"):
            archive.to_strategy()

    def test_lazy_stabilizer_strategy(self, tmp_path, compressor):
        path = tmp_path / "cycle.qsva"
        s = stabilizer_strategy(Graph.cycle(4))
        write_strategy_archive(s, path, compressor)
        restored = read_strategy_archive(path)
        assert not any(t.is_lazy for t in restored.tests)
        assert restored.gap() == pytest.approx(s.gap())

    def test_header_and_alignment(self, tmp_path):
        path = tmp_path / "bell.qsva"
        write_strategy_archive(bell_strategy(), path)
        raw = path.read_bytes()
        magic, version, toc_offset = struct.unpack("<4sIQ", raw[:16])
        assert magic == b"QSVA"
        assert version == StrategyArchive.FORMAT_VERSION
        assert 64 <= toc_offset < len(raw)
        archive = StrategyArchive.read(path)
        assert archive.toc["blobs"][0]["offset"] % StrategyArchive.BLOB_ALIGNMENT == 0
        assert "tests=3" in repr(archive)

    def test_add_twice(self):
        archive = StrategyArchive()
        archive.add_strategy(bell_strategy())
        with pytest.raises(RuntimeError, match="already holds"):
            archive.add_strategy(bell_strategy())

    def test_write_empty(self, tmp_path):
        with pytest.raises(RuntimeError, match="empty"):
            StrategyArchive().write(tmp_path / "empty.qsva")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.qsva"
        path.write_bytes(b"NOPE" + b"\x00" * 60)
        with pytest.raises(SchemaError, match="Invalid magic"):
            StrategyArchive.read(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "short.qsva"
        path.write_bytes(b"QSVA")
        with pytest.raises(SchemaError, match="too short"):
            StrategyArchive.read(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "v9.qsva"
        write_strategy_archive(bell_strategy(), path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(SchemaError, match="Unsupported format version"):
            StrategyArchive.read(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            StrategyArchive.read(tmp_path / "missing.qsva")
