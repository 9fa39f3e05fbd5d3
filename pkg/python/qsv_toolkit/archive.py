"""Binary strategy archives (.qsva).

Strategies for many-qubit targets carry hundreds of dense effects; storing
them as JSON number lists is slow and large. The archive keeps every effect
matrix as raw complex128 bytes (optionally zstd-compressed) and the rest of
the strategy in a MessagePack TOC.
"""

import struct
from math import prod
from pathlib import Path
from typing import Any

import msgpack
import numpy as np

from qsv_toolkit.compression import (
    CompressionInput,
    Compressor,
    NoOpCompressor,
    create_compressor_from_toc,
)
from qsv_toolkit.errors import SchemaError
from qsv_toolkit.qmath import Operator
from qsv_toolkit.serialization import state_from_dict, state_to_dict
from qsv_toolkit.strategy import Strategy, WeightedTest

# Effects are stored as little-endian complex128, row-major.
EFFECT_DTYPE = np.dtype("<c16")


class StrategyArchive:
    """A strategy with its effects packed into aligned binary blobs.

    Layout, little-endian:

      0   b"QSVA"
      4   uint32 format version
      8   uint64 absolute offset of the TOC
      16  zero fill up to the first multiple of 64
      ..  encoded effects, back to back in ordinal order
      ..  MessagePack TOC:
    {
      "format_version": 1,
      "label": "bell",
      "target": {"dims": [2, 2], "re": [...], "im": [...]},
      "predicted_gap": 0.666...,
      "metadata": {...},
      "compression_scheme": "none" | "zstd-per-effect",
      "blobs" | "frames": [{"offset", "size", "raw_size"}, ...],  # per ordinal
      "tests": [
        {"p": 0.333..., "name": "XX",
         "effect": 0,                     # ordinal of the effect blob
         "branches": [[1, 2], [3, 4]]}    # optional (Alice, Bob) ordinals
      ],
      "effect_dims": [[2, 2], [2], [2], ...]  # dims of each ordinal
    }
    """

    MAGIC = b"QSVA"
    FORMAT_VERSION = 1
    HEADER_SIZE = struct.calcsize("<4sIQ")
    BLOB_ALIGNMENT = 64

    def __init__(self, compressor: Compressor | None = None):
        self._compressor: Compressor = compressor or NoOpCompressor()
        self._inputs: list[tuple[str, CompressionInput]] = []
        self._effect_dims: list[list[int]] = []
        self._file_path: Path | None = None
        self.toc: dict[str, Any] = {}

    def _add_effect(self, op: Operator, effect_id: str) -> int:
        data = np.ascontiguousarray(op.matrix, dtype=EFFECT_DTYPE).tobytes()
        self._inputs.append((effect_id, self._compressor.prepare_effect(data, effect_id)))
        self._effect_dims.append(list(op.dims))
        return len(self._inputs) - 1

    def add_strategy(self, s: Strategy) -> None:
        """Queue every effect of s and record the strategy fields in the TOC.

        Raises:
            RuntimeError: If a strategy was already added
        """
        if self.toc:
            raise RuntimeError("Archive already holds a strategy")
        tests = []
        for index, test in enumerate(s.tests):
            effect_id = f"{s.label}[{index}]"
            entry: dict[str, Any] = {
                "p": test.probability,
                "name": test.name,
                "effect": self._add_effect(test.effect, effect_id),
            }
            if test.branches is not None:
                entry["branches"] = [
                    [
                        self._add_effect(m, f"{effect_id}/M{a}"),
                        self._add_effect(n, f"{effect_id}/N{a}"),
                    ]
                    for a, (m, n) in enumerate(test.branches)
                ]
            tests.append(entry)
        self.toc = {
            "format_version": self.FORMAT_VERSION,
            "label": s.label,
            "target": state_to_dict(s.target),
            "predicted_gap": s.predicted_gap,
            "metadata": s.metadata,
            "tests": tests,
            "effect_dims": self._effect_dims,
        }

    def write(self, output_path: Path) -> None:
        """Write header, aligned blob and TOC, then backpatch the TOC offset."""
        if not self.toc:
            raise RuntimeError("Archive is empty. Call add_strategy() first.")
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        blob, scheme_metadata = self._compressor.finalize(self._inputs)

        with output_path.open("wb") as f:
            f.write(struct.pack("<4sIQ", self.MAGIC, self.FORMAT_VERSION, 0))
            padding = (self.BLOB_ALIGNMENT - f.tell() % self.BLOB_ALIGNMENT) % self.BLOB_ALIGNMENT
            f.write(b"\x00" * padding)

            blob_start_offset = f.tell()
            f.write(blob)
            self._compressor.rebase(scheme_metadata, blob_start_offset)

            toc_offset = f.tell()
            toc_data = {
                **self.toc,
                "compression_scheme": self._compressor.SCHEME_NAME,
                **scheme_metadata,
            }
            msgpack.pack(toc_data, f, use_bin_type=True)

            f.seek(0)
            f.write(struct.pack("<4sIQ", self.MAGIC, self.FORMAT_VERSION, toc_offset))

    @staticmethod
    def read(input_path: Path) -> "StrategyArchive":
        """Read the header and TOC; effect data stays on disk until requested.

        Raises:
            SchemaError: If the magic, version or TOC is invalid
        """
        input_path = Path(input_path)
        if not input_path.exists():
            raise FileNotFoundError(f"Input file not found: {input_path}")
        with input_path.open("rb") as f:
            header_bytes = f.read(StrategyArchive.HEADER_SIZE)
            if len(header_bytes) != StrategyArchive.HEADER_SIZE:
                raise SchemaError("File is too short for an archive header", input_path)
            magic, version, toc_offset = struct.unpack("<4sIQ", header_bytes)
            if magic != StrategyArchive.MAGIC:
                raise SchemaError(
                    f"Invalid magic number: {magic!r} (expected {StrategyArchive.MAGIC!r})",
                    input_path,
                )
            if version != StrategyArchive.FORMAT_VERSION:
                raise SchemaError(
                    f"Unsupported format version: {version} "
                    f"(expected {StrategyArchive.FORMAT_VERSION})",
                    input_path,
                )
            f.seek(toc_offset)
            try:
                toc_data = msgpack.unpack(f, raw=False)
            except (ValueError, msgpack.UnpackException) as e:
                raise SchemaError(f"Unreadable TOC: {e}", input_path) from e

        archive = StrategyArchive()
        archive.toc = toc_data
        archive._file_path = input_path
        try:
            archive._compressor = create_compressor_from_toc(toc_data, input_path)
        except (KeyError, ValueError) as e:
            raise SchemaError(f"Bad compression metadata: {e}", input_path) from e
        return archive

    def get_effect(self, ordinal: int) -> Operator:
        """Decode one effect with the dims recorded for its ordinal."""
        try:
            dims = [int(d) for d in self.toc["effect_dims"][ordinal]]
        except (KeyError, IndexError, TypeError) as e:
            raise SchemaError(f"No dims recorded for effect {ordinal}", self._file_path) from e
        side = prod(dims)
        try:
            data = self._compressor.decompress_effect(ordinal)
        except ValueError as e:
            raise SchemaError(str(e), self._file_path) from e
        if len(data) != side * side * EFFECT_DTYPE.itemsize:
            raise SchemaError(
                f"Effect {ordinal} has {len(data)} bytes, expected a {side}x{side} matrix",
                self._file_path,
            )
        return Operator(tuple(dims), np.frombuffer(data, dtype=EFFECT_DTYPE).reshape(side, side))

    def to_strategy(self) -> Strategy:
        """Rebuild the strategy; raises SchemaError for a malformed TOC."""
        try:
            target = state_from_dict(self.toc["target"], self._file_path, "archive.target")
            tests = []
            for entry in self.toc["tests"]:
                branches = None
                if "branches" in entry:
                    branches = [
                        (self.get_effect(m), self.get_effect(n))
                        for m, n in entry["branches"]
                    ]
                tests.append(
                    WeightedTest(
                        float(entry["p"]),
                        self.get_effect(entry["effect"]),
                        name=entry.get("name", ""),
                        branches=branches,
                    )
                )
        except (KeyError, TypeError) as e:
            raise SchemaError(f"Malformed archive TOC: {e!r}", self._file_path) from e
        predicted = self.toc.get("predicted_gap")
        return Strategy(
            target,
            tests,
            str(self.toc.get("label", "")),
            None if predicted is None else float(predicted),
            dict(self.toc.get("metadata") or {}),
        )

    def __repr__(self) -> str:
        return (
            f"StrategyArchive(label={self.toc.get('label')}, "
            f"tests={len(self.toc.get('tests', []))}, "
            f"scheme={self._compressor.SCHEME_NAME})"
        )


def write_strategy_archive(s: Strategy, path: Path, compressor: Compressor | None = None) -> None:
    archive = StrategyArchive(compressor)
    archive.add_strategy(s)
    archive.write(Path(path))


def read_strategy_archive(path: Path) -> Strategy:
    return StrategyArchive.read(Path(path)).to_strategy()
