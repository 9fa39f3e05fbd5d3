"""Effect encodings for strategy archives.

Writing is split in two: prepare_effect() encodes a single effect matrix on
its own, so many can be encoded concurrently, and finalize() lays the encoded
effects out back to back and returns the table the reader needs.

Every scheme records one table row per effect, addressed by ordinal. Rows
hold blob-relative offsets until the archive writer calls rebase().
"""

from abc import ABC, abstractmethod
from pathlib import Path

import zstandard as zstd


class CompressionInput:
    """An encoded effect waiting for finalize()."""

    def __init__(self, effect_id: str, payload: bytes, raw_size: int):
        self.effect_id = effect_id
        self.payload = payload
        self.raw_size = raw_size


class Compressor(ABC):
    """Base class for archive effect encodings.

    Subclasses set SCHEME_NAME and TABLE_KEY (the TOC field holding the
    per-effect rows) and implement encode/decode of a single payload.
    """

    SCHEME_NAME: str = NotImplemented
    TABLE_KEY: str = NotImplemented

    def __init__(self):
        self._file_path: Path | None = None
        self._rows: list[dict] | None = None

    @abstractmethod
    def _encode(self, data: bytes) -> bytes:
        """Encode raw little-endian complex128 effect bytes."""

    @abstractmethod
    def _decode(self, payload: bytes, raw_size: int) -> bytes:
        """Inverse of _encode; raw_size is the recorded decoded length."""

    def prepare_effect(self, data: bytes, effect_id: str) -> CompressionInput:
        return CompressionInput(effect_id, self._encode(data), len(data))

    def finalize(
        self, inputs: list[tuple[str, CompressionInput]]
    ) -> tuple[bytes, dict[str, object]]:
        """Concatenate payloads in ordinal order.

        Returns:
            (blob_data, toc_metadata) with offsets relative to the blob start
        """
        blob = bytearray()
        rows = []
        for _, prepared in inputs:
            rows.append(
                {"offset": len(blob), "size": len(prepared.payload), "raw_size": prepared.raw_size}
            )
            blob.extend(prepared.payload)
        return bytes(blob), {self.TABLE_KEY: rows}

    def rebase(self, toc_metadata: dict[str, object], blob_offset: int) -> None:
        """Shift the rows' offsets from blob-relative to file-absolute."""
        for row in toc_metadata[self.TABLE_KEY]:
            row["offset"] += blob_offset

    @classmethod
    def from_toc(cls, toc_data: dict[str, object], file_path: Path) -> "Compressor":
        """Reader initialized from an archive TOC.

        Raises:
            KeyError: If the TOC lacks the scheme's table
        """
        compressor = cls()
        compressor._file_path = Path(file_path)
        compressor._rows = list(toc_data[cls.TABLE_KEY])
        return compressor

    def decompress_effect(self, ordinal: int) -> bytes:
        """Raw bytes of the effect with the given ordinal.

        Raises:
            ValueError: For an unknown ordinal or a truncated/mis-sized payload
        """
        if self._rows is None or self._file_path is None:
            raise RuntimeError("Compressor not initialized from TOC")
        if not 0 <= ordinal < len(self._rows):
            raise ValueError(f"Ordinal {ordinal} out of range (0..{len(self._rows) - 1})")
        row = self._rows[ordinal]
        with self._file_path.open("rb") as f:
            f.seek(row["offset"])
            payload = f.read(row["size"])
        if len(payload) != row["size"]:
            raise ValueError(
                f"Truncated effect {ordinal}: read {len(payload)} of {row['size']} bytes"
            )
        data = self._decode(payload, row["raw_size"])
        if len(data) != row["raw_size"]:
            raise ValueError(
                f"Effect {ordinal} decoded to {len(data)} bytes, expected {row['raw_size']}"
            )
        return data


class NoOpCompressor(Compressor):
    """Raw effect bytes. TOC: {"compression_scheme": "none", "blobs": [rows]}."""

    SCHEME_NAME = "none"
    TABLE_KEY = "blobs"

    def _encode(self, data: bytes) -> bytes:
        return data

    def _decode(self, payload: bytes, raw_size: int) -> bytes:
        return payload


class ZstdCompressor(Compressor):
    """One zstd frame per effect.

    TOC: {"compression_scheme": "zstd-per-effect", "frames": [rows]}, each
    row carrying the frame's offset and size and the decoded size.
    """

    SCHEME_NAME = "zstd-per-effect"
    TABLE_KEY = "frames"

    def __init__(self, compression_level: int = 3):
        super().__init__()
        self.compression_level = compression_level

    def _encode(self, data: bytes) -> bytes:
        # ZstdCompressor objects are not thread-safe; one per effect.
        return zstd.ZstdCompressor(level=self.compression_level).compress(data)

    def _decode(self, payload: bytes, raw_size: int) -> bytes:
        try:
            return zstd.ZstdDecompressor().decompress(payload, max_output_size=raw_size)
        except zstd.ZstdError as e:
            raise ValueError(f"Corrupt zstd frame: {e}") from e


COMPRESSION_SCHEMES: dict[str, type[Compressor]] = {
    NoOpCompressor.SCHEME_NAME: NoOpCompressor,
    ZstdCompressor.SCHEME_NAME: ZstdCompressor,
}


def create_compressor(scheme: str) -> Compressor:
    """Compressor for writing, by scheme name.

    Raises:
        ValueError: If the scheme is unknown
    """
    if scheme not in COMPRESSION_SCHEMES:
        known = ", ".join(sorted(COMPRESSION_SCHEMES))
        raise ValueError(f"Unknown compression scheme: {scheme} (known: {known})")
    return COMPRESSION_SCHEMES[scheme]()


def create_compressor_from_toc(toc_data: dict[str, object], file_path: Path) -> Compressor:
    """Compressor for reading, chosen by the TOC's compression_scheme.

    Raises:
        ValueError: If the compression scheme is unknown
    """
    scheme = toc_data.get("compression_scheme", NoOpCompressor.SCHEME_NAME)
    if scheme not in COMPRESSION_SCHEMES:
        raise ValueError(f"Unknown compression scheme: {scheme}")
    return COMPRESSION_SCHEMES[scheme].from_toc(toc_data, file_path)
