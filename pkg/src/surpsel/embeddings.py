"""Frame-level embedding ingestion (SFV1 files) and mean/std span pooling.

SFV1 is a small binary container for per-utterance frame matrices:

    bytes 0-3   magic "SFV1"
    then little-endian: u32 n_frames, u32 dim, f64 hop_s, f64 offset_s
    then n_frames * dim float32 little-endian values, row-major

One file per utterance, named ``<utterance_id>.sfv``.  Frame i is centered
at ``offset_s + i * hop_s``.  The same container doubles as the acoustic
LLD cache.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acoustics import EmptySegmentError, frames_in_spans
from .selection import SpanSelection

MAGIC = b"SFV1"
_HEADER = struct.Struct("<IIdd")


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FrameEmbeddings:
    """A frame-by-dimension matrix of externally computed representations."""

    utterance_id: str
    hop_s: float
    offset_s: float
    rows: np.ndarray  # (n_frames, dim) float32

    def __post_init__(self):
        if self.rows.ndim != 2:
            raise EmbeddingFormatError(f"rows must be 2-D, got shape {self.rows.shape}")
        if self.hop_s <= 0:
            raise EmbeddingFormatError(f"non-positive hop {self.hop_s}")
        if not np.all(np.isfinite(self.rows)):
            raise EmbeddingFormatError("non-finite embedding values")
        self.rows.flags.writeable = False

    @property
    def n_frames(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def frame_centers(self) -> np.ndarray:
        return self.offset_s + self.hop_s * np.arange(self.n_frames)


@dataclass(frozen=True)
class PooledEmbedding:
    """Per-dimension mean then per-dimension population std, concatenated."""

    values: np.ndarray  # (2 * dim,)

    @property
    def dim(self) -> int:
        return len(self.values) // 2


def write_sfv1(path: Path | str, rows: np.ndarray, hop_s: float, offset_s: float = 0.0) -> None:
    """Write a frame matrix in the SFV1 format (float32, row-major)."""
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise EmbeddingFormatError(f"rows must be 2-D, got shape {rows.shape}")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(_HEADER.pack(rows.shape[0], rows.shape[1], hop_s, offset_s))
        handle.write(rows.tobytes())


def read_sfv1(path: Path | str) -> tuple[np.ndarray, float, float]:
    """Read an SFV1 file; returns (rows, hop_s, offset_s)."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise EmbeddingFormatError(
            f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}"
        )
    if len(blob) < 4 + _HEADER.size:
        raise EmbeddingFormatError(f"{path}: truncated header")
    n_frames, dim, hop_s, offset_s = _HEADER.unpack_from(blob, 4)
    payload = np.frombuffer(blob, dtype="<f4", offset=4 + _HEADER.size)
    expected = n_frames * dim
    if payload.size != expected:
        raise EmbeddingFormatError(
            f"{path}: expected {expected} values, got {payload.size}"
        )
    rows = payload.reshape(n_frames, dim).copy()
    return rows, hop_s, offset_s


def load_frame_embeddings(path: Path | str) -> FrameEmbeddings:
    """Parse one utterance's SFV1 file; the filename stem is the utterance id."""
    path = Path(path)
    rows, hop_s, offset_s = read_sfv1(path)
    return FrameEmbeddings(
        utterance_id=path.stem, hop_s=hop_s, offset_s=offset_s, rows=rows
    )


def pool_mean_std(
    emb: FrameEmbeddings, selection: SpanSelection | None = None
) -> PooledEmbedding:
    """Mean and population std per dimension over the selected frames.

    Frames are selected by center, like the acoustic pooling; a single
    selected frame yields a zero std half.  No selection pools every frame.
    """
    if selection is None:
        mask = np.ones(emb.n_frames, dtype=bool)
    else:
        mask = frames_in_spans(emb.frame_centers(), selection.spans)
    if not mask.any():
        raise EmptySegmentError(selection.spans if selection else ())
    selected = emb.rows[mask].astype(np.float64)
    values = np.concatenate([selected.mean(axis=0), selected.std(axis=0)])
    return PooledEmbedding(values=values)
