"""SSL frame embedding export to SFV1 files.

One file per utterance: magic "SFV1", little-endian u32 n_frames, u32 dim,
f64 hop_s, f64 offset_s, then n_frames * dim float32 row-major values.  The
reference encoder strides 20 ms with a 25 ms receptive field, so frame i is
centered at 0.0125 + 0.02 * i.  Audio shorter than one receptive field
yields a valid zero-frame file plus a warning.
"""

from __future__ import annotations

import argparse
import logging
import struct
import sys
import wave
from pathlib import Path
from typing import Protocol

import numpy as np

from .manifest import ExporterManifest

logger = logging.getLogger(__name__)

MAGIC = b"SFV1"


class FrameEncoder(Protocol):
    model_id: str
    checkpoint_hash: str
    dim: int
    hop_s: float
    offset_s: float

    def encode(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        """(n_frames, dim) float32 frame matrix for mono 16 kHz audio."""
        ...


def write_sfv1_file(path: Path | str, rows: np.ndarray, hop_s: float, offset_s: float) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<IIdd", rows.shape[0], rows.shape[1], hop_s, offset_s))
        handle.write(rows.tobytes())


def read_wav_mono(path: Path | str) -> tuple[np.ndarray, int]:
    """16-bit PCM WAV reader (stdlib); stereo is averaged to mono."""
    with wave.open(str(path), "rb") as handle:
        rate = handle.getframerate()
        n_channels = handle.getnchannels()
        width = handle.getsampwidth()
        frames = handle.readframes(handle.getnframes())
    if width != 2:
        raise ValueError(f"{path}: only 16-bit PCM supported by this exporter")
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return samples, rate


def export_frame_embeddings(
    encoder: FrameEncoder,
    audio_files: list[Path | str],
    out_dir: Path | str,
    manifest_path: Path | str | None = None,
) -> list[Path]:
    """Encode each audio file into `<out_dir>/<stem>.sfv`; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for audio_path in sorted(Path(p) for p in audio_files):
        samples, rate = read_wav_mono(audio_path)
        rows = np.asarray(encoder.encode(samples, rate), dtype=np.float32)
        if rows.ndim != 2 or (rows.size and rows.shape[1] != encoder.dim):
            raise ValueError(
                f"{audio_path}: encoder returned shape {rows.shape}, expected (*, {encoder.dim})"
            )
        if rows.shape[0] == 0:
            rows = rows.reshape(0, encoder.dim)
            logger.warning("%s: audio too short, wrote an empty frame file", audio_path.name)
        out_path = out_dir / f"{audio_path.stem}.sfv"
        write_sfv1_file(out_path, rows, encoder.hop_s, encoder.offset_s)
        written.append(out_path)
    if manifest_path is not None:
        ExporterManifest(
            model_id=encoder.model_id,
            checkpoint_hash=encoder.checkpoint_hash,
            tokenizer_id="",
            hop_s=encoder.hop_s,
            dim=encoder.dim,
            inputs=[Path(p).name for p in audio_files],
        ).write(manifest_path)
    logger.info("wrote %d embedding files to %s", len(written), out_dir)
    return written


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(
        description="Export SSL frame representations to SFV1 files."
    )
    parser.add_argument("--audio", nargs="+", required=True, help="WAV files or a directory")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--model", default="facebook/wav2vec2-base")
    parser.add_argument("--manifest", default=None)
    args = parser.parse_args(argv)

    paths = []
    for entry in args.audio:
        p = Path(entry)
        paths.extend(sorted(p.rglob("*.wav")) if p.is_dir() else [p])

    from .hf import HFWav2Vec2Encoder

    encoder = HFWav2Vec2Encoder(args.model)
    manifest = args.manifest or str(Path(args.out_dir) / "export_manifest.json")
    export_frame_embeddings(encoder, paths, args.out_dir, manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
