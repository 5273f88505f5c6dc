"""The SFV1 frame container and mean+std pooling.

Writes a fake per-utterance frame matrix (as the SSL exporter would), reads
it back, and pools it over a span selection into one fixed vector.  With the
reference exporter's 768 dimensions the pooled vector has 1536 entries.
"""

import tempfile
from pathlib import Path

import numpy as np

from surpsel import load_frame_embeddings, pool_mean_std, write_sfv1
from surpsel.selection import SpanSelection


def main():
    rng = np.random.default_rng(4)
    rows = rng.standard_normal((60, 768)).astype(np.float32)

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "utt42.sfv"
        write_sfv1(path, rows, hop_s=0.020, offset_s=0.0125)
        print(f"wrote {path.stat().st_size} bytes "
              f"(28-byte header + {rows.size} float32 values)")

        emb = load_frame_embeddings(path)
        print(f"parsed: id={emb.utterance_id} frames={emb.n_frames} dim={emb.dim} "
              f"hop={emb.hop_s}s offset={emb.offset_s}s")

        pooled = pool_mean_std(emb)
        print(f"pooled over all frames -> {len(pooled.values)} values "
              f"({emb.dim} means then {emb.dim} population stds)")

        span = SpanSelection("utt42", "llm_sr", "independent_n", 1, ((0.20, 0.60),))
        segment = pool_mean_std(emb, span)
        n_inside = int(((emb.frame_centers() >= 0.20) & (emb.frame_centers() <= 0.60)).sum())
        print(f"pooled over span [0.20, 0.60] -> {n_inside} frames, "
              f"first mean {segment.values[0]:+.4f} vs full {pooled.values[0]:+.4f}")


if __name__ == "__main__":
    main()
