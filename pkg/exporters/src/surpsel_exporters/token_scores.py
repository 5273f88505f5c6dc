"""Causal-LM token score export.

For every transcript, emit one JSON line:

    {"id": ..., "text": ..., "tokens": [{"t", "cs", "ce", "lp", "rank", "V"}, ...]}

per token: its text, character span in the transcript (from the tokenizer's
offset mapping), natural-log probability given the left context only, 1-based
rank among the full next-token distribution, and the vocabulary size.  A BOS
token is prepended so the first real token is scored from the unconditioned
first-position distribution.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Protocol

import numpy as np

from .manifest import ExporterManifest

logger = logging.getLogger(__name__)


class ExportError(ValueError):
    pass


class CausalScorer(Protocol):
    """What a language model adapter must provide."""

    model_id: str
    tokenizer_id: str
    checkpoint_hash: str
    vocab_size: int
    bos_token_id: int

    def tokenize_with_offsets(self, text: str) -> tuple[list[int], list[tuple[int, int]]]:
        ...

    def logits(self, input_ids: list[int]) -> np.ndarray:  # (len(input_ids), vocab)
        ...


def _log_softmax(row: np.ndarray) -> np.ndarray:
    shifted = row - row.max()
    return shifted - np.log(np.exp(shifted).sum())


def score_transcript(scorer: CausalScorer, text: str) -> list[dict]:
    """Score one transcript; returns the per-token records in file order."""
    token_ids, offsets = scorer.tokenize_with_offsets(text)
    if len(token_ids) != len(offsets):
        raise ExportError("tokenizer returned mismatched ids and offsets")
    for i, (start, end) in enumerate(offsets):
        if not 0 <= start < end <= len(text):
            raise ExportError(
                f"token {i} has a bad character span [{start}, {end}) at index {start} "
                f"for a transcript of length {len(text)}"
            )

    input_ids = [scorer.bos_token_id] + list(token_ids)
    logits = np.asarray(scorer.logits(input_ids), dtype=np.float64)
    if logits.shape != (len(input_ids), scorer.vocab_size):
        raise ExportError(
            f"model returned logits of shape {logits.shape}, expected "
            f"({len(input_ids)}, {scorer.vocab_size})"
        )

    records = []
    for position, (token_id, (start, end)) in enumerate(zip(token_ids, offsets)):
        # logits row `position` is the distribution after the left context
        # [bos, tokens[:position]] - exactly the next-token prediction.
        row = logits[position]
        log_probs = _log_softmax(row)
        rank = int(np.sum(row > row[token_id])) + 1  # 1 = most probable
        records.append(
            {
                "t": text[start:end],
                "cs": int(start),
                "ce": int(end),
                "lp": float(min(log_probs[token_id], 0.0)),
                "rank": rank,
                "V": int(scorer.vocab_size),
            }
        )
    return records


def export_token_scores(
    scorer: CausalScorer,
    transcripts: dict[str, str],
    out_path: Path | str,
    manifest_path: Path | str | None = None,
) -> Path:
    """Write the token-score file for a batch of (utterance id -> transcript)."""
    out_path = Path(out_path)
    lines = []
    for utt_id in sorted(transcripts):
        text = transcripts[utt_id]
        tokens = score_transcript(scorer, text)
        lines.append(json.dumps({"id": utt_id, "text": text, "tokens": tokens}, sort_keys=True))
    out_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    if manifest_path is not None:
        ExporterManifest(
            model_id=scorer.model_id,
            checkpoint_hash=scorer.checkpoint_hash,
            tokenizer_id=scorer.tokenizer_id,
            hop_s=0.0,
            dim=0,
            inputs=sorted(transcripts),
        ).write(manifest_path)
    logger.info("wrote %d transcripts to %s", len(lines), out_path)
    return out_path


def read_transcript_list(path: Path | str) -> dict[str, str]:
    """Plain-text transcript list: one `<utterance_id><TAB><text>` per line."""
    transcripts = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise ExportError(f"{path}:{line_no}: expected 'id<TAB>text'")
            transcripts[parts[0]] = parts[1]
    return transcripts


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(
        description="Export causal-LM token log-probabilities and ranks."
    )
    parser.add_argument("--transcripts", required=True,
                        help="file of id<TAB>text lines")
    parser.add_argument("--out", required=True, help="output token-score JSONL")
    parser.add_argument("--model", default="gpt2", help="HF causal LM name")
    parser.add_argument("--manifest", default=None, help="manifest JSON path")
    args = parser.parse_args(argv)

    from .hf import HFCausalScorer

    scorer = HFCausalScorer(args.model)
    manifest = args.manifest or (str(args.out) + ".manifest.json")
    export_token_scores(scorer, read_transcript_list(args.transcripts), args.out, manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
