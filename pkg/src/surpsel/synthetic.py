"""Self-contained synthetic corpus for smoke tests and demos.

Fabricates a miniature RAVDESS-shaped dataset: sine-wave speech whose pitch
and level depend on the emotion label, jittered word alignments for the two
fixed statements, a unigram counts file, provider-style token scores, and
frame embedding files whose rows cluster by emotion.  Two function words get
very short spans on purpose so that large-n independent selections produce
the empty-segment skips the report machinery has to account for.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .corpus import STATEMENTS, LABEL_INDEX, parse_ravdess_filename
from .embeddings import write_sfv1

WORD_COUNTS = {
    "kids": 60,
    "dogs": 50,
    "are": 2500,
    "talking": 200,
    "sitting": 150,
    "by": 3000,
    "the": 5000,
    "door": 800,
}

# Short spans (seconds) force zero-frame segments at the 20 ms embedding hop.
_SHORT_WORDS = {"by": (0.012, 0.018), "the": (0.020, 0.030)}
_NORMAL_SPAN = (0.15, 0.30)


@dataclass
class SmokePaths:
    root: Path
    audio_dir: Path
    alignments: Path
    token_scores: Path
    counts_file: Path
    embeddings_dir: Path
    out_dir: Path
    config_path: Path


def _statement_tokens(statement: str, rng: np.random.Generator, vocab_size: int):
    """Fabricate provider tokens for one statement, 1-2 tokens per word."""
    tokens = []
    cursor = 0
    for word in statement.split():
        start = statement.index(word, cursor)
        cursor = start + len(word)
        pieces = [word]
        if len(word) > 4 and rng.random() < 0.6:
            cut = len(word) // 2
            pieces = [word[:cut], word[cut:]]
        offset = start
        for j, piece in enumerate(pieces):
            cs = offset - 1 if (j == 0 and offset > 0) else offset
            ce = offset + len(piece)
            tokens.append(
                {
                    "t": piece,
                    "cs": cs,
                    "ce": ce,
                    "lp": float(rng.uniform(-8.0, -0.5)),
                    "rank": int(rng.integers(1, 2000)),
                    "V": vocab_size,
                }
            )
            offset = ce
    return tokens


def _word_spans(statement: str, rng: np.random.Generator) -> list[tuple[str, float, float]]:
    spans = []
    t = float(rng.uniform(0.05, 0.12))
    for word in statement.split():
        lo, hi = _SHORT_WORDS.get(word.lower(), _NORMAL_SPAN)
        length = float(rng.uniform(lo, hi))
        spans.append((word.lower(), round(t, 4), round(t + length, 4)))
        t += length + float(rng.uniform(0.01, 0.03))
    return spans


def _render_audio(
    duration_s: float,
    spans: list[tuple[str, float, float]],
    label_index: int,
    speaker: int,
    rng: np.random.Generator,
    rate: int = 16000,
) -> np.ndarray:
    n = int(duration_s * rate)
    t = np.arange(n) / rate
    f0 = 110.0 + 18.0 * label_index + float(rng.uniform(-8.0, 8.0))
    carrier = np.sin(2 * np.pi * f0 * t) + 0.3 * np.sin(2 * np.pi * 2 * f0 * t)
    envelope = np.full(n, 0.003)
    for _, start, end in spans:
        envelope[int(start * rate) : int(end * rate)] = 0.35 + 0.04 * label_index
    signal = envelope * carrier + 0.002 * rng.standard_normal(n)
    return np.clip(signal, -0.99, 0.99)


def make_smoke_corpus(
    root: Path | str,
    n_speakers: int = 24,
    seed: int = 0,
    emb_dim: int = 8,
    folds: int = 10,
    epochs: int = 12,
) -> SmokePaths:
    """Build the corpus under ``root`` and return the paths bundle.

    Per speaker: the 8 emotion codes once each (neutral and calm both land in
    the merged class), alternating statements.  Audio is mono 16 kHz int16.
    """
    root = Path(root)
    audio_dir = root / "audio"
    embeddings_dir = root / "embeddings"
    out_dir = root / "out"
    audio_dir.mkdir(parents=True, exist_ok=True)
    embeddings_dir.mkdir(parents=True, exist_ok=True)

    master = np.random.default_rng(seed)
    vocab_size = 50257

    counts_path = root / "counts.tsv"
    counts_path.write_text(
        "".join(f"{w}\t{c}\n" for w, c in sorted(WORD_COUNTS.items())), encoding="utf-8"
    )

    token_records = {}
    for code, statement in STATEMENTS.items():
        rng = np.random.default_rng([seed, 100 + code])
        token_records[code] = _statement_tokens(statement, rng, vocab_size)

    class_centers = master.normal(0.0, 2.0, size=(7, emb_dim))

    alignment_lines = []
    score_lines = []
    for speaker in range(1, n_speakers + 1):
        speaker_off = master.normal(0.0, 0.5, size=emb_dim)
        for emotion_code in range(1, 9):
            statement = 1 + (emotion_code % 2)
            name = f"03-01-{emotion_code:02d}-01-{statement:02d}-01-{speaker:02d}.wav"
            fields = parse_ravdess_filename(name)
            utt_id = name[:-4]
            rng = np.random.default_rng([seed, speaker, emotion_code])

            transcript = STATEMENTS[statement]
            spans = _word_spans(transcript, rng)
            duration = spans[-1][2] + float(rng.uniform(0.08, 0.15))
            label_index = LABEL_INDEX[fields.emotion_label]

            audio = _render_audio(duration, spans, label_index, speaker, rng)
            wavfile.write(
                audio_dir / name, 16000, (audio * 32767).astype(np.int16)
            )

            alignment_lines.append(
                json.dumps(
                    {
                        "id": utt_id,
                        "words": [{"w": w, "s": s, "e": e} for w, s, e in spans],
                    },
                    sort_keys=True,
                )
            )
            score_lines.append(
                json.dumps(
                    {"id": utt_id, "text": transcript, "tokens": token_records[statement]},
                    sort_keys=True,
                )
            )

            hop, offset = 0.02, 0.01
            n_frames = max(0, int((duration - offset) / hop) + 1)
            rows = (
                class_centers[label_index]
                + speaker_off
                + rng.normal(0.0, 0.3, size=(n_frames, emb_dim))
            )
            write_sfv1(embeddings_dir / f"{utt_id}.sfv", rows, hop_s=hop, offset_s=offset)

    alignments_path = root / "alignments.jsonl"
    alignments_path.write_text("\n".join(alignment_lines) + "\n", encoding="utf-8")
    token_scores_path = root / "token_scores.jsonl"
    token_scores_path.write_text("\n".join(score_lines) + "\n", encoding="utf-8")

    config_path = root / "config.ini"
    config_path.write_text(
        "\n".join(
            [
                "[paths]",
                f"audio_dir = {audio_dir}",
                f"alignments = {alignments_path}",
                f"token_scores = {token_scores_path}",
                f"counts_file = {counts_path}",
                f"embeddings_dir = {embeddings_dir}",
                f"out_dir = {out_dir}",
                "",
                "[grid]",
                "criteria = unigram_sr,llm_sr,rank",
                "modes = top_n,independent_n,baseline",
                "n_values = 1,2,3,4,5,6",
                "feature_kinds = functionals,embeddings",
                "",
                "[model]",
                "hidden = 64,32,16,8",
                "dropout_p = 0.1",
                "lr = 1e-3",
                "batch_size = 64",
                f"epochs = {epochs}",
                "loss = bce",
                "",
                "[run]",
                f"seed = {seed}",
                f"folds = {folds}",
                "jobs = 1",
                "",
            ]
        ),
        encoding="utf-8",
    )

    return SmokePaths(
        root=root,
        audio_dir=audio_dir,
        alignments=alignments_path,
        token_scores=token_scores_path,
        counts_file=counts_path,
        embeddings_dir=embeddings_dir,
        out_dir=out_dir,
        config_path=config_path,
    )
