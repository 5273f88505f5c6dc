"""Per-word informativeness: unigram surprisal, LLM surprisal, normalized rank.

LLM token scores are ingested from a provider file (any causal LM can
populate it); the provider emits natural-log probabilities and this module
converts to bits exactly once.  A word that the provider split into several
tokens gets the sum of its token surprisals and the mean of its token
normalized ranks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import WordAlignment

LN2 = math.log(2.0)


class ScoreError(ValueError):
    pass


@dataclass(frozen=True)
class TokenScore:
    """One provider token: character span, ln-probability, full-vocab rank."""

    text: str
    char_start: int
    char_end: int
    logprob_e: float
    rank: int
    vocab_size: int

    def __post_init__(self):
        if self.char_start >= self.char_end:
            raise ScoreError(
                f"token {self.text!r}: empty char span "
                f"[{self.char_start}, {self.char_end})"
            )
        if not 1 <= self.rank <= self.vocab_size:
            raise ScoreError(
                f"token {self.text!r}: rank {self.rank} outside [1, {self.vocab_size}]"
            )
        if self.logprob_e > 0:
            raise ScoreError(
                f"token {self.text!r}: positive log-probability {self.logprob_e}"
            )

    @property
    def surprisal_bits(self) -> float:
        return -self.logprob_e / LN2


@dataclass
class WordInfo:
    """A scored word: surprisal under both models, rank, and its time span."""

    text: str
    span: tuple[float, float]
    llm_surprisal_bits: float | None = None
    unigram_surprisal_bits: float | None = None
    norm_rank: float | None = None
    token_count: int = 0

    def criterion_value(self, criterion: str) -> float:
        value = {
            "unigram_sr": self.unigram_surprisal_bits,
            "llm_sr": self.llm_surprisal_bits,
            "rank": self.norm_rank,
        }.get(criterion)
        if value is None:
            raise ScoreError(
                f"word {self.text!r} has no score under criterion {criterion!r}"
            )
        return value


@dataclass
class UnigramModel:
    """Word counts with totals; lookups are lowercased."""

    counts: dict[str, int]
    total: int
    vocab: int


def build_unigram_model(counts_file: Path | str) -> UnigramModel:
    """Read a ``word<TAB>count`` file into a UnigramModel.

    Duplicate words, non-positive counts, and malformed lines are errors
    (reported with their line number); an empty file is an error.
    """
    counts: dict[str, int] = {}
    path = Path(counts_file)
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ScoreError(
                    f"{path}:{line_no}: expected 'word<TAB>count', got {line!r}"
                )
            word, count_text = parts
            word = word.strip().lower()
            try:
                count = int(count_text)
            except ValueError as exc:
                raise ScoreError(
                    f"{path}:{line_no}: count is not an integer: {count_text!r}"
                ) from exc
            if count <= 0:
                raise ScoreError(f"{path}:{line_no}: non-positive count {count}")
            if word in counts:
                raise ScoreError(f"{path}:{line_no}: duplicate word {word!r}")
            counts[word] = count
    if not counts:
        raise ScoreError(f"{path}: empty model")
    return UnigramModel(counts=counts, total=sum(counts.values()), vocab=len(counts))


def unigram_surprisal(model: UnigramModel, word: str) -> float:
    """-log2 P(word) under the count model, in bits.

    Unknown words get the maximal surprisal -log2(1 / (total + 1)): an unseen
    word is treated as maximally informative.
    """
    count = model.counts.get(word.lower())
    if count is None:
        return -math.log2(1.0 / (model.total + 1))
    return -math.log2(count / model.total)


def locate_words(transcript: str, words: list[WordAlignment]) -> list[tuple[int, int]]:
    """Character spans of the alignment words in the transcript, left to right.

    Spans exclude surrounding punctuation so that punctuation-only tokens
    never overlap a word.  Word texts must match the transcript's words
    one-to-one (case-insensitive, punctuation stripped).
    """

    def strip_span(text: str, start: int, end: int) -> tuple[int, int]:
        while start < end and not text[start].isalnum():
            start += 1
        while end > start and not text[end - 1].isalnum():
            end -= 1
        return start, end

    spans = []
    cursor = 0
    for token in transcript.split():
        start = transcript.index(token, cursor)
        spans.append(strip_span(transcript, start, start + len(token)))
        cursor = start + len(token)

    if len(spans) != len(words):
        raise ScoreError(
            f"transcript has {len(spans)} words, alignment has {len(words)}"
        )
    norm = lambda s: s.strip("""'".,!?;:-()[]""").lower()
    for (start, end), word in zip(spans, words):
        if transcript[start:end].lower() != norm(word.text):
            raise ScoreError(
                f"alignment word {word.text!r} does not match transcript "
                f"word {transcript[start:end]!r}"
            )
    return spans


def aggregate_word_scores(
    transcript: str,
    tokens: list[TokenScore],
    words: list[WordAlignment],
    unigram_model: UnigramModel | None = None,
) -> list[WordInfo]:
    """Assign provider tokens to words and aggregate per-word scores.

    Each token goes to the word whose character span it overlaps the most
    (leftmost word on ties); punctuation-only tokens overlap nothing and are
    dropped.  Per word: surprisal is the sum of token surprisals in bits,
    normalized rank is the mean of token rank / vocab_size.
    """
    word_spans = locate_words(transcript, words)

    prev_end = -1
    for token in tokens:
        if token.char_start < prev_end:
            raise ScoreError(
                f"token {token.text!r} at {token.char_start} overlaps previous token"
            )
        if token.char_end > len(transcript):
            raise ScoreError(
                f"token {token.text!r} span [{token.char_start}, {token.char_end}) "
                f"outside transcript of length {len(transcript)}"
            )
        prev_end = token.char_end

    assigned: list[list[TokenScore]] = [[] for _ in words]
    for token in tokens:
        best_overlap = 0
        best_word = None
        for w, (ws, we) in enumerate(word_spans):
            overlap = min(token.char_end, we) - max(token.char_start, ws)
            if overlap > best_overlap:
                best_overlap = overlap
                best_word = w
        if best_word is not None:
            assigned[best_word].append(token)

    infos = []
    for word, word_tokens in zip(words, assigned):
        if not word_tokens:
            raise ScoreError(f"word {word.text!r} received no tokens")
        surprisal = sum(t.surprisal_bits for t in word_tokens)
        norm_rank = sum(t.rank / t.vocab_size for t in word_tokens) / len(word_tokens)
        infos.append(
            WordInfo(
                text=word.text,
                span=(word.start_s, word.end_s),
                llm_surprisal_bits=surprisal,
                unigram_surprisal_bits=(
                    unigram_surprisal(unigram_model, word.text)
                    if unigram_model is not None
                    else None
                ),
                norm_rank=norm_rank,
                token_count=len(word_tokens),
            )
        )
    return infos


def unigram_word_scores(
    words: list[WordAlignment], unigram_model: UnigramModel
) -> list[WordInfo]:
    """Score words under the unigram model only (no provider file needed)."""
    return [
        WordInfo(
            text=w.text,
            span=(w.start_s, w.end_s),
            unigram_surprisal_bits=unigram_surprisal(unigram_model, w.text),
        )
        for w in words
    ]


def load_token_scores(path: Path | str) -> dict[str, tuple[str, list[TokenScore]]]:
    """Read the provider token-score file (one JSON record per line).

    Record shape: {"id": ..., "text": ..., "tokens": [{"t", "cs", "ce",
    "lp", "rank", "V"}, ...]}.  Returns id -> (transcript, tokens).
    """
    path = Path(path)
    records: dict[str, tuple[str, list[TokenScore]]] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                utt_id = record["id"]
                text = record["text"]
                tokens = [
                    TokenScore(
                        text=t["t"],
                        char_start=int(t["cs"]),
                        char_end=int(t["ce"]),
                        logprob_e=float(t["lp"]),
                        rank=int(t["rank"]),
                        vocab_size=int(t["V"]),
                    )
                    for t in record["tokens"]
                ]
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ScoreError(f"{path}:{line_no}: bad token record: {exc}") from exc
            if utt_id in records:
                raise ScoreError(f"{path}:{line_no}: duplicate id {utt_id!r}")
            records[utt_id] = (text, tokens)
    return records
