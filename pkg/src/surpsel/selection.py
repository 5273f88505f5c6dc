"""Word ordering by informativeness and time-span selection.

Two regimes: top-n keeps the spans of the n most informative words (emitted
in temporal order), independent-n keeps only the span of the word at ordered
position n.  A full-utterance selection is the baseline: one span covering
the whole recording.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .informativeness import WordInfo

CRITERIA = ("unigram_sr", "llm_sr", "rank")
MODES = ("top_n", "independent_n", "full_utterance")


class SelectionError(ValueError):
    pass


class PositionUnavailableError(SelectionError):
    """independent-n asked for an ordered position past the last word."""


@dataclass(frozen=True)
class SpanSelection:
    """Time spans chosen for feature extraction, sorted by start time."""

    utterance_id: str
    criterion: str
    mode: str
    n: int
    spans: tuple[tuple[float, float], ...]
    clamped: bool = False

    def __post_init__(self):
        prev_end = None
        for start, end in self.spans:
            if end <= start:
                raise SelectionError(f"empty span [{start}, {end}]")
            if prev_end is not None and start < prev_end:
                raise SelectionError("spans overlap or are unsorted")
            prev_end = end


def rank_words(words: list[WordInfo], criterion: str) -> list[int]:
    """Word indices ordered by descending informativeness.

    Descending surprisal for the surprisal criteria and descending normalized
    rank for ``rank`` (a larger normalized rank means a less probable, more
    informative word).  Ties break toward the earlier temporal position.
    """
    if not words:
        raise SelectionError("cannot rank an empty word list")
    if criterion not in CRITERIA:
        raise SelectionError(f"unknown criterion {criterion!r}")
    values = [w.criterion_value(criterion) for w in words]
    return sorted(range(len(words)), key=lambda i: (-values[i], i))


def select_top_n(words: list[WordInfo], criterion: str, n: int) -> SpanSelection:
    """Spans of the top min(n, word_count) words, in temporal order.

    Requests past the word count clamp and set the ``clamped`` flag.
    """
    if n < 1:
        raise SelectionError(f"n must be >= 1, got {n}")
    order = rank_words(words, criterion)
    take = min(n, len(words))
    chosen = sorted(order[:take])
    return SpanSelection(
        utterance_id="",
        criterion=criterion,
        mode="top_n",
        n=n,
        spans=tuple(words[i].span for i in chosen),
        clamped=n > len(words),
    )


def select_independent_n(words: list[WordInfo], criterion: str, n: int) -> SpanSelection:
    """The single span of the word at ordered position n (1-based)."""
    if n < 1:
        raise SelectionError(f"n must be >= 1, got {n}")
    order = rank_words(words, criterion)
    if n > len(words):
        raise PositionUnavailableError(
            f"position {n} unavailable: only {len(words)} words"
        )
    return SpanSelection(
        utterance_id="",
        criterion=criterion,
        mode="independent_n",
        n=n,
        spans=(words[order[n - 1]].span,),
    )


def select_full_utterance(duration_s: float, utterance_id: str = "") -> SpanSelection:
    """The baseline selection: one span covering [0, duration]."""
    if duration_s <= 0:
        raise SelectionError(f"non-positive duration {duration_s}")
    return SpanSelection(
        utterance_id=utterance_id,
        criterion="none",
        mode="full_utterance",
        n=0,
        spans=((0.0, duration_s),),
    )


def with_utterance_id(selection: SpanSelection, utterance_id: str) -> SpanSelection:
    return SpanSelection(
        utterance_id=utterance_id,
        criterion=selection.criterion,
        mode=selection.mode,
        n=selection.n,
        spans=selection.spans,
        clamped=selection.clamped,
    )


def write_selections(selections: list[SpanSelection], path: Path | str) -> None:
    """Serialize selections, one JSON record per line, for audit and caching."""
    with open(path, "w", encoding="utf-8") as handle:
        for sel in selections:
            record = {
                "id": sel.utterance_id,
                "criterion": sel.criterion,
                "mode": sel.mode,
                "n": sel.n,
                "spans": [[s, e] for s, e in sel.spans],
            }
            if sel.clamped:
                record["clamped"] = True
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def read_selections(path: Path | str) -> list[SpanSelection]:
    selections = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            selections.append(
                SpanSelection(
                    utterance_id=record["id"],
                    criterion=record["criterion"],
                    mode=record["mode"],
                    n=record["n"],
                    spans=tuple((float(s), float(e)) for s, e in record["spans"]),
                    clamped=record.get("clamped", False),
                )
            )
    return selections
