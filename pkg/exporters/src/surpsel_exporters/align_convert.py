"""Convert third-party forced-alignment outputs to the alignment JSONL format.

Not an aligner: only a format converter.  Supported inputs:

  * CTM: one `<utterance_id> <channel> <start_s> <duration_s> <word>` per line
  * Gentle-style JSON: one file per utterance with
    {"words": [{"word"|"alignedWord", "start", "end"}, ...]}

Output record (one per line, the corpus module's contract):

    {"id": "<utterance_id>", "words": [{"w", "s", "e"}, ...]}
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

logger = logging.getLogger(__name__)


class ConvertError(ValueError):
    pass


def parse_ctm(path: Path | str) -> dict[str, list[dict]]:
    """Group CTM rows by utterance id, preserving temporal order."""
    by_utterance: dict[str, list[dict]] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith(";;"):
                continue
            parts = line.split()
            if len(parts) < 5:
                raise ConvertError(f"{path}:{line_no}: expected 5 CTM fields, got {len(parts)}")
            utt_id, _channel, start, duration, word = parts[:5]
            try:
                start_s = float(start)
                duration_s = float(duration)
            except ValueError as exc:
                raise ConvertError(f"{path}:{line_no}: bad number: {exc}") from exc
            if duration_s <= 0:
                raise ConvertError(f"{path}:{line_no}: non-positive duration {duration_s}")
            by_utterance.setdefault(utt_id, []).append(
                {"w": word, "s": round(start_s, 6), "e": round(start_s + duration_s, 6)}
            )
    for words in by_utterance.values():
        words.sort(key=lambda w: w["s"])
    return by_utterance


def parse_gentle_json(path: Path | str) -> list[dict]:
    """Word list from one gentle-style JSON document."""
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    words = []
    for i, item in enumerate(document.get("words", [])):
        if "start" not in item or "end" not in item:
            logger.warning("%s: word %d has no timing, skipped", path, i)
            continue
        text = item.get("word") or item.get("alignedWord")
        if not text:
            raise ConvertError(f"{path}: word {i} has no text")
        words.append({"w": text, "s": float(item["start"]), "e": float(item["end"])})
    words.sort(key=lambda w: w["s"])
    return words


def write_alignment_jsonl(records: dict[str, list[dict]], out_path: Path | str) -> Path:
    out_path = Path(out_path)
    lines = [
        json.dumps({"id": utt_id, "words": records[utt_id]}, sort_keys=True)
        for utt_id in sorted(records)
    ]
    out_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return out_path


def convert(inputs: list[Path | str], fmt: str, out_path: Path | str) -> Path:
    records: dict[str, list[dict]] = {}
    if fmt == "ctm":
        for path in inputs:
            for utt_id, words in parse_ctm(path).items():
                if utt_id in records:
                    raise ConvertError(f"duplicate utterance id {utt_id!r} across CTM files")
                records[utt_id] = words
    elif fmt == "gentle":
        for path in inputs:
            utt_id = Path(path).stem
            if utt_id in records:
                raise ConvertError(f"duplicate utterance id {utt_id!r}")
            records[utt_id] = parse_gentle_json(path)
    else:
        raise ConvertError(f"unknown alignment format {fmt!r}")
    logger.info("converted %d utterances", len(records))
    return write_alignment_jsonl(records, out_path)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(
        description="Convert forced-alignment outputs to alignment JSONL."
    )
    parser.add_argument("--format", choices=("ctm", "gentle"), required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("inputs", nargs="+")
    args = parser.parse_args(argv)
    convert(args.inputs, args.format, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
