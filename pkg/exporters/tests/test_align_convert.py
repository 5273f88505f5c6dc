import json

import pytest

from surpsel_exporters.align_convert import (
    ConvertError,
    convert,
    parse_ctm,
    parse_gentle_json,
)


class TestCTM:
    def test_grouping_and_sorting(self, tmp_path):
        ctm = tmp_path / "a.ctm"
        ctm.write_text(
            "utt1 1 0.50 0.30 are\n"
            "utt1 1 0.10 0.35 kids\n"
            "utt2 1 0.05 0.40 dogs\n"
        )
        records = parse_ctm(ctm)
        assert [w["w"] for w in records["utt1"]] == ["kids", "are"]
        assert records["utt1"][0] == {"w": "kids", "s": 0.1, "e": 0.45}
        assert records["utt2"][0]["e"] == pytest.approx(0.45)

    def test_comments_skipped(self, tmp_path):
        ctm = tmp_path / "a.ctm"
        ctm.write_text(";; header comment\nutt1 1 0.1 0.2 word\n")
        assert len(parse_ctm(ctm)) == 1

    def test_short_line_reports_location(self, tmp_path):
        ctm = tmp_path / "a.ctm"
        ctm.write_text("utt1 1 0.1 word\n")
        with pytest.raises(ConvertError, match=":1"):
            parse_ctm(ctm)

    def test_non_positive_duration_rejected(self, tmp_path):
        ctm = tmp_path / "a.ctm"
        ctm.write_text("utt1 1 0.1 0.0 word\n")
        with pytest.raises(ConvertError, match="duration"):
            parse_ctm(ctm)


class TestGentleJSON:
    def test_words_extracted_and_sorted(self, tmp_path):
        doc = tmp_path / "utt9.json"
        doc.write_text(json.dumps({
            "words": [
                {"word": "are", "start": 0.5, "end": 0.7},
                {"alignedWord": "kids", "start": 0.1, "end": 0.4},
                {"word": "mumble"},  # no timing: skipped with a warning
            ]
        }))
        words = parse_gentle_json(doc)
        assert [w["w"] for w in words] == ["kids", "are"]

    def test_word_without_text_rejected(self, tmp_path):
        doc = tmp_path / "u.json"
        doc.write_text(json.dumps({"words": [{"start": 0.0, "end": 0.1}]}))
        with pytest.raises(ConvertError, match="no text"):
            parse_gentle_json(doc)


class TestConvert:
    def test_ctm_to_jsonl(self, tmp_path):
        ctm = tmp_path / "a.ctm"
        ctm.write_text("utt1 1 0.10 0.35 kids\nutt1 1 0.50 0.30 are\n")
        out = convert([ctm], "ctm", tmp_path / "alignments.jsonl")
        record = json.loads(out.read_text().splitlines()[0])
        assert record == {
            "id": "utt1",
            "words": [{"e": 0.45, "s": 0.1, "w": "kids"}, {"e": 0.8, "s": 0.5, "w": "are"}],
        }

    def test_gentle_files_keyed_by_stem(self, tmp_path):
        doc = tmp_path / "utt7.json"
        doc.write_text(json.dumps({"words": [{"word": "hi", "start": 0.0, "end": 0.2}]}))
        out = convert([doc], "gentle", tmp_path / "alignments.jsonl")
        record = json.loads(out.read_text().splitlines()[0])
        assert record["id"] == "utt7"

    def test_duplicate_utterance_rejected(self, tmp_path):
        a = tmp_path / "a.ctm"
        b = tmp_path / "b.ctm"
        a.write_text("utt1 1 0.1 0.2 word\n")
        b.write_text("utt1 1 0.3 0.2 word\n")
        with pytest.raises(ConvertError, match="duplicate"):
            convert([a, b], "ctm", tmp_path / "out.jsonl")

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ConvertError, match="unknown"):
            convert([], "textgrid", tmp_path / "out.jsonl")
