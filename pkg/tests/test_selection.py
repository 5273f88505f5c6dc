import numpy as np
import pytest

from surpsel.informativeness import WordInfo
from surpsel.selection import (
    PositionUnavailableError,
    SelectionError,
    SpanSelection,
    rank_words,
    read_selections,
    select_full_utterance,
    select_independent_n,
    select_top_n,
    with_utterance_id,
    write_selections,
)


def make_words(values, criterion="llm_sr", span_len=0.2):
    words = []
    for i, value in enumerate(values):
        kwargs = {
            "text": f"w{i}",
            "span": (i * 0.5, i * 0.5 + span_len),
            "llm_surprisal_bits": 1.0,
            "unigram_surprisal_bits": 1.0,
            "norm_rank": 0.5,
            "token_count": 1,
        }
        key = {
            "llm_sr": "llm_surprisal_bits",
            "unigram_sr": "unigram_surprisal_bits",
            "rank": "norm_rank",
        }[criterion]
        kwargs[key] = value
        words.append(WordInfo(**kwargs))
    return words


def brute_force_order(values):
    """O(n^2) selection-of-maximum oracle with earliest-position tie-break."""
    remaining = list(range(len(values)))
    order = []
    while remaining:
        best = remaining[0]
        for i in remaining[1:]:
            if values[i] > values[best]:
                best = i
        order.append(best)
        remaining.remove(best)
    return order


class TestRankWords:
    def test_spec_example(self):
        words = make_words([3.2, 0.5, 7.1, 1.0, 0.9, 4.4])
        assert rank_words(words, "llm_sr") == [2, 5, 0, 3, 4, 1]

    def test_all_equal_breaks_by_position(self):
        words = make_words([2.0] * 6)
        assert rank_words(words, "llm_sr") == [0, 1, 2, 3, 4, 5]

    def test_single_word(self):
        assert rank_words(make_words([1.5]), "llm_sr") == [0]

    def test_empty_is_error(self):
        with pytest.raises(SelectionError):
            rank_words([], "llm_sr")

    def test_unknown_criterion(self):
        with pytest.raises(SelectionError):
            rank_words(make_words([1.0]), "entropy")

    def test_unscored_criterion_is_error(self):
        words = [WordInfo(text="x", span=(0.0, 0.1))]
        with pytest.raises(Exception, match="no score"):
            rank_words(words, "llm_sr")

    def test_rank_criterion_descends_norm_rank(self):
        words = make_words([0.9, 0.1, 0.5], criterion="rank")
        assert rank_words(words, "rank") == [0, 2, 1]

    @pytest.mark.parametrize("criterion", ["unigram_sr", "llm_sr", "rank"])
    def test_matches_brute_force_with_ties(self, criterion):
        rng = np.random.default_rng(17)
        for _ in range(300):
            n = int(rng.integers(1, 11))
            values = rng.choice([0.1, 0.25, 0.25, 0.5, 0.9], size=n).tolist()
            words = make_words(values, criterion=criterion)
            assert rank_words(words, criterion) == brute_force_order(values)


class TestTopN:
    def test_spec_example_temporal_order(self):
        words = make_words([3.2, 0.5, 7.1, 1.0, 0.9, 4.4])
        sel = select_top_n(words, "llm_sr", 2)
        # words 2 and 5 win, emitted temporally
        assert sel.spans == (words[2].span, words[5].span)
        assert not sel.clamped

    def test_n_equals_word_count_selects_everything(self):
        words = make_words([3.2, 0.5, 7.1, 1.0, 0.9, 4.4])
        sel = select_top_n(words, "llm_sr", 6)
        assert sel.spans == tuple(w.span for w in words)

    def test_clamping_past_word_count(self):
        words = make_words([3.2, 0.5, 7.1, 1.0, 0.9, 4.4])
        sel = select_top_n(words, "llm_sr", 100)
        assert len(sel.spans) == 6
        assert sel.clamped

    def test_superset_of_smaller_n(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            words = make_words(rng.uniform(0, 10, size=8).tolist())
            previous = set()
            for n in range(1, 9):
                spans = set(select_top_n(words, "llm_sr", n).spans)
                assert previous <= spans
                previous = spans

    def test_n_below_one_is_error(self):
        with pytest.raises(SelectionError):
            select_top_n(make_words([1.0]), "llm_sr", 0)


class TestIndependentN:
    def test_spec_example_third_highest(self):
        words = make_words([3.2, 0.5, 7.1, 1.0, 0.9, 4.4])
        sel = select_independent_n(words, "llm_sr", 3)
        assert sel.spans == (words[0].span,)

    def test_position_one_equals_top_one(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            words = make_words(rng.uniform(0, 10, size=6).tolist())
            top = select_top_n(words, "llm_sr", 1)
            ind = select_independent_n(words, "llm_sr", 1)
            assert top.spans == ind.spans

    def test_position_past_word_count(self):
        words = make_words([1.0] * 6)
        with pytest.raises(PositionUnavailableError, match="position 7"):
            select_independent_n(words, "llm_sr", 7)

    def test_single_span_invariant(self):
        words = make_words([3.0, 1.0, 2.0])
        for n in (1, 2, 3):
            assert len(select_independent_n(words, "llm_sr", n).spans) == 1


class TestFullUtterance:
    def test_covers_whole_duration(self):
        sel = select_full_utterance(2.5, "utt")
        assert sel.spans == ((0.0, 2.5),)
        assert sel.mode == "full_utterance"

    def test_non_positive_duration(self):
        with pytest.raises(SelectionError):
            select_full_utterance(0.0)


class TestSelectionInvariants:
    def test_affine_rescaling_leaves_order_unchanged(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            values = rng.uniform(0, 10, size=7).tolist()
            words = make_words(values)
            scale = float(rng.uniform(0.1, 5.0))
            shift = float(rng.uniform(-3, 3))
            scaled = make_words([scale * v + shift for v in values])
            assert rank_words(words, "llm_sr") == rank_words(scaled, "llm_sr")

    def test_spans_are_sorted_and_disjoint(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            words = make_words(rng.uniform(0, 10, size=6).tolist())
            sel = select_top_n(words, "llm_sr", int(rng.integers(1, 7)))
            starts = [s for s, _ in sel.spans]
            assert starts == sorted(starts)
            for (_, e1), (s2, _) in zip(sel.spans, sel.spans[1:]):
                assert s2 >= e1

    def test_overlapping_spans_rejected_by_type(self):
        with pytest.raises(SelectionError):
            SpanSelection("u", "llm_sr", "top_n", 2, ((0.0, 1.0), (0.5, 1.5)))


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        words = make_words([3.2, 0.5, 7.1])
        selections = [
            with_utterance_id(select_top_n(words, "llm_sr", 2), "u1"),
            with_utterance_id(select_independent_n(words, "llm_sr", 1), "u2"),
            select_full_utterance(1.9, "u3"),
        ]
        path = tmp_path / "selections.jsonl"
        write_selections(selections, path)
        loaded = read_selections(path)
        assert loaded == selections

    def test_clamp_flag_survives(self, tmp_path):
        words = make_words([1.0, 2.0])
        sel = with_utterance_id(select_top_n(words, "llm_sr", 50), "u")
        path = tmp_path / "sel.jsonl"
        write_selections([sel], path)
        assert read_selections(path)[0].clamped
