"""Score one sentence's words three ways: unigram surprisal, causal-LM
surprisal, and normalized rank.

The LM-side numbers normally come from the exporter package; here a few
hand-written token records stand in so the demo runs instantly offline.
"""

import tempfile
from pathlib import Path

from surpsel import TokenScore, WordAlignment, aggregate_word_scores, build_unigram_model

TRANSCRIPT = "Kids are talking by the door"

# Word counts in the style of a big web corpus: function words frequent,
# content words rare.
COUNTS = {"kids": 60, "are": 2500, "talking": 200, "by": 3000, "the": 5000, "door": 800}

# Fabricated provider output: one or two tokens per word, character spans
# into TRANSCRIPT, natural-log probabilities, full-vocabulary ranks.
TOKENS = [
    TokenScore("Kids", 0, 4, logprob_e=-7.1, rank=912, vocab_size=50257),
    TokenScore(" are", 4, 8, logprob_e=-1.3, rank=3, vocab_size=50257),
    TokenScore(" talk", 8, 13, logprob_e=-4.2, rank=88, vocab_size=50257),
    TokenScore("ing", 13, 16, logprob_e=-0.2, rank=1, vocab_size=50257),
    TokenScore(" by", 16, 19, logprob_e=-2.6, rank=11, vocab_size=50257),
    TokenScore(" the", 19, 23, logprob_e=-0.4, rank=1, vocab_size=50257),
    TokenScore(" door", 23, 28, logprob_e=-3.4, rank=40, vocab_size=50257),
]

# Word time spans normally come from a forced-alignment file.
WORDS = [
    WordAlignment("kids", 0.10, 0.41),
    WordAlignment("are", 0.44, 0.58),
    WordAlignment("talking", 0.60, 1.05),
    WordAlignment("by", 1.08, 1.20),
    WordAlignment("the", 1.22, 1.33),
    WordAlignment("door", 1.36, 1.80),
]


def main():
    with tempfile.TemporaryDirectory() as tmp:
        counts_file = Path(tmp) / "counts.tsv"
        counts_file.write_text("".join(f"{w}\t{c}\n" for w, c in COUNTS.items()))
        unigram = build_unigram_model(counts_file)

    infos = aggregate_word_scores(TRANSCRIPT, TOKENS, WORDS, unigram)

    print(f"transcript: {TRANSCRIPT!r}\n")
    print(f"{'word':<10} {'span (s)':<14} {'unigram SR':>10} {'LLM SR':>8} {'norm rank':>10} {'tokens':>7}")
    for info in infos:
        span = f"{info.span[0]:.2f}-{info.span[1]:.2f}"
        print(
            f"{info.text:<10} {span:<14} {info.unigram_surprisal_bits:>10.3f} "
            f"{info.llm_surprisal_bits:>8.3f} {info.norm_rank:>10.5f} {info.token_count:>7}"
        )
    print(
        "\nHigh surprisal = unpredictable = informative. 'talking' splits into"
        "\ntwo tokens, so its LLM surprisal is the sum of both token surprisals."
    )


if __name__ == "__main__":
    main()
