"""Turn word scores into time spans: the top-n and independent-n regimes.

top-n concatenates the spans of the n most informative words (in temporal
order); independent-n keeps only the span of the word at ordered position n.
"""

from surpsel import WordInfo, rank_words, select_independent_n, select_top_n

WORDS = [
    WordInfo("kids", (0.10, 0.41), llm_surprisal_bits=10.2),
    WordInfo("are", (0.44, 0.58), llm_surprisal_bits=1.9),
    WordInfo("talking", (0.60, 1.05), llm_surprisal_bits=6.4),
    WordInfo("by", (1.08, 1.20), llm_surprisal_bits=3.7),
    WordInfo("the", (1.22, 1.33), llm_surprisal_bits=0.6),
    WordInfo("door", (1.36, 1.80), llm_surprisal_bits=4.9),
]


def main():
    order = rank_words(WORDS, "llm_sr")
    print("informativeness order:", [WORDS[i].text for i in order])
    print()
    print(f"{'n':>2}  {'top-n spans (temporal)':<42} independent-n span")
    for n in range(1, 7):
        top = select_top_n(WORDS, "llm_sr", n)
        ind = select_independent_n(WORDS, "llm_sr", n)
        top_txt = " + ".join(f"[{s:.2f},{e:.2f}]" for s, e in top.spans)
        ind_txt = f"[{ind.spans[0][0]:.2f},{ind.spans[0][1]:.2f}]"
        print(f"{n:>2}  {top_txt:<42} {ind_txt}")
    print("\nNote: row 1 is identical in both regimes, by definition.")


if __name__ == "__main__":
    main()
