"""Acceptance criteria, one test per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see one PASS line per
criterion.  Each test pins the stated tolerance and, where stated, the
runtime budget.  The final test is the optional integration target against
the real corpus: it reports and never gates, and skips unless the
environment points at real data.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from surpsel.acoustics import (
    compute_frame_series,
    compute_spectral_descriptors,
    estimate_f0,
    mfcc_from_log_mel,
    pool_functionals,
)
from surpsel.cli import stage_run
from surpsel.config import load_config
from surpsel.corpus import WordAlignment
from surpsel.embeddings import FrameEmbeddings, pool_mean_std
from surpsel.evaluation import compute_metrics, make_folds
from surpsel.informativeness import (
    LN2,
    TokenScore,
    aggregate_word_scores,
    build_unigram_model,
    unigram_surprisal,
)
from surpsel.model import (
    MLPConfig,
    predict,
    standardize_apply,
    standardize_fit,
    train,
)
from surpsel.selection import (
    PositionUnavailableError,
    select_full_utterance,
    select_independent_n,
    select_top_n,
)
from surpsel.synthetic import make_smoke_corpus

from test_model import make_blobs, max_relative_gradient_error
from test_selection import brute_force_order, make_words

SR = 16000


def report_pass(name):
    print(f"\nACCEPTANCE PASS: {name}")


class TestSurprisalAlgebra:
    def test_surprisal_algebra(self, tmp_path):
        rng = np.random.default_rng(101)
        for _ in range(10_000):
            n_tokens = int(rng.integers(1, 6))
            text = "x" * (2 * n_tokens)
            words = [WordAlignment(text, 0.0, 1.0)]
            tokens = [
                TokenScore(
                    text=text[2 * j : 2 * j + 2],
                    char_start=2 * j,
                    char_end=2 * j + 2,
                    logprob_e=float(-rng.uniform(0.001, 25.0)),
                    rank=int(rng.integers(1, 50258)),
                    vocab_size=50257,
                )
                for j in range(n_tokens)
            ]
            info = aggregate_word_scores(text, tokens, words)[0]
            running = 0.0
            for t in tokens:
                running = running + (-t.logprob_e / LN2)
            assert info.llm_surprisal_bits == running  # exact, not approximate
            assert info.llm_surprisal_bits >= 0.0

        counts = tmp_path / "counts.tsv"
        counts.write_text("the\t1000\nkids\t10\n")
        model = build_unigram_model(counts)
        assert abs(unigram_surprisal(model, "the") - (-math.log2(1000 / 1010))) < 1e-12
        assert abs(unigram_surprisal(model, "kids") - (-math.log2(10 / 1010))) < 1e-12
        assert unigram_surprisal(model, "oovword") == -math.log2(1.0 / 1011)
        report_pass("surprisal algebra (10^4 token sets exact; unigram 1e-12; OOV exact)")


class TestMetricReconstruction:
    def test_degenerate_cell_reconstruction(self):
        start = time.perf_counter()
        pairs = []
        for _ in range(2):  # two held-out speakers
            pairs += [(0, 1)] * 12
            for c in range(1, 7):
                pairs += [(c, 1)] * 8
        accuracy, macro_f1 = compute_metrics(pairs)
        assert abs(accuracy * 100 - 13.33) <= 0.1
        assert abs(macro_f1 * 100 - 3.36) <= 0.05
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0
        report_pass(
            f"metric reconstruction (acc {accuracy * 100:.2f} within 13.33+-0.1, "
            f"macro-F1 {macro_f1 * 100:.2f} within 3.36+-0.05, {elapsed:.3f}s)"
        )


class TestSelectionOracle:
    def test_selection_matches_brute_force(self):
        rng = np.random.default_rng(103)
        for case in range(1000):
            n_words = int(rng.integers(1, 11))
            if case % 3 == 0:  # force ties
                values = rng.choice([0.5, 1.0, 1.0, 2.0], size=n_words).tolist()
            else:
                values = rng.uniform(0, 10, size=n_words).tolist()
            words = make_words(values)
            oracle = brute_force_order(values)

            for n in range(1, n_words + 2):
                top = select_top_n(words, "llm_sr", n)
                expected = tuple(words[i].span for i in sorted(oracle[: min(n, n_words)]))
                assert top.spans == expected
                if n > n_words:
                    assert top.clamped
                if n <= n_words:
                    ind = select_independent_n(words, "llm_sr", n)
                    assert ind.spans == (words[oracle[n - 1]].span,)
                else:
                    with pytest.raises(PositionUnavailableError):
                        select_independent_n(words, "llm_sr", n)

            top1 = select_top_n(words, "llm_sr", 1)
            ind1 = select_independent_n(words, "llm_sr", 1)
            assert top1.spans == ind1.spans
        report_pass("selection oracle (10^3 utterances, ties included, top-1 == independent-1)")


class TestFrameMaskEquivalence:
    def test_full_span_bit_identical(self):
        rng = np.random.default_rng(104)
        for _ in range(100):
            duration = float(rng.uniform(0.2, 1.5))
            freq = float(rng.uniform(70, 400))
            t = np.arange(int(SR * duration)) / SR
            samples = (
                0.4 * (2 * ((freq * t + 0.37) % 1.0) - 1.0)
                + 0.05 * rng.standard_normal(len(t))
            )
            series = compute_frame_series(samples, SR, "u")
            functional_full = pool_functionals(series, select_full_utterance(duration))
            functional_base = pool_functionals(series, None)
            assert np.array_equal(functional_full.values, functional_base.values)

            n_frames = int(rng.integers(1, 120))
            rows = rng.standard_normal((n_frames, 24)).astype(np.float32)
            emb = FrameEmbeddings("u", hop_s=0.02, offset_s=0.01, rows=rows)
            emb_duration = float(emb.frame_centers()[-1]) + 0.005
            pooled_full = pool_mean_std(emb, select_full_utterance(emb_duration))
            pooled_base = pool_mean_std(emb, None)
            assert np.array_equal(pooled_full.values, pooled_base.values)
        report_pass("frame-mask equivalence (100 utterances, bit-identical)")


class TestDSPOracles:
    def test_dsp_oracles(self):
        start = time.perf_counter()

        # 120 Hz sawtooth: F0 within +-3% on every voiced frame, all voiced
        t = np.arange(SR) / SR
        saw = 2 * ((120 * t + 0.37) % 1.0) - 1.0
        frames = [saw[i * 160 : i * 160 + 400] for i in range((len(saw) - 400) // 160 + 1)]
        f0s = [estimate_f0(fr, SR)[0] for fr in frames]
        assert all(f0 is not None for f0 in f0s)
        assert max(abs(f0 - 120) / 120 for f0 in f0s) < 0.03

        # 1 kHz tone: centroid within +-5%
        tone = np.sin(2 * np.pi * 1000 * np.arange(400) / SR) * np.hanning(400)
        _, centroid, _ = compute_spectral_descriptors(tone, SR)
        assert abs(centroid - 1000) / 1000 < 0.05

        # flat magnitude spectrum: |tilt| < 1e-6
        impulse = np.zeros(400)
        impulse[173] = 0.8
        tilt, _, _ = compute_spectral_descriptors(impulse, SR)
        assert abs(tilt) < 1e-6

        # constant log-mel: |MFCC 1..13| < 1e-6
        assert np.max(np.abs(mfcc_from_log_mel(np.full(26, -4.2)))) < 1e-6

        # waveform scaling leaves MFCC 1..13 within 1e-6
        rng = np.random.default_rng(105)
        for _ in range(25):
            frame = (
                np.sin(2 * np.pi * rng.uniform(80, 4000) * np.arange(400) / SR)
                + 0.3 * rng.standard_normal(400)
            ) * np.hanning(400)
            k = float(rng.uniform(0.01, 100.0))
            _, _, m1 = compute_spectral_descriptors(frame, SR)
            _, _, m2 = compute_spectral_descriptors(k * frame, SR)
            assert np.max(np.abs(m1 - m2)) < 1e-6

        elapsed = time.perf_counter() - start
        assert elapsed < 30.0
        report_pass(f"DSP oracles (F0 +-3%, centroid +-5%, tilt/MFCC 1e-6, {elapsed:.2f}s)")


class TestGradientCheck:
    def test_gradients_on_20_networks(self):
        start = time.perf_counter()
        worst = 0.0
        for seed in range(20):
            worst = max(worst, max_relative_gradient_error(seed))
        elapsed = time.perf_counter() - start
        assert worst < 1e-4
        assert elapsed < 60.0
        report_pass(f"gradient check (20 networks, max rel err {worst:.2e} < 1e-4, {elapsed:.1f}s)")


class TestTrainingSanity:
    def test_separable_blobs_at_reference_hyperparameters(self):
        start = time.perf_counter()
        results = {}
        for dim in (35, 1536):
            (x_train, y_train), (x_test, y_test) = make_blobs(
                7, dim, n_train=100, n_test=30, seed=200 + dim
            )
            mean, std = standardize_fit(x_train)
            config = MLPConfig(
                input_dim=dim,
                hidden=(256, 128, 64, 32),
                output_dim=7,
                dropout_p=0.1,
                lr=1e-4,
                batch_size=200,
                epochs=100,
                seed=77,
                loss="bce",
            )
            params, _ = train(config, (standardize_apply(x_train, mean, std), y_train))
            accuracy = float(
                np.mean(predict(params, standardize_apply(x_test, mean, std), config) == y_test)
            )
            results[dim] = accuracy
            assert accuracy >= 0.95

            rerun, _ = train(config, (standardize_apply(x_train, mean, std), y_train))
            for a, b in zip(params.weights + params.biases, rerun.weights + rerun.biases):
                assert np.array_equal(a, b)
        elapsed = time.perf_counter() - start
        assert elapsed < 300.0
        report_pass(
            "training sanity (dim 35 acc "
            f"{results[35]:.3f}, dim 1536 acc {results[1536]:.3f}, both >= 0.95, "
            f"bit-identical reruns, {elapsed:.1f}s)"
        )


class TestCVProperties:
    def test_folds_and_end_to_end_run(self, tmp_path):
        start = time.perf_counter()

        speakers = [(i, "male" if i % 2 == 1 else "female") for i in range(1, 25)]
        folds = make_folds(speakers, k=10, seed=11)
        assert len(folds) == 10
        for fold in folds:
            test = set(fold.test_speakers)
            rest = set(fold.val_speakers) | set(fold.train_speakers)
            assert not test & rest
            male, female = fold.test_speakers
            assert male % 2 == 1 and female % 2 == 0
        assert len({fold.test_speakers for fold in folds}) == 10

        paths = make_smoke_corpus(tmp_path / "smoke", n_speakers=24, seed=7)
        config = load_config(paths.config_path)
        exit_code = stage_run(config)
        metrics = json.loads((paths.out_dir / "metrics.json").read_text())
        assert len(metrics["cells"]) == 74
        failed = [c for c in metrics["cells"] if c["failed"]]
        assert failed == []
        assert exit_code == 0
        report_dir = paths.out_dir / "report"
        for name in ("table_functionals.csv", "table_embeddings.csv",
                     "fig_accuracy_vs_n.csv", "manifest.json"):
            assert (report_dir / name).exists()

        elapsed = time.perf_counter() - start
        assert elapsed < 300.0
        report_pass(
            f"CV properties (10 disjoint 1M+1F folds; end-to-end run emitted all "
            f"74 cells with 0 failures, {elapsed:.1f}s)"
        )


class TestOptionalIntegration:
    """Reported, not gating: needs real RAVDESS audio plus exporter outputs."""

    def test_real_corpus_targets(self):
        required = {
            "RAVDESS_AUDIO_DIR": os.environ.get("RAVDESS_AUDIO_DIR"),
            "SURPSEL_ALIGNMENTS": os.environ.get("SURPSEL_ALIGNMENTS"),
            "SURPSEL_TOKEN_SCORES": os.environ.get("SURPSEL_TOKEN_SCORES"),
            "SURPSEL_EMBEDDINGS_DIR": os.environ.get("SURPSEL_EMBEDDINGS_DIR"),
            "SURPSEL_COUNTS": os.environ.get("SURPSEL_COUNTS"),
        }
        missing = [k for k, v in required.items() if not v]
        if missing:
            pytest.skip(f"integration inputs not supplied: {', '.join(missing)}")

        out_dir = Path(os.environ.get("SURPSEL_OUT", "integration_out"))
        config = load_config(
            None,
            overrides={
                "audio_dir": required["RAVDESS_AUDIO_DIR"],
                "alignments": required["SURPSEL_ALIGNMENTS"],
                "token_scores": required["SURPSEL_TOKEN_SCORES"],
                "embeddings_dir": required["SURPSEL_EMBEDDINGS_DIR"],
                "counts_file": required["SURPSEL_COUNTS"],
                "out_dir": str(out_dir),
            },
        )
        stage_run(config)
        metrics = json.loads((out_dir / "metrics.json").read_text())
        cells = {
            (c["feature_kind"], c["criterion"], c["mode"], c["n"]): c
            for c in metrics["cells"]
        }
        baseline = cells[("embeddings", "none", "full_utterance", 0)]
        base_acc = float(np.mean(baseline["fold_accuracy"]))
        beats = [
            n for n in range(1, 7)
            if float(np.mean(cells[("embeddings", "llm_sr", "top_n", n)]["fold_accuracy"])) > base_acc
        ]
        top4 = float(np.mean(cells[("embeddings", "llm_sr", "top_n", 4)]["fold_accuracy"]))
        print(
            "\nACCEPTANCE REPORT (integration, non-gating): "
            f"baseline {100 * base_acc:.2f}%, LLM-SR top-n beating baseline at n={beats}, "
            f"top-4 {100 * top4:.2f}% vs published 63.23 (+-4 target: "
            f"{'met' if abs(100 * top4 - 63.23) <= 4 else 'NOT met'})"
        )
