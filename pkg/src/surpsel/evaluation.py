"""Speaker-disjoint cross-validation over the selection grid.

Each fold holds out one male and one female speaker for testing and carves a
second sex-balanced pair out of the remaining speakers for the validation
curve.  The experiment grid crosses feature kind x criterion x mode x n,
plus one full-utterance baseline per feature kind.  Utterances that a cell
cannot serve (empty segment, ordered position past the word count) are
excluded from that cell's train and test data and counted, never imputed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .acoustics import EmptySegmentError, FrameSeries, pool_functionals
from .embeddings import FrameEmbeddings, pool_mean_std
from .informativeness import WordInfo
from .model import MLPConfig, predict, standardize_apply, standardize_fit, train
from .selection import (
    PositionUnavailableError,
    select_full_utterance,
    select_independent_n,
    select_top_n,
)

N_CLASSES = 7

FEATURE_KINDS = ("functionals", "embeddings")

# (feature_kind, criterion, mode, n); the full-utterance baseline is
# ("<kind>", "none", "full_utterance", 0).
CellKey = tuple[str, str, str, int]


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class FoldSpec:
    fold_id: int
    test_speakers: tuple[int, int]  # (male, female)
    val_speakers: tuple[int, int]  # (male, female)
    train_speakers: tuple[int, ...]

    def __post_init__(self):
        test, val, trn = set(self.test_speakers), set(self.val_speakers), set(self.train_speakers)
        if test & val or test & trn or val & trn:
            raise EvalError(f"fold {self.fold_id}: speaker sets overlap")


def make_folds(
    speakers: list[tuple[int, str]], k: int = 10, seed: int = 0
) -> list[FoldSpec]:
    """Build k folds, each testing a distinct (male, female) speaker pair.

    Test pairs are assigned deterministically from the sex-partitioned,
    id-sorted speaker lists; the seed only draws each fold's validation pair
    from that fold's training speakers.
    """
    males = sorted(sid for sid, sex in speakers if sex == "male")
    females = sorted(sid for sid, sex in speakers if sex == "female")
    if len(males) + len(females) != len(speakers):
        raise EvalError("speaker sex must be 'male' or 'female'")
    if len(males) < max(k, 2) or len(females) < max(k, 2):
        raise EvalError(
            f"need at least {max(k, 2)} speakers of each sex for {k} folds, "
            f"got {len(males)} male / {len(females)} female"
        )
    folds = []
    for f in range(1, k + 1):
        test_m, test_f = males[f - 1], females[f - 1]
        rest_m = [s for s in males if s != test_m]
        rest_f = [s for s in females if s != test_f]
        rng = np.random.default_rng([seed, f])
        val_m = int(rng.choice(rest_m))
        val_f = int(rng.choice(rest_f))
        train_ids = tuple(
            sorted(s for s in males + females if s not in (test_m, test_f, val_m, val_f))
        )
        folds.append(
            FoldSpec(
                fold_id=f,
                test_speakers=(test_m, test_f),
                val_speakers=(val_m, val_f),
                train_speakers=train_ids,
            )
        )
    return folds


def compute_metrics(
    predictions: list[tuple[int, int]], n_classes: int = N_CLASSES
) -> tuple[float, float]:
    """(unweighted accuracy, macro F1) over (true, predicted) pairs.

    Macro F1 averages per-class F1 over all ``n_classes`` classes; a class
    absent from both truth and prediction contributes F1 = 0.
    """
    if not predictions:
        raise EvalError("no predictions")
    true = np.array([t for t, _ in predictions])
    pred = np.array([p for _, p in predictions])
    if true.min() < 0 or true.max() >= n_classes or pred.min() < 0 or pred.max() >= n_classes:
        raise EvalError(f"labels must lie in 0..{n_classes - 1}")
    accuracy = float(np.mean(true == pred))
    f1_sum = 0.0
    for c in range(n_classes):
        tp = int(np.sum((pred == c) & (true == c)))
        fp = int(np.sum((pred == c) & (true != c)))
        fn = int(np.sum((pred != c) & (true == c)))
        denom = 2 * tp + fp + fn
        f1_sum += (2 * tp / denom) if denom else 0.0
    return accuracy, f1_sum / n_classes


@dataclass
class ExperimentConfig:
    feature_kinds: tuple[str, ...] = FEATURE_KINDS
    criteria: tuple[str, ...] = ("unigram_sr", "llm_sr", "rank")
    modes: tuple[str, ...] = ("top_n", "independent_n")
    n_values: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    include_baseline: bool = True
    folds: int = 10
    seed: int = 7
    hidden: tuple[int, ...] = (256, 128, 64, 32)
    dropout_p: float = 0.1
    lr: float = 1e-4
    batch_size: int = 200
    epochs: int = 100
    loss: str = "bce"

    def to_dict(self) -> dict:
        return {
            "feature_kinds": list(self.feature_kinds),
            "criteria": list(self.criteria),
            "modes": list(self.modes),
            "n_values": list(self.n_values),
            "include_baseline": self.include_baseline,
            "folds": self.folds,
            "seed": self.seed,
            "hidden": list(self.hidden),
            "dropout_p": self.dropout_p,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "loss": self.loss,
        }


def grid_cells(config: ExperimentConfig) -> list[CellKey]:
    cells: list[CellKey] = []
    for kind in config.feature_kinds:
        for criterion in config.criteria:
            for mode in config.modes:
                for n in config.n_values:
                    cells.append((kind, criterion, mode, n))
        if config.include_baseline:
            cells.append((kind, "none", "full_utterance", 0))
    return cells


def cell_name(cell: CellKey) -> str:
    kind, criterion, mode, n = cell
    if mode == "full_utterance":
        return f"{kind}/baseline"
    return f"{kind}/{criterion}/{mode}/{n}"


@dataclass
class ExperimentData:
    """Everything run_experiment needs, decoupled from file layout.

    ``frame_series`` and ``frame_embeddings`` are per-utterance providers so
    large corpora can stream from disk instead of living in memory.
    """

    speakers: list[tuple[int, str]]
    utterance_ids: list[str]
    labels: dict[str, int]
    speaker_of: dict[str, int]
    durations: dict[str, float]
    scored_words: dict[str, list[WordInfo]]
    frame_series: Callable[[str], FrameSeries] | None = None
    frame_embeddings: Callable[[str], FrameEmbeddings] | None = None


@dataclass
class CellFeatures:
    ids: list[str]
    matrix: np.ndarray  # (n_kept, dim)
    skipped: list[str]


@dataclass
class CellResult:
    feature_kind: str
    criterion: str
    mode: str
    n: int
    fold_accuracy: list[float] = field(default_factory=list)
    fold_f1: list[float] = field(default_factory=list)
    n_used: int = 0
    skipped: list[str] = field(default_factory=list)
    failed: bool = False
    error: str | None = None

    @property
    def accuracy_mean(self) -> float:
        return float(np.mean(self.fold_accuracy)) if self.fold_accuracy else float("nan")

    @property
    def accuracy_std(self) -> float:
        return float(np.std(self.fold_accuracy)) if self.fold_accuracy else float("nan")

    @property
    def f1_mean(self) -> float:
        return float(np.mean(self.fold_f1)) if self.fold_f1 else float("nan")

    @property
    def f1_std(self) -> float:
        return float(np.std(self.fold_f1)) if self.fold_f1 else float("nan")


@dataclass
class MetricsReport:
    config: dict
    folds: list[FoldSpec]
    cells: dict[CellKey, CellResult]

    @property
    def any_failed(self) -> bool:
        return any(c.failed for c in self.cells.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "folds": [
                {
                    "fold_id": f.fold_id,
                    "test_speakers": list(f.test_speakers),
                    "val_speakers": list(f.val_speakers),
                    "train_speakers": list(f.train_speakers),
                }
                for f in self.folds
            ],
            "cells": [
                {
                    "feature_kind": c.feature_kind,
                    "criterion": c.criterion,
                    "mode": c.mode,
                    "n": c.n,
                    "fold_accuracy": c.fold_accuracy,
                    "fold_f1": c.fold_f1,
                    "n_used": c.n_used,
                    "skipped": sorted(c.skipped),
                    "failed": c.failed,
                    "error": c.error,
                }
                for _, c in sorted(self.cells.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        folds = [
            FoldSpec(
                fold_id=f["fold_id"],
                test_speakers=tuple(f["test_speakers"]),
                val_speakers=tuple(f["val_speakers"]),
                train_speakers=tuple(f["train_speakers"]),
            )
            for f in data["folds"]
        ]
        cells = {}
        for c in data["cells"]:
            key = (c["feature_kind"], c["criterion"], c["mode"], c["n"])
            cells[key] = CellResult(
                feature_kind=c["feature_kind"],
                criterion=c["criterion"],
                mode=c["mode"],
                n=c["n"],
                fold_accuracy=c["fold_accuracy"],
                fold_f1=c["fold_f1"],
                n_used=c["n_used"],
                skipped=c["skipped"],
                failed=c["failed"],
                error=c["error"],
            )
        return cls(config=data["config"], folds=folds, cells=cells)


def selection_for_cell(cell: CellKey, words, duration: float):
    _, criterion, mode, n = cell
    if mode == "full_utterance":
        return select_full_utterance(duration)
    if mode == "top_n":
        return select_top_n(words, criterion, n)
    return select_independent_n(words, criterion, n)


def build_cell_features(
    data: ExperimentData, config: ExperimentConfig
) -> dict[CellKey, CellFeatures]:
    """Pool feature vectors for every grid cell, utterance-major.

    Each utterance's frame series / embeddings are loaded once and pooled
    under every cell's selection, so providers are hit O(n_utterances) times.
    """
    cells = grid_cells(config)
    per_cell: dict[CellKey, tuple[list[str], list[np.ndarray], list[str]]] = {
        cell: ([], [], []) for cell in cells
    }
    for utt_id in data.utterance_ids:
        words = data.scored_words[utt_id]
        duration = data.durations[utt_id]
        series = None
        emb = None
        for cell in cells:
            kind = cell[0]
            ids, rows, skipped = per_cell[cell]
            try:
                sel = selection_for_cell(cell, words, duration)
                if kind == "functionals":
                    if series is None:
                        series = data.frame_series(utt_id)
                    vector = pool_functionals(series, sel).values
                else:
                    if emb is None:
                        emb = data.frame_embeddings(utt_id)
                    vector = pool_mean_std(emb, sel).values
            except (EmptySegmentError, PositionUnavailableError):
                skipped.append(utt_id)
                continue
            ids.append(utt_id)
            rows.append(vector)
    features = {}
    for cell, (ids, rows, skipped) in per_cell.items():
        matrix = np.vstack(rows) if rows else np.empty((0, 0))
        features[cell] = CellFeatures(ids=ids, matrix=matrix, skipped=skipped)
    return features


def cell_fold_seed(base_seed: int, cell: CellKey, fold_id: int) -> int:
    digest = hashlib.sha256(
        f"{base_seed}|{cell_name(cell)}|{fold_id}".encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:4], "little")


def evaluate_cells(
    features: dict[CellKey, CellFeatures],
    data: ExperimentData,
    config: ExperimentConfig,
    progress: Callable[[str], None] | None = None,
) -> MetricsReport:
    """Train and score one classifier per (cell, fold); aggregate per cell."""
    folds = make_folds(data.speakers, k=config.folds, seed=config.seed)
    cells: dict[CellKey, CellResult] = {}
    for cell, feats in sorted(features.items()):
        kind, criterion, mode, n = cell
        result = CellResult(
            feature_kind=kind,
            criterion=criterion,
            mode=mode,
            n=n,
            n_used=len(feats.ids),
            skipped=list(feats.skipped),
        )
        try:
            speaker_ids = np.array([data.speaker_of[u] for u in feats.ids])
            labels = np.array([data.labels[u] for u in feats.ids])
            for fold in folds:
                train_mask = np.isin(speaker_ids, fold.train_speakers)
                val_mask = np.isin(speaker_ids, fold.val_speakers)
                test_mask = np.isin(speaker_ids, fold.test_speakers)
                if not train_mask.any() or not test_mask.any():
                    raise EvalError(
                        f"fold {fold.fold_id}: empty train or test partition"
                    )
                mean, std = standardize_fit(feats.matrix[train_mask])
                x_train = standardize_apply(feats.matrix[train_mask], mean, std)
                x_val = standardize_apply(feats.matrix[val_mask], mean, std)
                x_test = standardize_apply(feats.matrix[test_mask], mean, std)
                mlp_config = MLPConfig(
                    input_dim=x_train.shape[1],
                    hidden=config.hidden,
                    output_dim=N_CLASSES,
                    dropout_p=config.dropout_p,
                    lr=config.lr,
                    batch_size=config.batch_size,
                    epochs=config.epochs,
                    seed=cell_fold_seed(config.seed, cell, fold.fold_id),
                    loss=config.loss,
                )
                val_set = (x_val, labels[val_mask]) if val_mask.any() else None
                params, _ = train(mlp_config, (x_train, labels[train_mask]), val_set)
                predicted = predict(params, x_test, mlp_config)
                pairs = list(zip(labels[test_mask].tolist(), predicted.tolist()))
                accuracy, f1 = compute_metrics(pairs)
                result.fold_accuracy.append(accuracy)
                result.fold_f1.append(f1)
        except Exception as exc:  # a failing fold marks the cell, run continues
            result.failed = True
            result.error = f"{type(exc).__name__}: {exc}"
        cells[cell] = result
        if progress:
            status = "FAILED" if result.failed else f"acc={result.accuracy_mean:.4f}"
            progress(f"{cell_name(cell)}: {status} (skipped {len(result.skipped)})")
    return MetricsReport(config=config.to_dict(), folds=folds, cells=cells)


def run_experiment(
    data: ExperimentData,
    config: ExperimentConfig,
    progress: Callable[[str], None] | None = None,
) -> MetricsReport:
    """Pool features for the whole grid, then cross-validate every cell."""
    features = build_cell_features(data, config)
    return evaluate_cells(features, data, config, progress=progress)


def config_hash(config_dict: dict) -> str:
    return hashlib.sha256(
        json.dumps(config_dict, sort_keys=True).encode("utf-8")
    ).hexdigest()


DECISION_FLAGS = {
    "frame_masking": True,
    "multi_token_rank_aggregation": "mean",
    "top_n_concat_order": "temporal",
    "std_kind": "population",
    "oov_unigram_probability": "1/(total+1)",
}


def emit_report(report: MetricsReport, out_dir: Path | str) -> list[Path]:
    """Write per-feature-kind tables, figure data, and the run manifest.

    Tables carry percentages (two decimals); the figure CSV carries raw
    fractions.  Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    kinds = sorted({c.feature_kind for c in report.cells.values()})
    criteria = [c for c in ("unigram_sr", "llm_sr", "rank")
                if any(cell[1] == c for cell in report.cells)]
    n_values = sorted({c.n for c in report.cells.values() if c.mode != "full_utterance"})

    for kind in kinds:
        path = out_dir / f"table_{kind}.csv"
        lines = []
        header = ["mode", "n"]
        for criterion in criteria:
            header += [f"{criterion}_acc", f"{criterion}_f1"]
        lines.append(",".join(header))

        def fmt(cell_key):
            cell = report.cells.get(cell_key)
            if cell is None or cell.failed or not cell.fold_accuracy:
                return ["", ""]
            return [f"{100 * cell.accuracy_mean:.2f}", f"{100 * cell.f1_mean:.2f}"]

        for mode in ("top_n", "independent_n"):
            for n in n_values:
                row = [mode, str(n)]
                for criterion in criteria:
                    row += fmt((kind, criterion, mode, n))
                lines.append(",".join(row))
        baseline = report.cells.get((kind, "none", "full_utterance", 0))
        if baseline is not None:
            row = ["full_utterance", "0"]
            for _ in criteria:
                row += (
                    ["", ""]
                    if baseline.failed or not baseline.fold_accuracy
                    else [f"{100 * baseline.accuracy_mean:.2f}", f"{100 * baseline.f1_mean:.2f}"]
                )
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    fig_path = out_dir / "fig_accuracy_vs_n.csv"
    lines = ["feature_kind,criterion,mode,n,acc_mean,acc_std"]
    for cell_key, cell in sorted(report.cells.items()):
        if cell.failed or not cell.fold_accuracy:
            continue
        criterion = "baseline" if cell.mode == "full_utterance" else cell.criterion
        lines.append(
            f"{cell.feature_kind},{criterion},{cell.mode},{cell.n},"
            f"{cell.accuracy_mean:.6f},{cell.accuracy_std:.6f}"
        )
    fig_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(fig_path)

    manifest = {
        "config": report.config,
        "config_hash": config_hash(report.config),
        "seed": report.config.get("seed"),
        "folds": [
            {
                "fold_id": f.fold_id,
                "test_speakers": list(f.test_speakers),
                "val_speakers": list(f.val_speakers),
            }
            for f in report.folds
        ],
        "skip_counts": {
            cell_name(key): len(cell.skipped) for key, cell in sorted(report.cells.items())
        },
        "failed_cells": [
            cell_name(key) for key, cell in sorted(report.cells.items()) if cell.failed
        ],
        "decisions": DECISION_FLAGS,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(manifest_path)
    return written
