"""Batch pipeline command line: prepare / score / select / extract / pool /
train / evaluate / run / report.

Each stage reads the previous stage's files under ``out_dir``, caches its
outputs behind a content-hash stamp, and is skipped on rerun when inputs and
the relevant config subset are unchanged.  All outputs are byte-deterministic
for fixed inputs and seeds.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import acoustics, corpus, embeddings, evaluation, informativeness, selection
from .config import ConfigError, RunConfig, load_config, validate_paths
from .model import MLPConfig, save_checkpoint, standardize_apply, standardize_fit, train

logger = logging.getLogger(__name__)

EXPORTER_HINT = (
    "token scores are produced by the exporter package: "
    "`surpsel-export-tokens --transcripts <file> --out <token_scores.jsonl>`"
)


# ---------------------------------------------------------------------------
# stage caching

def _digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_tree(path: Path, suffix: str) -> str:
    h = hashlib.sha256()
    for f in sorted(path.rglob(f"*{suffix}")):
        h.update(str(f.relative_to(path)).encode())
        h.update(_digest_file(f).encode())
    return h.hexdigest()


def _digest_parts(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(json.dumps(part, sort_keys=True, default=str).encode())
    return h.hexdigest()


def _stamp_path(config: RunConfig, stage: str) -> Path:
    return Path(config.out_dir) / ".stamps" / f"{stage}.json"


def _stage_cached(config: RunConfig, stage: str, digest: str, outputs: list[Path]) -> bool:
    stamp = _stamp_path(config, stage)
    if not stamp.exists() or not all(p.exists() for p in outputs):
        return False
    try:
        return json.loads(stamp.read_text())["digest"] == digest
    except (json.JSONDecodeError, KeyError):
        return False


def _write_stamp(config: RunConfig, stage: str, digest: str) -> None:
    stamp = _stamp_path(config, stage)
    stamp.parent.mkdir(parents=True, exist_ok=True)
    stamp.write_text(json.dumps({"digest": digest}, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# stages

def stage_prepare(config: RunConfig) -> Path:
    """Load and validate the corpus; write the utterance index."""
    validate_paths(config, ("audio_dir", "alignments"))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index_path = out_dir / "corpus_index.jsonl"
    summary_path = out_dir / "prepare_summary.json"

    digest = _digest_parts(
        _digest_tree(Path(config.audio_dir), ".wav"),
        _digest_file(Path(config.alignments)),
    )
    if _stage_cached(config, "prepare", digest, [index_path, summary_path]):
        logger.info("prepare: cached")
        return index_path

    result = corpus.load_corpus(config.audio_dir, config.alignments)
    lines = []
    label_counts: dict[str, int] = {}
    for utt in result.utterances:
        label_counts[utt.emotion.value] = label_counts.get(utt.emotion.value, 0) + 1
        lines.append(
            json.dumps(
                {
                    "id": utt.id,
                    "speaker": utt.speaker_id,
                    "sex": utt.speaker_sex,
                    "label": utt.emotion.value,
                    "label_index": corpus.LABEL_INDEX[utt.emotion],
                    "intensity": utt.intensity,
                    "duration_s": round(utt.duration_s, 6),
                    "transcript": utt.transcript,
                    "words": [[w.text, w.start_s, w.end_s] for w in utt.words],
                },
                sort_keys=True,
            )
        )
    index_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    summary_path.write_text(
        json.dumps(
            {
                "n_loaded": result.n_loaded,
                "missing_alignment": sorted(result.missing_alignment),
                "invalid_names": sorted(result.invalid_names),
                "label_counts": label_counts,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    _write_stamp(config, "prepare", digest)
    logger.info("prepare: %d utterances", result.n_loaded)
    return index_path


def _read_index(config: RunConfig) -> list[dict]:
    index_path = Path(config.out_dir) / "corpus_index.jsonl"
    if not index_path.exists():
        raise ConfigError("corpus index missing; run `surpsel prepare` first")
    records = []
    with open(index_path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(json.loads(line))
    return records


def stage_score(config: RunConfig) -> Path:
    """Score every utterance's words under the configured criteria."""
    validate_paths(config, ("counts_file",))
    out_dir = Path(config.out_dir)

    llm_requested = bool({"llm_sr", "rank"} & set(config.criteria))
    if llm_requested and config.token_scores is None:
        raise ConfigError(
            f"criteria {config.criteria} need a token-score file; {EXPORTER_HINT}"
        )
    if llm_requested:
        validate_paths(config, ("token_scores",))

    index = _read_index(config)
    scores_path = out_dir / "scores.jsonl"
    meta_path = out_dir / "scores_meta.json"
    digest = _digest_parts(
        _digest_file(out_dir / "corpus_index.jsonl"),
        _digest_file(Path(config.counts_file)),
        _digest_file(Path(config.token_scores)) if llm_requested else "",
        list(config.criteria),
    )
    if _stage_cached(config, "score", digest, [scores_path, meta_path]):
        logger.info("score: cached")
        return scores_path

    unigram = informativeness.build_unigram_model(config.counts_file)
    token_records = (
        informativeness.load_token_scores(config.token_scores) if llm_requested else {}
    )

    lines = []
    for record in index:
        words = [
            corpus.WordAlignment(text=w, start_s=s, end_s=e)
            for w, s, e in record["words"]
        ]
        if llm_requested:
            if record["id"] not in token_records:
                raise ConfigError(
                    f"no token scores for utterance {record['id']}; {EXPORTER_HINT}"
                )
            text, tokens = token_records[record["id"]]
            infos = informativeness.aggregate_word_scores(text, tokens, words, unigram)
        else:
            infos = informativeness.unigram_word_scores(words, unigram)
        lines.append(
            json.dumps(
                {
                    "id": record["id"],
                    "words": [
                        {
                            "text": w.text,
                            "s": w.span[0],
                            "e": w.span[1],
                            "uni_sr": w.unigram_surprisal_bits,
                            "llm_sr": w.llm_surprisal_bits,
                            "norm_rank": w.norm_rank,
                            "n_tok": w.token_count,
                        }
                        for w in infos
                    ],
                },
                sort_keys=True,
            )
        )
    scores_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    meta_path.write_text(
        json.dumps(
            {
                "criteria": list(config.criteria),
                "multi_token_rank_aggregation": "mean",
                "surprisal_unit": "bits",
                "oov_rule": "1/(total+1)",
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    _write_stamp(config, "score", digest)
    logger.info("score: %d utterances", len(lines))
    return scores_path


def _read_scores(config: RunConfig) -> dict[str, list[informativeness.WordInfo]]:
    scores_path = Path(config.out_dir) / "scores.jsonl"
    if not scores_path.exists():
        raise ConfigError("scores missing; run `surpsel score` first")
    scored: dict[str, list[informativeness.WordInfo]] = {}
    with open(scores_path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            scored[record["id"]] = [
                informativeness.WordInfo(
                    text=w["text"],
                    span=(w["s"], w["e"]),
                    llm_surprisal_bits=w["llm_sr"],
                    unigram_surprisal_bits=w["uni_sr"],
                    norm_rank=w["norm_rank"],
                    token_count=w["n_tok"],
                )
                for w in record["words"]
            ]
    return scored


def _experiment_config(config: RunConfig) -> evaluation.ExperimentConfig:
    return evaluation.ExperimentConfig(
        feature_kinds=config.feature_kinds,
        criteria=config.criteria,
        modes=config.selection_modes,
        n_values=config.n_values,
        include_baseline=config.include_baseline,
        folds=config.folds,
        seed=config.seed,
        hidden=config.hidden,
        dropout_p=config.dropout_p,
        lr=config.lr,
        batch_size=config.batch_size,
        epochs=config.epochs,
        loss=config.loss,
    )


def stage_select(config: RunConfig) -> Path:
    """Materialize span selections for every (utterance, grid cell)."""
    out_dir = Path(config.out_dir)
    scored = _read_scores(config)
    index = {r["id"]: r for r in _read_index(config)}
    selections_path = out_dir / "selections.jsonl"
    skips_path = out_dir / "select_skips.json"
    exp = _experiment_config(config)
    digest = _digest_parts(
        _digest_file(out_dir / "scores.jsonl"),
        exp.to_dict(),
    )
    if _stage_cached(config, "select", digest, [selections_path, skips_path]):
        logger.info("select: cached")
        return selections_path

    selections: list[selection.SpanSelection] = []
    skips: dict[str, list[str]] = {}
    for utt_id in sorted(scored):
        words = scored[utt_id]
        duration = index[utt_id]["duration_s"]
        for cell in evaluation.grid_cells(exp):
            kind, criterion, mode, n = cell
            if kind != exp.feature_kinds[0]:
                continue  # selections are feature-kind independent
            try:
                sel = evaluation.selection_for_cell(cell, words, duration)
            except selection.PositionUnavailableError:
                skips.setdefault(f"{criterion}/{mode}/{n}", []).append(utt_id)
                continue
            selections.append(selection.with_utterance_id(sel, utt_id))
    selection.write_selections(selections, selections_path)
    skips_path.write_text(
        json.dumps(skips, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_stamp(config, "select", digest)
    logger.info("select: %d selections, %d skip groups", len(selections), len(skips))
    return selections_path


def _extract_one(args) -> str:
    wav_path, lld_dir, acfg = args
    samples = corpus.read_wav_mono_16k(wav_path)
    series = acoustics.compute_frame_series(samples, corpus.TARGET_RATE, wav_path.stem, acfg)
    # cache layout: the 17 descriptor columns plus the voicing flag as 0/1
    matrix = np.column_stack([series.descriptors, series.voiced.astype(np.float64)])
    embeddings.write_sfv1(
        lld_dir / f"{wav_path.stem}.sfv", matrix, hop_s=acfg.hop_s, offset_s=acfg.win_s / 2
    )
    return wav_path.stem


def stage_extract(config: RunConfig) -> Path:
    """Compute the LLD cache (one SFV1 file per utterance)."""
    validate_paths(config, ("audio_dir",))
    out_dir = Path(config.out_dir)
    lld_dir = out_dir / "lld"
    lld_dir.mkdir(parents=True, exist_ok=True)
    index = _read_index(config)
    acfg = config.acoustics_config()
    digest = _digest_parts(
        _digest_tree(Path(config.audio_dir), ".wav"),
        {k: getattr(acfg, k) for k in (
            "f0_min_hz", "f0_max_hz", "voicing_threshold", "fft_size", "n_mel", "n_mfcc"
        )},
    )
    expected = [lld_dir / f"{r['id']}.sfv" for r in index]
    if _stage_cached(config, "extract", digest, expected):
        logger.info("extract: cached")
        return lld_dir

    wav_by_id = {p.stem: p for p in sorted(Path(config.audio_dir).rglob("*.wav"))}
    tasks = [(wav_by_id[r["id"]], lld_dir, acfg) for r in index]
    jobs = config.effective_jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_extract_one, tasks, chunksize=8))
    else:
        for task in tasks:
            _extract_one(task)
    _write_stamp(config, "extract", digest)
    logger.info("extract: %d utterances -> %s", len(tasks), lld_dir)
    return lld_dir


def _load_lld_series(path: Path, acfg: acoustics.AcousticsConfig) -> acoustics.FrameSeries:
    rows, hop_s, offset_s = embeddings.read_sfv1(path)
    return acoustics.FrameSeries(
        utterance_id=path.stem,
        hop_s=hop_s,
        win_s=2 * offset_s,
        descriptors=rows[:, :-1].astype(np.float64),
        voiced=rows[:, -1] > 0.5,
    )


def _cell_feature_path(out_dir: Path, cell: evaluation.CellKey) -> Path:
    kind, criterion, mode, n = cell
    stem = "baseline" if mode == "full_utterance" else f"{criterion}__{mode}__{n}"
    return out_dir / "features" / kind / f"{stem}.sfv"


def stage_pool(config: RunConfig) -> Path:
    """Pool per-cell feature matrices from the LLD cache and embedding files."""
    out_dir = Path(config.out_dir)
    exp = _experiment_config(config)
    index = _read_index(config)
    scored = _read_scores(config)
    lld_dir = out_dir / "lld"
    if "functionals" in exp.feature_kinds and not lld_dir.exists():
        raise ConfigError("LLD cache missing; run `surpsel extract` first")
    if "embeddings" in exp.feature_kinds:
        validate_paths(config, ("embeddings_dir",))

    digest = _digest_parts(
        _digest_file(out_dir / "scores.jsonl"),
        _digest_tree(lld_dir, ".sfv") if "functionals" in exp.feature_kinds else "",
        _digest_tree(Path(config.embeddings_dir), ".sfv")
        if "embeddings" in exp.feature_kinds
        else "",
        exp.to_dict(),
    )
    cells = evaluation.grid_cells(exp)
    expected = [_cell_feature_path(out_dir, cell) for cell in cells]
    expected_meta = [p.with_suffix(".json") for p in expected]
    if _stage_cached(config, "pool", digest, expected + expected_meta):
        logger.info("pool: cached")
        return out_dir / "features"

    acfg = config.acoustics_config()
    data = evaluation.ExperimentData(
        speakers=sorted({(r["speaker"], r["sex"]) for r in index}),
        utterance_ids=[r["id"] for r in index],
        labels={r["id"]: r["label_index"] for r in index},
        speaker_of={r["id"]: r["speaker"] for r in index},
        durations={r["id"]: r["duration_s"] for r in index},
        scored_words=scored,
        frame_series=lambda utt_id: _load_lld_series(lld_dir / f"{utt_id}.sfv", acfg),
        frame_embeddings=lambda utt_id: embeddings.load_frame_embeddings(
            Path(config.embeddings_dir) / f"{utt_id}.sfv"
        ),
    )
    features = evaluation.build_cell_features(data, exp)
    for cell, feats in features.items():
        path = _cell_feature_path(out_dir, cell)
        path.parent.mkdir(parents=True, exist_ok=True)
        matrix = feats.matrix if feats.matrix.size else np.empty((0, 1))
        embeddings.write_sfv1(path, matrix, hop_s=1.0)
        path.with_suffix(".json").write_text(
            json.dumps(
                {"ids": feats.ids, "skipped": sorted(feats.skipped)}, sort_keys=True
            )
            + "\n",
            encoding="utf-8",
        )
    _write_stamp(config, "pool", digest)
    logger.info("pool: %d cells -> %s", len(features), out_dir / "features")
    return out_dir / "features"


def _load_cell_features(config: RunConfig) -> dict[evaluation.CellKey, evaluation.CellFeatures]:
    out_dir = Path(config.out_dir)
    exp = _experiment_config(config)
    features = {}
    for cell in evaluation.grid_cells(exp):
        path = _cell_feature_path(out_dir, cell)
        if not path.exists():
            raise ConfigError(f"pooled features missing for {evaluation.cell_name(cell)}; "
                              "run `surpsel pool` first")
        rows, _, _ = embeddings.read_sfv1(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        features[cell] = evaluation.CellFeatures(
            ids=meta["ids"], matrix=rows.astype(np.float64), skipped=meta["skipped"]
        )
    return features


def _experiment_data_from_index(config: RunConfig) -> evaluation.ExperimentData:
    index = _read_index(config)
    return evaluation.ExperimentData(
        speakers=sorted({(r["speaker"], r["sex"]) for r in index}),
        utterance_ids=[r["id"] for r in index],
        labels={r["id"]: r["label_index"] for r in index},
        speaker_of={r["id"]: r["speaker"] for r in index},
        durations={r["id"]: r["duration_s"] for r in index},
        scored_words={},
    )


def stage_train(config: RunConfig, cell_spec: str, fold_id: int) -> Path:
    """Train one (cell, fold) pair and write its checkpoint (a dev tool)."""
    out_dir = Path(config.out_dir)
    exp = _experiment_config(config)
    parts = cell_spec.split("/")
    if len(parts) == 2 and parts[1] == "baseline":
        cell = (parts[0], "none", "full_utterance", 0)
    elif len(parts) == 4:
        cell = (parts[0], parts[1], parts[2], int(parts[3]))
    else:
        raise ConfigError(
            f"bad cell spec {cell_spec!r}; use kind/criterion/mode/n or kind/baseline"
        )
    features = _load_cell_features(config)
    if cell not in features:
        raise ConfigError(f"cell {cell_spec!r} not in the configured grid")
    feats = features[cell]
    data = _experiment_data_from_index(config)
    folds = evaluation.make_folds(data.speakers, k=exp.folds, seed=exp.seed)
    fold = next((f for f in folds if f.fold_id == fold_id), None)
    if fold is None:
        raise ConfigError(f"fold {fold_id} not in 1..{exp.folds}")

    speaker_ids = np.array([data.speaker_of[u] for u in feats.ids])
    labels = np.array([data.labels[u] for u in feats.ids])
    train_mask = np.isin(speaker_ids, fold.train_speakers)
    val_mask = np.isin(speaker_ids, fold.val_speakers)
    mean, std = standardize_fit(feats.matrix[train_mask])
    mlp_config = MLPConfig(
        input_dim=feats.matrix.shape[1],
        hidden=exp.hidden,
        output_dim=evaluation.N_CLASSES,
        dropout_p=exp.dropout_p,
        lr=exp.lr,
        batch_size=exp.batch_size,
        epochs=exp.epochs,
        seed=evaluation.cell_fold_seed(exp.seed, cell, fold.fold_id),
        loss=exp.loss,
    )
    val_set = None
    if val_mask.any():
        val_set = (standardize_apply(feats.matrix[val_mask], mean, std), labels[val_mask])
    params, record = train(
        mlp_config,
        (standardize_apply(feats.matrix[train_mask], mean, std), labels[train_mask]),
        val_set,
    )
    model_dir = out_dir / "models" / evaluation.cell_name(cell).replace("/", "__")
    model_dir.mkdir(parents=True, exist_ok=True)
    ckpt = model_dir / f"fold{fold_id}.ckpt"
    save_checkpoint(ckpt, params, mlp_config)
    curve = model_dir / f"fold{fold_id}_curve.csv"
    lines = ["epoch,train_loss,val_loss,val_accuracy"]
    for i, loss_value in enumerate(record.train_loss):
        val_loss = record.val_loss[i] if record.val_loss else ""
        val_acc = record.val_accuracy[i] if record.val_accuracy else ""
        lines.append(f"{i + 1},{loss_value},{val_loss},{val_acc}")
    curve.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("train: wrote %s", ckpt)
    return ckpt


def stage_evaluate(config: RunConfig) -> Path:
    """Cross-validate every grid cell from the pooled features."""
    out_dir = Path(config.out_dir)
    exp = _experiment_config(config)
    features = _load_cell_features(config)
    metrics_path = out_dir / "metrics.json"
    digest = _digest_parts(
        sorted(
            (evaluation.cell_name(c), _digest_file(_cell_feature_path(out_dir, c)))
            for c in features
        ),
        exp.to_dict(),
    )
    if _stage_cached(config, "evaluate", digest, [metrics_path]):
        logger.info("evaluate: cached")
        return metrics_path

    data = _experiment_data_from_index(config)
    report = evaluation.evaluate_cells(
        features, data, exp, progress=lambda msg: logger.info("evaluate: %s", msg)
    )
    metrics_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_stamp(config, "evaluate", digest)
    return metrics_path


def stage_report(config: RunConfig) -> list[Path]:
    """Emit tables, figure data, and the manifest from metrics.json."""
    out_dir = Path(config.out_dir)
    metrics_path = out_dir / "metrics.json"
    if not metrics_path.exists():
        raise ConfigError("metrics missing; run `surpsel evaluate` first")
    report = evaluation.MetricsReport.from_dict(json.loads(metrics_path.read_text()))
    written = evaluation.emit_report(report, out_dir / "report")
    for path in written:
        logger.info("report: wrote %s", path)
    return written


def stage_run(config: RunConfig) -> int:
    """The whole pipeline; returns a nonzero exit code if any cell failed."""
    stage_prepare(config)
    stage_score(config)
    stage_select(config)
    if "functionals" in config.feature_kinds:
        stage_extract(config)
    stage_pool(config)
    metrics_path = stage_evaluate(config)
    stage_report(config)
    report = evaluation.MetricsReport.from_dict(json.loads(metrics_path.read_text()))
    return 1 if report.any_failed else 0


# ---------------------------------------------------------------------------
# argument parsing

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", type=Path, default=None, help="INI config file")
    defaults = RunConfig()
    for f in fields(RunConfig):
        flags = ["--" + f.name.replace("_", "-")]
        if f.name == "modes":
            flags.append("--mode")
        if f.name == "n_values":
            flags.append("--n")
        default = getattr(defaults, f.name)
        if isinstance(default, tuple):
            shown = ",".join(str(v) for v in default)
        else:
            shown = default
        parser.add_argument(
            *flags, dest=f.name, default=None, metavar="V",
            help=f"config key {f.name} (default: {shown})",
        )


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(RunConfig)
        if getattr(args, f.name, None) is not None
    }
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surpsel",
        description=(
            "Segment-selective speech emotion recognition: score word "
            "informativeness, select spans, pool features, train and "
            "cross-validate. SURPSEL_JOBS mirrors --jobs."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "prepare": "load and validate the corpus, write the utterance index",
        "score": "compute per-word informativeness scores",
        "select": "materialize span selections for the whole grid",
        "extract": "compute the acoustic LLD cache",
        "pool": "pool per-cell feature matrices",
        "train": "train a single (cell, fold) model",
        "evaluate": "cross-validate every grid cell",
        "run": "run the whole pipeline end to end",
        "report": "emit tables, figure data, and the manifest",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        if name == "train":
            p.add_argument("--cell", required=True,
                           help="kind/criterion/mode/n or kind/baseline")
            p.add_argument("--fold", type=int, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "prepare":
            stage_prepare(config)
        elif args.command == "score":
            stage_score(config)
        elif args.command == "select":
            stage_select(config)
        elif args.command == "extract":
            stage_extract(config)
        elif args.command == "pool":
            stage_pool(config)
        elif args.command == "train":
            stage_train(config, args.cell, args.fold)
        elif args.command == "evaluate":
            stage_evaluate(config)
        elif args.command == "report":
            stage_report(config)
        elif args.command == "run":
            return stage_run(config)
        return 0
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        logger.error("error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
