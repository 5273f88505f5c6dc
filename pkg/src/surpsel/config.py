"""Run configuration: flat INI file with sections, overridable by CLI flags."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .acoustics import AcousticsConfig


class ConfigError(ValueError):
    pass


def _parse_tuple(text: str, cast=str) -> tuple:
    return tuple(cast(part.strip()) for part in text.split(",") if part.strip())


@dataclass
class RunConfig:
    # [paths]
    audio_dir: Path | None = None
    alignments: Path | None = None
    token_scores: Path | None = None
    counts_file: Path | None = None
    embeddings_dir: Path | None = None
    out_dir: Path = Path("surpsel_out")
    # [grid]
    criteria: tuple[str, ...] = ("unigram_sr", "llm_sr", "rank")
    modes: tuple[str, ...] = ("top_n", "independent_n", "baseline")
    n_values: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    feature_kinds: tuple[str, ...] = ("functionals", "embeddings")
    # [acoustics]
    f0_min_hz: float = 60.0
    f0_max_hz: float = 500.0
    voicing_threshold: float = 0.45
    fft_size: int = 512
    n_mel: int = 26
    n_mfcc: int = 13
    # [model]
    hidden: tuple[int, ...] = (256, 128, 64, 32)
    dropout_p: float = 0.1
    lr: float = 1e-4
    batch_size: int = 200
    epochs: int = 100
    loss: str = "bce"
    # [run]
    seed: int = 7
    folds: int = 10
    jobs: int = 0  # 0 = logical cores

    def acoustics_config(self) -> AcousticsConfig:
        return AcousticsConfig(
            f0_min_hz=self.f0_min_hz,
            f0_max_hz=self.f0_max_hz,
            voicing_threshold=self.voicing_threshold,
            fft_size=self.fft_size,
            n_mel=self.n_mel,
            n_mfcc=self.n_mfcc,
        )

    @property
    def effective_jobs(self) -> int:
        if self.jobs > 0:
            return self.jobs
        return os.cpu_count() or 1

    @property
    def include_baseline(self) -> bool:
        return "baseline" in self.modes

    @property
    def selection_modes(self) -> tuple[str, ...]:
        return tuple(m for m in self.modes if m != "baseline")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


_SECTION_KEYS = {
    "paths": ("audio_dir", "alignments", "token_scores", "counts_file",
              "embeddings_dir", "out_dir"),
    "grid": ("criteria", "modes", "n_values", "feature_kinds"),
    "acoustics": ("f0_min_hz", "f0_max_hz", "voicing_threshold", "fft_size",
                  "n_mel", "n_mfcc"),
    "model": ("hidden", "dropout_p", "lr", "batch_size", "epochs", "loss"),
    "run": ("seed", "folds", "jobs"),
}

_PATH_KEYS = {"audio_dir", "alignments", "token_scores", "counts_file",
              "embeddings_dir", "out_dir"}
_INT_KEYS = {"fft_size", "n_mel", "n_mfcc", "batch_size", "epochs", "seed",
             "folds", "jobs"}
_FLOAT_KEYS = {"f0_min_hz", "f0_max_hz", "voicing_threshold", "dropout_p", "lr"}
_INT_TUPLE_KEYS = {"n_values", "hidden"}
_STR_TUPLE_KEYS = {"criteria", "modes", "feature_kinds"}


def _coerce(key: str, raw: str):
    if key in _PATH_KEYS:
        return Path(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_TUPLE_KEYS:
        return _parse_tuple(raw, int)
    if key in _STR_TUPLE_KEYS:
        return _parse_tuple(raw)
    return raw


def load_config(path: Path | str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an INI file plus flag overrides (flags win).

    The SURPSEL_JOBS environment variable sits between the file and the
    flags in precedence.
    """
    config = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section, keys in _SECTION_KEYS.items():
            if not parser.has_section(section):
                continue
            for key in parser.options(section):
                if key not in keys:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                setattr(config, key, _coerce(key, parser.get(section, key)))
    env_jobs = os.environ.get("SURPSEL_JOBS")
    if env_jobs:
        config.jobs = int(env_jobs)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if not hasattr(config, key):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(config, key, _coerce(key, value) if isinstance(value, str) else value)
    return config


def validate_paths(config: RunConfig, required: tuple[str, ...]) -> None:
    for key in required:
        value = getattr(config, key)
        if value is None:
            raise ConfigError(f"config key {key!r} is required for this command")
        if not Path(value).exists():
            raise ConfigError(f"{key} does not exist: {value}")
