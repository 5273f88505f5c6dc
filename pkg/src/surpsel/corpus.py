"""RAVDESS-style corpus loading: audio, filename metadata, word alignments.

Filename convention (7 two-digit fields, hyphen separated):

    modality-vocal_channel-emotion-intensity-statement-repetition-actor.wav

    modality:      01=full-AV, 02=video-only, 03=audio-only
    vocal_channel: 01=speech, 02=song
    emotion:       01=neutral 02=calm 03=happy 04=sad 05=angry
                   06=fearful 07=disgust 08=surprised
    intensity:     01=normal, 02=strong
    statement:     01="Kids are talking by the door"
                   02="Dogs are sitting by the door"
    repetition:    01 or 02
    actor:         01-24, odd=male, even=female

Word boundaries are ingested from an alignment file (JSON lines, one record
per utterance), never computed here.  Audio is normalized to mono 16 kHz on
load so that all downstream frame timing shares one rate.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.io import wavfile

logger = logging.getLogger(__name__)

TARGET_RATE = 16000

STATEMENTS = {
    1: "Kids are talking by the door",
    2: "Dogs are sitting by the door",
}

EMOTION_CODE_NAMES = {
    1: "neutral",
    2: "calm",
    3: "happy",
    4: "sad",
    5: "angry",
    6: "fearful",
    7: "disgust",
    8: "surprised",
}

FIELD_NAMES = (
    "modality",
    "vocal_channel",
    "emotion",
    "intensity",
    "statement",
    "repetition",
    "actor",
)

_FIELD_RANGES = {
    "modality": (1, 3),
    "vocal_channel": (1, 2),
    "emotion": (1, 8),
    "intensity": (1, 2),
    "statement": (1, 2),
    "repetition": (1, 2),
    "actor": (1, 24),
}


class EmotionLabel(Enum):
    """Target classes. Neutral and calm recordings share one merged label."""

    NEUTRAL_CALM = "neutral_calm"
    HAPPY = "happy"
    SAD = "sad"
    ANGRY = "angry"
    FEARFUL = "fearful"
    SURPRISE = "surprise"
    DISGUST = "disgust"


# Fixed class indexing used by the classifier and metrics.
LABEL_ORDER = [
    EmotionLabel.NEUTRAL_CALM,
    EmotionLabel.HAPPY,
    EmotionLabel.SAD,
    EmotionLabel.ANGRY,
    EmotionLabel.FEARFUL,
    EmotionLabel.SURPRISE,
    EmotionLabel.DISGUST,
]
LABEL_INDEX = {label: i for i, label in enumerate(LABEL_ORDER)}

_EMOTION_CODE_TO_LABEL = {
    1: EmotionLabel.NEUTRAL_CALM,
    2: EmotionLabel.NEUTRAL_CALM,
    3: EmotionLabel.HAPPY,
    4: EmotionLabel.SAD,
    5: EmotionLabel.ANGRY,
    6: EmotionLabel.FEARFUL,
    7: EmotionLabel.DISGUST,
    8: EmotionLabel.SURPRISE,
}


class FilenameError(ValueError):
    """Raised for malformed corpus filenames; carries the offending field index."""

    def __init__(self, message: str, field_index: int):
        super().__init__(message)
        self.field_index = field_index


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class RavdessFields:
    """Decoded filename fields, all as plain integers."""

    modality: int
    vocal_channel: int
    emotion: int
    intensity: int
    statement: int
    repetition: int
    actor: int

    @property
    def emotion_name(self) -> str:
        return EMOTION_CODE_NAMES[self.emotion]

    @property
    def emotion_label(self) -> EmotionLabel:
        return _EMOTION_CODE_TO_LABEL[self.emotion]

    @property
    def speaker_sex(self) -> str:
        return "male" if self.actor % 2 == 1 else "female"

    @property
    def intensity_name(self) -> str:
        return "normal" if self.intensity == 1 else "strong"

    @property
    def transcript(self) -> str:
        return STATEMENTS[self.statement]


def parse_ravdess_filename(name: str) -> RavdessFields:
    """Decode a 7-field corpus filename.

    Raises FilenameError (with ``field_index``, 0-based) when a field is
    missing, not two digits, or out of range.
    """
    stem = name[:-4] if name.endswith(".wav") else name
    if name != stem + ".wav":
        raise FilenameError(f"{name!r}: missing .wav extension", field_index=-1)
    parts = stem.split("-")
    if len(parts) != 7:
        raise FilenameError(
            f"{name!r}: expected 7 hyphen-separated fields, got {len(parts)}",
            field_index=min(len(parts), 7) - 1,
        )
    values = []
    for i, part in enumerate(parts):
        if len(part) != 2 or not part.isdigit():
            raise FilenameError(
                f"{name!r}: field {i} ({FIELD_NAMES[i]}) is not two digits: {part!r}",
                field_index=i,
            )
        values.append(int(part))
    for i, (field_name, value) in enumerate(zip(FIELD_NAMES, values)):
        lo, hi = _FIELD_RANGES[field_name]
        if not lo <= value <= hi:
            raise FilenameError(
                f"{name!r}: field {i} ({field_name}) out of range [{lo}, {hi}]: {value}",
                field_index=i,
            )
    return RavdessFields(*values)


def render_ravdess_filename(fields: RavdessFields) -> str:
    """Inverse of parse_ravdess_filename for well-formed field sets."""
    return (
        f"{fields.modality:02d}-{fields.vocal_channel:02d}-{fields.emotion:02d}-"
        f"{fields.intensity:02d}-{fields.statement:02d}-{fields.repetition:02d}-"
        f"{fields.actor:02d}.wav"
    )


@dataclass(frozen=True)
class WordAlignment:
    """One word's time span within its utterance, in seconds."""

    text: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s < 0:
            raise CorpusError(f"word {self.text!r}: negative start {self.start_s}")
        if self.end_s <= self.start_s:
            raise CorpusError(
                f"word {self.text!r}: non-positive duration "
                f"[{self.start_s}, {self.end_s}]"
            )


@dataclass(frozen=True)
class Utterance:
    """One corpus recording with metadata, normalized audio, and alignments."""

    id: str
    speaker_id: int
    speaker_sex: str
    emotion: EmotionLabel
    intensity: str
    transcript: str
    samples: np.ndarray
    sample_rate_hz: int
    words: tuple[WordAlignment, ...] = field(default=())

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def __post_init__(self):
        self.samples.flags.writeable = False
        validate_alignment(self.transcript, self.words, self.duration_s, self.id)


def _normalize_word(text: str) -> str:
    return text.strip("""'".,!?;:-()[]""").lower()


def validate_alignment(
    transcript: str,
    words: tuple[WordAlignment, ...],
    duration_s: float,
    utterance_id: str = "?",
) -> None:
    """Check the utterance invariants: monotone non-overlapping spans inside
    [0, duration] and a one-to-one, case-insensitive match with the transcript.
    """
    transcript_words = transcript.split()
    if len(transcript_words) != len(words):
        raise CorpusError(
            f"{utterance_id}: transcript has {len(transcript_words)} words, "
            f"alignment has {len(words)}"
        )
    prev_end = 0.0
    for i, word in enumerate(words):
        if word.start_s < prev_end:
            raise CorpusError(
                f"{utterance_id}: word {i} ({word.text!r}) starts at {word.start_s} "
                f"before previous end {prev_end}"
            )
        if word.end_s > duration_s + 1e-9:
            raise CorpusError(
                f"{utterance_id}: word {i} ({word.text!r}) ends at {word.end_s} "
                f"past duration {duration_s:.3f}"
            )
        if _normalize_word(word.text) != _normalize_word(transcript_words[i]):
            raise CorpusError(
                f"{utterance_id}: alignment word {i} {word.text!r} does not match "
                f"transcript word {transcript_words[i]!r}"
            )
        prev_end = word.end_s


def load_alignments(path: Path | str) -> dict[str, tuple[WordAlignment, ...]]:
    """Read the alignment file: one JSON record per line.

    Record shape: {"id": "<utterance_id>",
                   "words": [{"w": "<text>", "s": <start_s>, "e": <end_s>}, ...]}
    """
    path = Path(path)
    alignments: dict[str, tuple[WordAlignment, ...]] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{line_no}: bad JSON: {exc}") from exc
            try:
                utt_id = record["id"]
                words = tuple(
                    WordAlignment(text=w["w"], start_s=float(w["s"]), end_s=float(w["e"]))
                    for w in record["words"]
                )
            except (KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{line_no}: missing field {exc}") from exc
            if utt_id in alignments:
                raise CorpusError(f"{path}:{line_no}: duplicate id {utt_id!r}")
            alignments[utt_id] = words
    return alignments


def read_wav_mono_16k(path: Path | str, target_rate: int = TARGET_RATE) -> np.ndarray:
    """Load a RIFF WAVE file as mono float64 in [-1, 1] at ``target_rate``.

    Accepts PCM 16-bit and IEEE-float encodings; stereo is averaged to mono;
    other rates are resampled by linear interpolation.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise CorpusError(f"unreadable WAV {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise CorpusError(
            f"unreadable WAV {path}: unsupported sample format {data.dtype}"
        )
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if rate != target_rate:
        n_out = int(round(len(samples) * target_rate / rate))
        t_in = np.arange(len(samples)) / rate
        t_out = np.arange(n_out) / target_rate
        samples = np.interp(t_out, t_in, samples)
    return np.clip(samples, -1.0, 1.0)


@dataclass
class CorpusLoadResult:
    utterances: list[Utterance]
    missing_alignment: list[str]
    invalid_names: list[str]

    @property
    def n_loaded(self) -> int:
        return len(self.utterances)


def load_corpus(
    audio_dir: Path | str,
    alignments_path: Path | str,
    target_rate: int = TARGET_RATE,
) -> CorpusLoadResult:
    """Load every speech WAV under ``audio_dir`` (recursively) with alignments.

    Only the speech channel (vocal_channel 01) is kept.  Files whose id has no
    alignment record are excluded and reported; unreadable audio is an error.
    """
    audio_dir = Path(audio_dir)
    alignments = load_alignments(alignments_path)
    utterances: list[Utterance] = []
    missing: list[str] = []
    invalid: list[str] = []

    wav_paths = sorted(audio_dir.rglob("*.wav"))
    for path in wav_paths:
        try:
            fields = parse_ravdess_filename(path.name)
        except FilenameError as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            invalid.append(path.name)
            continue
        if fields.vocal_channel != 1:
            continue
        utt_id = path.stem
        if utt_id not in alignments:
            missing.append(utt_id)
            continue
        samples = read_wav_mono_16k(path, target_rate)
        utterances.append(
            Utterance(
                id=utt_id,
                speaker_id=fields.actor,
                speaker_sex=fields.speaker_sex,
                emotion=fields.emotion_label,
                intensity=fields.intensity_name,
                transcript=fields.transcript,
                samples=samples,
                sample_rate_hz=target_rate,
                words=alignments[utt_id],
            )
        )

    if missing:
        logger.warning(
            "%d utterance(s) excluded for missing alignments: %s",
            len(missing),
            ", ".join(missing[:10]) + ("..." if len(missing) > 10 else ""),
        )
    if not wav_paths:
        logger.warning("no .wav files found under %s", audio_dir)
    logger.info("loaded %d utterances from %s", len(utterances), audio_dir)
    return CorpusLoadResult(
        utterances=utterances, missing_alignment=missing, invalid_names=invalid
    )
