"""Frame-level acoustic descriptors and span-pooled functionals.

Low-level descriptors (F0, energy, spectral tilt, centroid, MFCC 1-13) are
computed once per utterance on 25 ms Hann frames with a 10 ms hop.  A
selection then pools functionals (mean / population std) over the frames
whose centers fall inside the selected spans.  Masking frames instead of
concatenating waveforms avoids artificial junction frames and makes the
full-span selection bit-identical to the no-selection baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .selection import SpanSelection


class AcousticsError(ValueError):
    pass


class EmptySegmentError(AcousticsError):
    """A selection whose spans contain no frame centers."""

    def __init__(self, spans):
        super().__init__(f"no frames fall inside the selected spans: {list(spans)}")
        self.spans = tuple(spans)


@dataclass(frozen=True)
class AcousticsConfig:
    win_s: float = 0.025
    hop_s: float = 0.010
    f0_min_hz: float = 60.0
    f0_max_hz: float = 500.0
    voicing_threshold: float = 0.45
    fft_size: int = 512
    n_mel: int = 26
    n_mfcc: int = 13
    mel_low_hz: float = 0.0
    mel_high_hz: float = 8000.0
    tilt_low_hz: float = 60.0
    tilt_high_hz: float = 5000.0
    f0_ref_hz: float = 27.5
    silence_rms: float = 1e-4


DEFAULT_CONFIG = AcousticsConfig()

# Descriptor column layout of FrameSeries.descriptors.
LLD_NAMES = ["f0_log", "energy_db", "tilt", "centroid"] + [
    f"mfcc{i}" for i in range(1, 14)
]
D_LLD = len(LLD_NAMES)

FUNCTIONAL_NAMES = (
    ["f0_log_mean", "f0_log_std", "voiced_fraction"]
    + ["energy_db_mean", "energy_db_std"]
    + ["tilt_mean", "tilt_std"]
    + ["centroid_mean", "centroid_std"]
    + [f"mfcc{i}_mean" for i in range(1, 14)]
    + [f"mfcc{i}_std" for i in range(1, 14)]
)
N_FUNCTIONALS = len(FUNCTIONAL_NAMES)


@dataclass(frozen=True)
class FrameSeries:
    """Per-frame descriptors for one utterance; immutable after construction."""

    utterance_id: str
    hop_s: float
    win_s: float
    descriptors: np.ndarray  # (n_frames, D_LLD)
    voiced: np.ndarray  # (n_frames,) bool

    def __post_init__(self):
        if self.descriptors.ndim != 2 or self.descriptors.shape[1] != D_LLD:
            raise AcousticsError(
                f"descriptor matrix must be (n, {D_LLD}), got {self.descriptors.shape}"
            )
        if len(self.voiced) != len(self.descriptors):
            raise AcousticsError("voiced mask length mismatch")
        if not np.all(np.isfinite(self.descriptors)):
            raise AcousticsError("non-finite descriptor values")
        self.descriptors.flags.writeable = False

    @property
    def n_frames(self) -> int:
        return len(self.descriptors)

    def frame_centers(self) -> np.ndarray:
        return self.win_s / 2 + self.hop_s * np.arange(self.n_frames)


@dataclass(frozen=True)
class FunctionalVector:
    """The 35 pooled functionals, in FUNCTIONAL_NAMES order."""

    values: np.ndarray
    no_voiced_frames: bool = False

    def __post_init__(self):
        if self.values.shape != (N_FUNCTIONALS,):
            raise AcousticsError(f"expected {N_FUNCTIONALS} values, got {self.values.shape}")
        self.values.flags.writeable = False


def _raw_frames(samples: np.ndarray, sample_rate: int, config: AcousticsConfig) -> np.ndarray:
    win = int(round(config.win_s * sample_rate))
    hop = int(round(config.hop_s * sample_rate))
    if len(samples) < win:
        return np.empty((0, win))
    n_frames = (len(samples) - win) // hop + 1
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    return np.asarray(samples, dtype=np.float64)[idx]


def frame_signal(
    samples: np.ndarray, sample_rate: int, config: AcousticsConfig = DEFAULT_CONFIG
) -> np.ndarray:
    """Slice a signal into Hann-windowed frames (25 ms window, 10 ms hop).

    The final partial frame is dropped, never padded; a signal shorter than
    one window yields zero frames.
    """
    raw = _raw_frames(samples, sample_rate, config)
    window = np.hanning(raw.shape[1]) if raw.shape[1] else np.empty(0)
    return raw * window


def _autocorr_f0_batch(
    frames: np.ndarray, sample_rate: int, config: AcousticsConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized-autocorrelation F0 for a batch of frames.

    Returns (f0_hz, strength); f0_hz is 0 where no peak exists.  Peak lag is
    refined by parabolic interpolation.
    """
    n_frames, win = frames.shape
    lag_min = int(np.floor(sample_rate / config.f0_max_hz))
    lag_max = int(np.ceil(sample_rate / config.f0_min_hz))
    lag_max = min(lag_max, win - 2)
    if lag_min < 1 or lag_min >= lag_max or n_frames == 0:
        return np.zeros(n_frames), np.zeros(n_frames)

    nfft = 1
    while nfft < 2 * win:
        nfft *= 2
    spectrum = np.fft.rfft(frames, n=nfft, axis=1)
    ac = np.fft.irfft(np.abs(spectrum) ** 2, n=nfft, axis=1)[:, :win]

    # Per-lag energy terms of the two overlapping segments.
    csum = np.cumsum(frames**2, axis=1)
    total = csum[:, -1:]
    lags = np.arange(win)
    head = csum[:, win - 1 - lags]  # sum_{t=0}^{win-1-lag} x_t^2
    tail = total - np.concatenate([np.zeros((n_frames, 1)), csum[:, :-1]], axis=1)
    norm = np.sqrt(np.maximum(head * tail, 1e-30))
    r = ac / norm

    # A periodic frame correlates near 1.0 at every period multiple, so the
    # global argmax can land on 2T, 3T, ...  Take the first local maximum
    # whose value stays within 90% of the global peak.
    rows = np.arange(n_frames)
    seg = r[:, lag_min : lag_max + 1]
    peak = seg.max(axis=1)
    prev = r[:, lag_min - 1 : lag_max]
    nxt = r[:, lag_min + 1 : lag_max + 2]
    qualify = (seg >= prev) & (seg >= nxt) & (seg >= 0.9 * peak[:, None])
    first = np.argmax(qualify, axis=1)
    best = np.where(qualify.any(axis=1), first, np.argmax(seg, axis=1)) + lag_min
    strength = r[rows, best]

    # Parabolic refinement around the integer peak.
    inner = (best > lag_min) & (best < lag_max)
    left = r[np.arange(n_frames), np.maximum(best - 1, 0)]
    right = r[np.arange(n_frames), np.minimum(best + 1, win - 1)]
    denom = left - 2 * strength + right
    delta = np.where(
        inner & (np.abs(denom) > 1e-12), 0.5 * (left - right) / np.where(denom == 0, 1, denom), 0.0
    )
    delta = np.clip(delta, -0.5, 0.5)
    refined = best + delta
    f0 = sample_rate / refined
    return f0, strength


def estimate_f0(
    frame: np.ndarray, sample_rate: int = 16000, config: AcousticsConfig = DEFAULT_CONFIG
) -> tuple[float | None, float]:
    """F0 of one frame slice (pre-window samples), or None when unvoiced.

    Voiced requires both a normalized-autocorrelation peak at or above the
    voicing threshold and frame RMS above the silence floor.  The Hann taper
    is deliberately not applied before autocorrelation: it biases the
    normalized correlation toward period multiples.
    """
    frames = np.asarray(frame, dtype=np.float64)[None, :]
    f0, strength = _autocorr_f0_batch(frames, sample_rate, config)
    rms = float(np.sqrt(np.mean(frames[0] ** 2)))
    voiced = strength[0] >= config.voicing_threshold and rms > config.silence_rms
    return (float(f0[0]) if voiced else None), float(strength[0])


def compute_energy(frame: np.ndarray) -> float:
    """RMS energy in dB of a frame (pre-window samples)."""
    rms = np.sqrt(np.mean(np.asarray(frame, dtype=np.float64) ** 2))
    return float(20.0 * np.log10(rms + 1e-10))


def mel_filterbank(config: AcousticsConfig, sample_rate: int) -> np.ndarray:
    """Triangular mel filters as a (n_mel, n_bins) weight matrix."""

    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    n_bins = config.fft_size // 2 + 1
    freqs = np.arange(n_bins) * sample_rate / config.fft_size
    mel_points = np.linspace(
        hz_to_mel(config.mel_low_hz), hz_to_mel(config.mel_high_hz), config.n_mel + 2
    )
    hz_points = mel_to_hz(mel_points)
    bank = np.zeros((config.n_mel, n_bins))
    for j in range(config.n_mel):
        left, center, right = hz_points[j], hz_points[j + 1], hz_points[j + 2]
        up = (freqs - left) / (center - left)
        down = (right - freqs) / (right - center)
        bank[j] = np.maximum(0.0, np.minimum(up, down))
    return bank


def mfcc_from_log_mel(log_mel: np.ndarray, n_mfcc: int = 13) -> np.ndarray:
    """DCT-II of log mel energies, coefficients 1..n_mfcc (c0 excluded)."""
    coeffs = scipy.fft.dct(log_mel, type=2, norm="ortho", axis=-1)
    return coeffs[..., 1 : n_mfcc + 1]


def _spectral_batch(
    frames: np.ndarray, sample_rate: int, config: AcousticsConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_frames = len(frames)
    spectrum = np.fft.rfft(frames, n=config.fft_size, axis=1)
    mag = np.abs(spectrum)
    power = mag**2
    freqs = np.arange(config.fft_size // 2 + 1) * sample_rate / config.fft_size

    # Spectral tilt: least-squares slope of dB magnitude vs log10 frequency.
    band = (freqs >= config.tilt_low_hz) & (freqs <= config.tilt_high_hz)
    x = np.log10(freqs[band])
    x_centered = x - x.mean()
    denom = np.sum(x_centered**2)
    y = 20.0 * np.log10(mag[:, band] + 1e-10)
    tilt = (y - y.mean(axis=1, keepdims=True)) @ x_centered / denom

    mag_sum = mag.sum(axis=1)
    centroid = (mag @ freqs) / np.where(mag_sum > 0, mag_sum, 1.0)

    bank = mel_filterbank(config, sample_rate)
    mel_energy = power @ bank.T
    log_mel = np.log(np.maximum(mel_energy, 1e-30))
    mfcc = mfcc_from_log_mel(log_mel, config.n_mfcc)
    return tilt.reshape(n_frames), centroid.reshape(n_frames), mfcc


def compute_spectral_descriptors(
    frame: np.ndarray, sample_rate: int = 16000, config: AcousticsConfig = DEFAULT_CONFIG
) -> tuple[float, float, np.ndarray]:
    """(tilt, centroid_hz, mfcc[1..13]) for one windowed frame."""
    tilt, centroid, mfcc = _spectral_batch(
        np.asarray(frame, dtype=np.float64)[None, :], sample_rate, config
    )
    return float(tilt[0]), float(centroid[0]), mfcc[0]


def compute_frame_series(
    samples: np.ndarray,
    sample_rate: int,
    utterance_id: str = "",
    config: AcousticsConfig = DEFAULT_CONFIG,
) -> FrameSeries:
    """All low-level descriptors for one utterance in a single pass."""
    raw = _raw_frames(samples, sample_rate, config)
    n_frames = len(raw)
    if n_frames == 0:
        return FrameSeries(
            utterance_id=utterance_id,
            hop_s=config.hop_s,
            win_s=config.win_s,
            descriptors=np.empty((0, D_LLD)),
            voiced=np.empty(0, dtype=bool),
        )
    window = np.hanning(raw.shape[1])
    windowed = raw * window

    f0, strength = _autocorr_f0_batch(raw, sample_rate, config)
    rms_raw = np.sqrt(np.mean(raw**2, axis=1))
    voiced = (strength >= config.voicing_threshold) & (rms_raw > config.silence_rms)
    f0_log = np.where(voiced & (f0 > 0), np.log2(np.maximum(f0, 1e-6) / config.f0_ref_hz), 0.0)

    energy_db = 20.0 * np.log10(rms_raw + 1e-10)

    tilt, centroid, mfcc = _spectral_batch(windowed, sample_rate, config)

    descriptors = np.column_stack([f0_log, energy_db, tilt, centroid, mfcc])
    return FrameSeries(
        utterance_id=utterance_id,
        hop_s=config.hop_s,
        win_s=config.win_s,
        descriptors=descriptors,
        voiced=voiced,
    )


def frames_in_spans(centers: np.ndarray, spans) -> np.ndarray:
    """Boolean mask of frames whose centers fall inside any span (inclusive)."""
    mask = np.zeros(len(centers), dtype=bool)
    for start, end in spans:
        mask |= (centers >= start) & (centers <= end)
    return mask


def pool_functionals(
    frames: FrameSeries, selection: SpanSelection | None = None
) -> FunctionalVector:
    """Pool the 35 functionals over the frames selected by ``selection``.

    With no selection every frame is pooled (the utterance-level baseline).
    F0 statistics are computed over the voiced subset of the selected frames;
    if that subset is empty the two F0 entries are zero and flagged.  Stds
    are population stds, so a single-frame segment pools to std 0.
    """
    if selection is None:
        mask = np.ones(frames.n_frames, dtype=bool)
    else:
        mask = frames_in_spans(frames.frame_centers(), selection.spans)
    if not mask.any():
        raise EmptySegmentError(selection.spans if selection else ())

    selected = frames.descriptors[mask]
    voiced_sel = frames.voiced & mask
    f0_vals = frames.descriptors[voiced_sel, 0]
    no_voiced = f0_vals.size == 0
    f0_mean = 0.0 if no_voiced else float(np.mean(f0_vals))
    f0_std = 0.0 if no_voiced else float(np.std(f0_vals))
    voiced_fraction = float(voiced_sel.sum() / mask.sum())

    rest = selected[:, 1:]  # energy, tilt, centroid, mfcc1..13
    means = rest.mean(axis=0)
    stds = rest.std(axis=0)
    values = np.concatenate(
        [
            [f0_mean, f0_std, voiced_fraction],
            [means[0], stds[0]],
            [means[1], stds[1]],
            [means[2], stds[2]],
            means[3:],
            stds[3:],
        ]
    )
    return FunctionalVector(values=values, no_voiced_frames=no_voiced)
