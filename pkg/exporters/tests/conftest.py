import hashlib
import wave
from pathlib import Path

import numpy as np
import pytest


class FakeCausalScorer:
    """Deterministic stand-in causal LM: logits depend only on the left
    context (seeded by the id prefix), which makes the causality of the
    exporter observable in tests."""

    model_id = "fake-causal-lm"
    tokenizer_id = "fake-ws-tokenizer"
    checkpoint_hash = "deadbeefdeadbeef"
    vocab_size = 101
    bos_token_id = 0

    def tokenize_with_offsets(self, text):
        ids, offsets = [], []
        cursor = 0
        for word in text.split():
            start = text.index(word, cursor)
            cursor = start + len(word)
            pieces = [word] if len(word) <= 5 else [word[: len(word) // 2], word[len(word) // 2 :]]
            offset = start
            for piece in pieces:
                ids.append(1 + sum(piece.encode()) % (self.vocab_size - 1))
                offsets.append((offset, offset + len(piece)))
                offset += len(piece)
        return ids, offsets

    def logits(self, input_ids):
        rows = []
        for i in range(len(input_ids)):
            prefix = tuple(input_ids[: i + 1])
            digest = hashlib.sha256(repr(prefix).encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            rows.append(rng.normal(0.0, 3.0, size=self.vocab_size))
        return np.stack(rows)


class FakeFrameEncoder:
    """Conv-stack arithmetic of the reference encoder (25 ms field, 20 ms
    stride) with rows derived deterministically from the samples."""

    model_id = "fake-ssl-encoder"
    checkpoint_hash = "0123456789abcdef"
    dim = 32
    hop_s = 0.020
    offset_s = 0.0125

    def encode(self, samples, sample_rate):
        window, stride = 400, 320
        if len(samples) < window:
            return np.zeros((0, self.dim), dtype=np.float32)
        n_frames = (len(samples) - window) // stride + 1
        digest = hashlib.sha256(np.asarray(samples).tobytes()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        base = rng.normal(0.0, 1.0, size=(n_frames, self.dim))
        energy = np.array(
            [np.sqrt(np.mean(samples[i * stride : i * stride + window] ** 2))
             for i in range(n_frames)]
        )
        return (base + energy[:, None]).astype(np.float32)


def write_pcm16_wav(path: Path, samples: np.ndarray, rate: int = 16000):
    data = (np.clip(samples, -1, 1) * 32767).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(rate)
        handle.writeframes(data.tobytes())


@pytest.fixture
def scorer():
    return FakeCausalScorer()


@pytest.fixture
def encoder():
    return FakeFrameEncoder()
