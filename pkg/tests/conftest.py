import json
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

from surpsel.corpus import STATEMENTS

FIXTURES = Path(__file__).parent / "fixtures"


def write_wav(path, samples, rate=16000, dtype=np.int16):
    if dtype == np.int16:
        data = (np.asarray(samples) * 32767).astype(np.int16)
    else:
        data = np.asarray(samples, dtype=dtype)
    wavfile.write(path, rate, data)


def even_alignment(statement_code, duration, lead=0.1):
    """Evenly spaced word spans for one of the two fixed statements."""
    words = STATEMENTS[statement_code].split()
    usable = duration - 2 * lead
    step = usable / len(words)
    return [
        {"w": w.lower(), "s": round(lead + i * step, 4), "e": round(lead + (i + 0.8) * step, 4)}
        for i, w in enumerate(words)
    ]


@pytest.fixture
def tiny_corpus(tmp_path):
    """Three valid speech files, only two of them aligned."""
    audio_dir = tmp_path / "audio"
    audio_dir.mkdir()
    rng = np.random.default_rng(0)
    names = [
        "03-01-06-01-02-01-12.wav",
        "03-01-01-01-01-01-01.wav",
        "03-01-03-02-02-02-04.wav",
    ]
    duration = 1.2
    for name in names:
        t = np.arange(int(16000 * duration)) / 16000
        write_wav(audio_dir / name, 0.3 * np.sin(2 * np.pi * 150 * t) + 0.01 * rng.standard_normal(len(t)))
    lines = []
    for name in names[:2]:
        statement = int(name.split("-")[4])
        lines.append(
            json.dumps({"id": name[:-4], "words": even_alignment(statement, duration)})
        )
    alignments = tmp_path / "alignments.jsonl"
    alignments.write_text("\n".join(lines) + "\n")
    return audio_dir, alignments
