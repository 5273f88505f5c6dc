import json
import struct

import numpy as np
import pytest

from surpsel_exporters.frame_embeddings import (
    export_frame_embeddings,
    read_wav_mono,
    write_sfv1_file,
)

from conftest import write_pcm16_wav


class TestWavReading:
    def test_mono_pcm16(self, tmp_path):
        t = np.arange(8000) / 16000
        write_pcm16_wav(tmp_path / "a.wav", 0.5 * np.sin(2 * np.pi * 200 * t))
        samples, rate = read_wav_mono(tmp_path / "a.wav")
        assert rate == 16000
        assert len(samples) == 8000
        assert abs(samples.max() - 0.5) < 0.01


class TestExport:
    def test_one_second_audio_gives_49_frames(self, encoder, tmp_path):
        write_pcm16_wav(tmp_path / "u1.wav", np.zeros(16000))
        (path,) = export_frame_embeddings(encoder, [tmp_path / "u1.wav"], tmp_path / "out")
        blob = path.read_bytes()
        n_frames, dim, hop_s, offset_s = struct.unpack_from("<IIdd", blob, 4)
        assert n_frames == 49  # (16000 - 400) // 320 + 1
        assert dim == encoder.dim
        assert hop_s == 0.020
        assert offset_s == 0.0125

    def test_short_audio_writes_empty_file_with_warning(self, encoder, tmp_path, caplog):
        write_pcm16_wav(tmp_path / "tiny.wav", np.zeros(300))
        with caplog.at_level("WARNING"):
            (path,) = export_frame_embeddings(encoder, [tmp_path / "tiny.wav"], tmp_path / "out")
        assert any("too short" in r.message for r in caplog.records)
        n_frames, dim, _, _ = struct.unpack_from("<IIdd", path.read_bytes(), 4)
        assert n_frames == 0 and dim == encoder.dim

    def test_payload_is_float32_little_endian_row_major(self, tmp_path):
        rows = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        path = tmp_path / "x.sfv"
        write_sfv1_file(path, rows, hop_s=0.02, offset_s=0.0)
        blob = path.read_bytes()
        assert blob[:4] == b"SFV1"
        values = np.frombuffer(blob, dtype="<f4", offset=28)
        np.testing.assert_array_equal(values, [1.0, 2.0, 3.0, 4.0])

    def test_reexport_bit_identical(self, encoder, tmp_path):
        rng = np.random.default_rng(5)
        for i in range(3):
            write_pcm16_wav(tmp_path / f"u{i}.wav", 0.2 * rng.standard_normal(12000))
        wavs = sorted(tmp_path.glob("*.wav"))
        first = export_frame_embeddings(encoder, wavs, tmp_path / "a")
        second = export_frame_embeddings(encoder, wavs, tmp_path / "b")
        for pa, pb in zip(first, second):
            assert pa.read_bytes() == pb.read_bytes()

    def test_manifest_records_model_and_inputs(self, encoder, tmp_path):
        write_pcm16_wav(tmp_path / "u1.wav", np.zeros(8000))
        manifest_path = tmp_path / "manifest.json"
        export_frame_embeddings(encoder, [tmp_path / "u1.wav"], tmp_path / "out", manifest_path)
        manifest = json.loads(manifest_path.read_text())
        assert manifest["model_id"] == "fake-ssl-encoder"
        assert manifest["dim"] == encoder.dim
        assert manifest["hop_s"] == 0.020
        assert manifest["inputs"] == ["u1.wav"]

    def test_wrong_encoder_shape_rejected(self, tmp_path):
        class BadEncoder:
            model_id = "bad"
            checkpoint_hash = "x"
            dim = 8
            hop_s = 0.02
            offset_s = 0.0

            def encode(self, samples, sample_rate):
                return np.zeros((3, 5), dtype=np.float32)  # dim mismatch

        write_pcm16_wav(tmp_path / "u1.wav", np.zeros(8000))
        with pytest.raises(ValueError, match="expected"):
            export_frame_embeddings(BadEncoder(), [tmp_path / "u1.wav"], tmp_path / "out")
