"""Hugging Face adapters for the export protocols.

Imports of torch / transformers happen lazily so that the exporters' tests
(which inject deterministic stand-in models) run without the heavyweight
stack or network access.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _params_hash(state_dict) -> str:
    h = hashlib.sha256()
    for name in sorted(state_dict):
        h.update(name.encode())
        h.update(state_dict[name].detach().cpu().numpy().tobytes())
    return h.hexdigest()[:16]


class HFCausalScorer:
    """GPT-style causal LM scorer over the full vocabulary distribution."""

    def __init__(self, model_name: str = "gpt2"):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name, use_fast=True)
        if not self.tokenizer.is_fast:
            raise ValueError(
                f"{model_name}: tokenizer has no offset mapping; unsupported"
            )
        self.model = AutoModelForCausalLM.from_pretrained(model_name)
        self.model.eval()
        self.model_id = model_name
        self.tokenizer_id = model_name
        self.checkpoint_hash = _params_hash(self.model.state_dict())
        self.vocab_size = int(self.model.config.vocab_size)
        bos = self.tokenizer.bos_token_id
        if bos is None:
            bos = self.tokenizer.eos_token_id
        if bos is None:
            raise ValueError(f"{model_name}: no BOS/EOS token to seed the first position")
        self.bos_token_id = int(bos)

    def tokenize_with_offsets(self, text: str):
        encoding = self.tokenizer(text, return_offsets_mapping=True, add_special_tokens=False)
        return list(encoding["input_ids"]), [tuple(o) for o in encoding["offset_mapping"]]

    def logits(self, input_ids):
        with self._torch.no_grad():
            ids = self._torch.tensor([list(input_ids)], dtype=self._torch.long)
            out = self.model(ids).logits[0]
        return out.double().cpu().numpy()


class HFWav2Vec2Encoder:
    """Last-transformer-layer frame representations from Wav2vec 2.0."""

    hop_s = 0.020
    offset_s = 0.0125  # 25 ms receptive field centered on each 20 ms stride

    def __init__(self, model_name: str = "facebook/wav2vec2-base"):
        import torch
        from transformers import Wav2Vec2Model

        self._torch = torch
        self.model = Wav2Vec2Model.from_pretrained(model_name)
        self.model.eval()
        self.model_id = model_name
        self.checkpoint_hash = _params_hash(self.model.state_dict())
        self.dim = int(self.model.config.hidden_size)

    def encode(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        if sample_rate != 16000:
            raise ValueError(f"expected 16 kHz audio, got {sample_rate}")
        if len(samples) < 400:  # one receptive field
            return np.zeros((0, self.dim), dtype=np.float32)
        with self._torch.no_grad():
            x = self._torch.tensor(samples, dtype=self._torch.float32)[None, :]
            hidden = self.model(x).last_hidden_state[0]
        return hidden.cpu().numpy().astype(np.float32)
