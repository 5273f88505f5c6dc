"""Feed-forward emotion classifier trained from scratch.

Four ReLU hidden layers [256, 128, 64, 32], inverted dropout on every hidden
layer except the last, per-class sigmoid outputs trained with binary
cross-entropy (the conventional softmax + cross-entropy is available behind
the ``loss`` config flag), Adam optimization, fixed epoch count, no early
stopping.  Everything is seeded and deterministic: the same (seed, data,
config) triple reproduces bit-identical parameters.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy.special import expit

PROB_CLAMP = 1e-7
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class ModelError(ValueError):
    pass


class TrainingDivergedError(ModelError):
    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class MLPConfig:
    input_dim: int
    hidden: tuple[int, ...] = (256, 128, 64, 32)
    output_dim: int = 7
    dropout_p: float = 0.1
    lr: float = 1e-4
    batch_size: int = 200
    epochs: int = 100
    seed: int = 0
    loss: str = "bce"  # or "softmax_ce"

    def __post_init__(self):
        if self.input_dim <= 0 or self.output_dim <= 0 or any(h <= 0 for h in self.hidden):
            raise ModelError("layer dimensions must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ModelError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.loss not in ("bce", "softmax_ce"):
            raise ModelError(f"unknown loss {self.loss!r}")

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))


@dataclass
class MLPParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)
    step: int = 0


@dataclass
class TrainRecord:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)


def init_params(config: MLPConfig) -> MLPParams:
    """Glorot-uniform weights (+-sqrt(6 / (fan_in + fan_out))), zero biases."""
    rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    for fan_in, fan_out in config.layer_dims():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    params = MLPParams(weights=weights, biases=biases)
    params.m_w = [np.zeros_like(w) for w in weights]
    params.v_w = [np.zeros_like(w) for w in weights]
    params.m_b = [np.zeros_like(b) for b in biases]
    params.v_b = [np.zeros_like(b) for b in biases]
    return params


def _output_probs(logits: np.ndarray, loss_kind: str) -> np.ndarray:
    if loss_kind == "softmax_ce":
        shifted = logits - logits.max(axis=-1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=-1, keepdims=True)
    return expit(logits)


def forward(
    params: MLPParams,
    x: np.ndarray,
    train_mode: bool = False,
    config: MLPConfig | None = None,
    rng: np.random.Generator | None = None,
):
    """Class probabilities plus the cached activations needed for backprop.

    In train mode, inverted dropout (mask then rescale by 1/keep) runs on
    every hidden activation except the last hidden layer's.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if not np.all(np.isfinite(x)):
        raise ModelError("non-finite input")
    dropout_p = config.dropout_p if config else 0.0
    loss_kind = config.loss if config else "bce"
    n_layers = len(params.weights)

    cache = {"inputs": [x], "pre": [], "masks": []}
    h = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        cache["pre"].append(z)
        if i < n_layers - 1:
            h = np.maximum(z, 0.0)
            last_hidden = i == n_layers - 2
            if train_mode and dropout_p > 0.0 and not last_hidden:
                if rng is None:
                    raise ModelError("train-mode dropout needs a generator")
                keep = 1.0 - dropout_p
                mask = (rng.random(h.shape) < keep) / keep
                h = h * mask
                cache["masks"].append(mask)
            else:
                cache["masks"].append(None)
            cache["inputs"].append(h)
    probs = _output_probs(cache["pre"][-1], loss_kind)
    return probs, cache


def bce_loss(probs: np.ndarray, one_hot: np.ndarray) -> float:
    """Mean over outputs (and batch) of -[y ln p + (1 - y) ln(1 - p)]."""
    p = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = -(one_hot * np.log(p) + (1.0 - one_hot) * np.log(1.0 - p))
    return float(loss.mean())


def softmax_ce_loss(probs: np.ndarray, one_hot: np.ndarray) -> float:
    p = np.clip(probs, PROB_CLAMP, 1.0)
    return float(-(one_hot * np.log(p)).sum(axis=-1).mean())


def compute_loss(probs: np.ndarray, one_hot: np.ndarray, loss_kind: str = "bce") -> float:
    if loss_kind == "softmax_ce":
        return softmax_ce_loss(probs, one_hot)
    return bce_loss(probs, one_hot)


def loss_and_grads(
    params: MLPParams,
    x: np.ndarray,
    one_hot: np.ndarray,
    config: MLPConfig,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
):
    """Loss plus analytic gradients for every weight matrix and bias vector."""
    probs, cache = forward(params, x, train_mode=train_mode, config=config, rng=rng)
    one_hot = np.atleast_2d(one_hot)
    batch, n_out = probs.shape
    loss = compute_loss(probs, one_hot, config.loss)

    if config.loss == "softmax_ce":
        dz = (probs - one_hot) / batch
    else:
        # d/dz of mean-over-(batch*outputs) BCE through the sigmoid.
        dz = (probs - one_hot) / (batch * n_out)

    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    for i in reversed(range(len(params.weights))):
        h_in = cache["inputs"][i]
        grads_w[i] = dz.T @ h_in
        grads_b[i] = dz.sum(axis=0)
        if i > 0:
            dh = dz @ params.weights[i]
            mask = cache["masks"][i - 1]
            if mask is not None:
                dh = dh * mask
            dz = dh * (cache["pre"][i - 1] > 0)
    return loss, grads_w, grads_b


def adam_step(params: MLPParams, grads_w, grads_b, lr: float) -> None:
    params.step += 1
    t = params.step
    bias1 = 1.0 - ADAM_BETA1**t
    bias2 = 1.0 - ADAM_BETA2**t
    for i in range(len(params.weights)):
        for value, grad, m, v in (
            (params.weights[i], grads_w[i], params.m_w[i], params.v_w[i]),
            (params.biases[i], grads_b[i], params.m_b[i], params.v_b[i]),
        ):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * grad
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * grad**2
            value -= lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def train(
    config: MLPConfig,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[MLPParams, TrainRecord]:
    """Train for the configured epoch count; returns final-epoch parameters.

    Data is reshuffled each epoch with the seeded generator; the validation
    set only feeds the TrainRecord curve, it never selects a model.
    """
    x_train, y_train = train_set
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    if len(x_train) == 0:
        raise ModelError("empty training set")
    params = init_params(config)
    rng = np.random.default_rng(config.seed + 1)
    one_hot_train = _one_hot(y_train, config.output_dim)
    record = TrainRecord()

    for epoch in range(config.epochs):
        order = rng.permutation(len(x_train))
        batch_losses = []
        for b, start in enumerate(range(0, len(x_train), config.batch_size)):
            idx = order[start : start + config.batch_size]
            loss, grads_w, grads_b = loss_and_grads(
                params, x_train[idx], one_hot_train[idx], config, train_mode=True, rng=rng
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, b)
            adam_step(params, grads_w, grads_b, config.lr)
            batch_losses.append(loss)
        record.train_loss.append(float(np.mean(batch_losses)))
        if val_set is not None:
            x_val, y_val = val_set
            probs, _ = forward(params, x_val, train_mode=False, config=config)
            record.val_loss.append(
                compute_loss(probs, _one_hot(np.asarray(y_val), config.output_dim), config.loss)
            )
            record.val_accuracy.append(float(np.mean(np.argmax(probs, axis=1) == y_val)))
    return params, record


def predict(params: MLPParams, x: np.ndarray, config: MLPConfig | None = None) -> np.ndarray:
    """Class indices by argmax over the output probabilities.

    Ties resolve to the lowest class index (argmax convention).
    """
    probs, _ = forward(params, x, train_mode=False, config=config)
    return np.argmax(probs, axis=1)


def standardize_fit(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean/std from a training fold; zero-variance stds become 1."""
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def standardize_apply(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (x - mean) / std


def save_checkpoint(path: Path | str, params: MLPParams, config: MLPConfig) -> None:
    """Write a checkpoint: JSON header then float32 little-endian tensors."""
    tensors = []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        tensors.append((f"w{i}", w))
        tensors.append((f"b{i}", b))
    header = {
        "config": asdict(config),
        "seed": config.seed,
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in tensors],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(b"MLP1")
        handle.write(struct.pack("<I", len(header_bytes)))
        handle.write(header_bytes)
        for _, tensor in tensors:
            handle.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_checkpoint(path: Path | str) -> tuple[MLPParams, MLPConfig]:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != b"MLP1":
        raise ModelError(f"{path}: not a checkpoint file")
    (header_len,) = struct.unpack_from("<I", blob, 4)
    header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    config_dict = dict(header["config"])
    config_dict["hidden"] = tuple(config_dict["hidden"])
    config = MLPConfig(**config_dict)
    offset = 8 + header_len
    arrays = {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        arrays[spec["name"]] = values.reshape(shape).astype(np.float64)
        offset += count * 4
    n_layers = len(config.layer_dims())
    params = MLPParams(
        weights=[arrays[f"w{i}"] for i in range(n_layers)],
        biases=[arrays[f"b{i}"] for i in range(n_layers)],
    )
    params.m_w = [np.zeros_like(w) for w in params.weights]
    params.v_w = [np.zeros_like(w) for w in params.weights]
    params.m_b = [np.zeros_like(b) for b in params.biases]
    params.v_b = [np.zeros_like(b) for b in params.biases]
    return params, config
