"""Probability backends: the contract plus a small trainable reference model.

Any object with ``predict(tensor) -> (H, W) float map in [0, 1]``, a ``name``
and a ``metadata`` dict can serve as a backend. The reference model is a
five-layer 3x3 convolution stack over the 5-plane click tensor (widths
5-16-32-32-16-1, dilations 1-2-4-1-1, rectifier between layers, logistic on
the final channel), trained from scratch with mini-batch SGD + momentum on
per-pixel binary cross-entropy. All math is float64; gradients are exact.
"""

import json
import struct
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .clicks import encode

REFERENCE_WIDTHS = (5, 16, 32, 32, 16, 1)
REFERENCE_DILATIONS = (1, 2, 4, 1, 1)
KERNEL = 3
LOSS_CLAMP = 1e-7

_MAGIC = b"CSEG"
_FORMAT_VERSION = 1


@runtime_checkable
class ProbabilityBackend(Protocol):
    name: str
    metadata: dict

    def predict(self, tensor: np.ndarray) -> np.ndarray: ...


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    momentum: float = 0.9
    epochs: int = 2
    batch_size: int = 8
    seed: int = 0
    lr_decay: float = 0.99  # per-epoch multiplicative decay
    stop_loss: float = 0.0  # stop early once the epoch loss falls below

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _conv(x, w, b, d):
    # x (B, Cin, H, W) -> (B, Cout, H, W); zero padding d keeps H, W
    B, _, H, W = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (d, d), (d, d)))
    acc = np.zeros((w.shape[0], B, H, W))
    for ki in range(KERNEL):
        for kj in range(KERNEL):
            view = xp[:, :, ki * d : ki * d + H, kj * d : kj * d + W]
            acc += np.tensordot(w[:, :, ki, kj], view, axes=([1], [1]))
    return acc.transpose(1, 0, 2, 3) + b[None, :, None, None]


def _conv_backward(x, w, d, dy):
    B, _, H, W = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (d, d), (d, d)))
    dxp = np.zeros_like(xp)
    dw = np.empty_like(w)
    db = dy.sum(axis=(0, 2, 3))
    for ki in range(KERNEL):
        for kj in range(KERNEL):
            view = xp[:, :, ki * d : ki * d + H, kj * d : kj * d + W]
            dw[:, :, ki, kj] = np.tensordot(dy, view, axes=([0, 2, 3], [0, 2, 3]))
            dxp[:, :, ki * d : ki * d + H, kj * d : kj * d + W] += np.tensordot(
                dy, w[:, :, ki, kj], axes=([1], [0])
            ).transpose(0, 3, 1, 2)
    return dxp[:, :, d : d + H, d : d + W], dw, db


class ReferenceModel:
    """Trainable convolutional probability backend."""

    def __init__(self, weights, biases, dilations, name="reference", metadata=None):
        if len(weights) != len(biases) or len(weights) != len(dilations):
            raise ValueError("weights, biases and dilations must align")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.dilations = tuple(int(d) for d in dilations)
        self.name = name
        self.metadata = dict(metadata or {})

    @classmethod
    def initialize(cls, seed: int = 0, widths=REFERENCE_WIDTHS, dilations=REFERENCE_DILATIONS):
        """Fan-in-scaled centered-uniform init, deterministic per seed."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for cin, cout in zip(widths[:-1], widths[1:]):
            # sqrt(6/fan_in) keeps activation variance steady through the stack
            scale = np.sqrt(6.0 / (cin * KERNEL * KERNEL))
            weights.append(rng.uniform(-scale, scale, size=(cout, cin, KERNEL, KERNEL)))
            biases.append(np.zeros(cout))
        return cls(weights, biases, dilations, metadata={"init_seed": seed})

    @property
    def in_channels(self):
        return self.weights[0].shape[1]

    def n_parameters(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def _forward_batch(self, x, keep=False):
        # Center the [0, 1] planes; equivalent to folding a constant into the
        # first bias, but keeps the weight gradients off the DC direction.
        x = x - 0.5
        zs, acts = [], [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b, d) in enumerate(zip(self.weights, self.biases, self.dilations)):
            z = _conv(h, w, b, d)
            if keep:
                zs.append(z)
            h = _sigmoid(z[:, 0]) if i == last else np.maximum(z, 0.0)
            if keep and i != last:
                acts.append(h)
        if keep:
            return h, zs, acts
        return h

    def forward(self, tensor: np.ndarray) -> np.ndarray:
        """Probability map for one (5, H, W) input tensor."""
        tensor = np.asarray(tensor, dtype=np.float64)
        if tensor.ndim != 3 or tensor.shape[0] != self.in_channels:
            raise ValueError(f"expected ({self.in_channels}, H, W) input, got {tensor.shape}")
        return self._forward_batch(tensor[None])[0]

    predict = forward  # backend contract alias

    def predict_clicks(self, image, clicks) -> np.ndarray:
        return self.forward(encode(image, clicks))


def loss_and_gradient(model: ReferenceModel, tensor, target):
    """Mean binary cross-entropy and its exact gradient for every parameter.

    `tensor` is (5, H, W) or a (B, 5, H, W) batch; `target` matches with
    (H, W) or (B, H, W). Probabilities are clamped to [1e-7, 1 - 1e-7] inside
    the loss; the gradient is zero where the clamp is active.
    """
    x = np.asarray(tensor, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
        y = y[None]
    if x.shape[1] != model.in_channels:
        raise ValueError(f"expected {model.in_channels} input planes, got {x.shape[1]}")
    if y.shape != (x.shape[0],) + x.shape[2:]:
        raise ValueError(f"target shape {y.shape} does not match input {x.shape}")

    q, zs, acts = model._forward_batch(x, keep=True)
    qc = np.clip(q, LOSS_CLAMP, 1.0 - LOSS_CLAMP)
    n = q.size
    loss = float(-(y * np.log(qc) + (1.0 - y) * np.log(1.0 - qc)).sum() / n)

    live = (q > LOSS_CLAMP) & (q < 1.0 - LOSS_CLAMP)
    dz = ((q - y) * live / n)[:, None]
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        dx, dw, db = _conv_backward(acts[i], model.weights[i], model.dilations[i], dz)
        grads_w[i] = dw
        grads_b[i] = db
        if i > 0:
            dz = dx * (zs[i - 1] > 0.0)
    return loss, list(zip(grads_w, grads_b))


def train(model: ReferenceModel, samples, config: TrainConfig):
    """Mini-batch SGD with momentum over (image, clicks, target) triples.

    Click tensors are re-encoded per batch rather than stored. Returns the
    (mutated) model and the per-epoch mean sample loss. Fully deterministic
    for a fixed config seed.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no training samples")
    shapes = {s[0].shape[:2] for s in samples}
    if len(shapes) != 1:
        raise ValueError(f"samples must share one image size, got {shapes}")

    rng = np.random.default_rng(config.seed)
    vel = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(model.weights, model.biases)]
    history = []
    n = len(samples)
    lr = config.learning_rate
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch_x = np.stack([encode(samples[i][0], samples[i][1]) for i in idx])
            batch_y = np.stack([samples[i][2] for i in idx]).astype(np.float64)
            loss, grads = loss_and_gradient(model, batch_x, batch_y)
            total += loss * len(idx)
            for (w, b), (vw, vb), (dw, db) in zip(
                zip(model.weights, model.biases), vel, grads
            ):
                vw *= config.momentum
                vw -= lr * dw
                w += vw
                vb *= config.momentum
                vb -= lr * db
                b += vb
        epoch_loss = total / n
        history.append(epoch_loss)
        if epoch_loss < config.stop_loss:
            break
        lr *= config.lr_decay
    return model, history


def save_model(model: ReferenceModel, path: str) -> None:
    """Versioned flat binary (dims + little-endian f32) plus a JSON sidecar."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _FORMAT_VERSION, len(model.weights)))
        for w, b, d in zip(model.weights, model.biases, model.dilations):
            cout, cin, kh, kw = w.shape
            f.write(struct.pack("<IIIII", cout, cin, kh, kw, d))
            f.write(w.astype("<f4").tobytes())
            f.write(b.astype("<f4").tobytes())
    sidecar = {
        "format_version": _FORMAT_VERSION,
        "name": model.name,
        "metadata": model.metadata,
        "architecture": {
            "kernel": KERNEL,
            "widths": [model.in_channels] + [w.shape[0] for w in model.weights],
            "dilations": list(model.dilations),
        },
    }
    with open(path + ".json", "w") as f:
        json.dump(sidecar, f, indent=2)
        f.write("\n")


def load_model(path: str) -> ReferenceModel:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a model file")
        version, n_layers = struct.unpack("<II", f.read(8))
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported model format version {version}")
        weights, biases, dilations = [], [], []
        for _ in range(n_layers):
            cout, cin, kh, kw, d = struct.unpack("<IIIII", f.read(20))
            w = np.frombuffer(f.read(4 * cout * cin * kh * kw), dtype="<f4")
            b = np.frombuffer(f.read(4 * cout), dtype="<f4")
            weights.append(w.reshape(cout, cin, kh, kw).astype(np.float64))
            biases.append(b.astype(np.float64))
            dilations.append(d)
    name, metadata = "reference", {}
    try:
        with open(path + ".json") as f:
            sidecar = json.load(f)
        name = sidecar.get("name", name)
        metadata = sidecar.get("metadata", {})
    except FileNotFoundError:
        pass
    return ReferenceModel(weights, biases, dilations, name=name, metadata=metadata)
