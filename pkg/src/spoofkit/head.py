"""Trainable classifier heads over frozen embeddings.

Two architectures:

* Whisper-style: per-frame dense layer, temporal average pooling, a
  second dense layer into two logits, softmax. Score is the fake-class
  probability.
* Wav2Vec-style: optional trainable softmax-weighted layer aggregation,
  temporal average pooling, three dense layers (1024, 128, 1) with ReLU
  between them, sigmoid output.

Forward and backward passes are written out by hand in float64 so
analytic gradients can be checked against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .embedding import (
    EmbeddingMatrix,
    LayerStack,
    aggregate_layers,
    aggregate_layers_backward,
    softmax,
)

CHECKPOINT_MAGIC = b"SPF1"
CHECKPOINT_VERSION = 1


class HeadError(Exception):
    """Architecture or checkpoint failure."""


class CheckpointVersionError(HeadError):
    pass


class CheckpointCorruptError(HeadError):
    pass


@dataclass(frozen=True)
class WhisperArch:
    input_dim: int
    hidden: int = 512


@dataclass(frozen=True)
class Wav2VecArch:
    input_dim: int
    num_layers: int = 0  # 0 = plain matrix input, no layer weights
    hidden1: int = 1024
    hidden2: int = 128


Architecture = WhisperArch | Wav2VecArch


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)


@dataclass(frozen=True)
class Prediction:
    score: float
    logits: np.ndarray
    cache: dict


class HeadModel:
    def __init__(self, architecture: Architecture, layers: list[DenseLayer],
                 layer_weights: np.ndarray | None = None, rng_seed: int = 0):
        self.architecture = architecture
        self.layers = layers
        self.layer_weights = layer_weights
        self.rng_seed = rng_seed

    def parameters(self) -> list[np.ndarray]:
        """Parameter arrays in declaration order; views, not copies."""
        params: list[np.ndarray] = []
        if self.layer_weights is not None:
            params.append(self.layer_weights)
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.bias)
        return params

    def set_parameters(self, arrays: list[np.ndarray]) -> None:
        arrays = list(arrays)
        expected = self.parameters()
        if len(arrays) != len(expected):
            raise HeadError(f"expected {len(expected)} parameter arrays, got {len(arrays)}")
        i = 0
        if self.layer_weights is not None:
            self.layer_weights = np.array(arrays[i], dtype=np.float64)
            i += 1
        for layer in self.layers:
            layer.weights = np.array(arrays[i], dtype=np.float64)
            layer.bias = np.array(arrays[i + 1], dtype=np.float64)
            i += 2

    def clone(self) -> "HeadModel":
        return HeadModel(
            self.architecture,
            [DenseLayer(l.weights.copy(), l.bias.copy()) for l in self.layers],
            None if self.layer_weights is None else self.layer_weights.copy(),
            self.rng_seed,
        )

    @property
    def loss_kind(self) -> str:
        return "softmax-ce" if isinstance(self.architecture, WhisperArch) else "sigmoid-bce"


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> DenseLayer:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
    return DenseLayer(weights=w, bias=np.zeros(fan_out))


def init_head(architecture: Architecture, seed: int) -> HeadModel:
    """Seed-reproducible initialization: Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    if isinstance(architecture, WhisperArch):
        layers = [
            _glorot(rng, architecture.hidden, architecture.input_dim),
            _glorot(rng, 2, architecture.hidden),
        ]
        return HeadModel(architecture, layers, rng_seed=seed)
    if isinstance(architecture, Wav2VecArch):
        layers = [
            _glorot(rng, architecture.hidden1, architecture.input_dim),
            _glorot(rng, architecture.hidden2, architecture.hidden1),
            _glorot(rng, 1, architecture.hidden2),
        ]
        lw = np.zeros(architecture.num_layers) if architecture.num_layers > 0 else None
        return HeadModel(architecture, layers, layer_weights=lw, rng_seed=seed)
    raise HeadError(f"unknown architecture {architecture!r}")


def forward(model: HeadModel, emb: EmbeddingMatrix | LayerStack) -> Prediction:
    arch = model.architecture
    if isinstance(arch, WhisperArch):
        if isinstance(emb, LayerStack):
            raise HeadError("whisper-style head takes a plain embedding matrix, not a layer stack")
        e = emb.values
        if e.shape[1] != arch.input_dim:
            raise HeadError(f"feature dim {e.shape[1]} != architecture input dim {arch.input_dim}")
        w1, w2 = model.layers
        hidden = e @ w1.weights.T + w1.bias  # (T, hidden)
        pooled = hidden.mean(axis=0)
        logits = w2.weights @ pooled + w2.bias  # (2,)
        probs = softmax(logits)
        cache = {"e": e, "pooled_hidden": pooled, "probs": probs}
        return Prediction(score=float(probs[1]), logits=logits, cache=cache)

    stack = None
    if isinstance(emb, LayerStack):
        if model.layer_weights is None:
            raise HeadError("model has no layer weights but received a layer stack")
        if emb.num_layers != len(model.layer_weights):
            raise HeadError(f"stack L={emb.num_layers} != layer-weight length {len(model.layer_weights)}")
        stack = emb
        emb = aggregate_layers(emb, model.layer_weights)
    e = emb.values
    if e.shape[1] != arch.input_dim:
        raise HeadError(f"feature dim {e.shape[1]} != architecture input dim {arch.input_dim}")
    w1, w2, w3 = model.layers
    pooled = e.mean(axis=0)
    z1 = w1.weights @ pooled + w1.bias
    a1 = np.maximum(z1, 0.0)
    z2 = w2.weights @ a1 + w2.bias
    a2 = np.maximum(z2, 0.0)
    z3 = w3.weights @ a2 + w3.bias  # (1,)
    score = float(1.0 / (1.0 + np.exp(-z3[0])))
    cache = {"stack": stack, "e": e, "pooled": pooled, "z1": z1, "a1": a1, "z2": z2, "a2": a2}
    return Prediction(score=score, logits=z3, cache=cache)


def backward(model: HeadModel, pred: Prediction, grad_logits: np.ndarray) -> list[np.ndarray]:
    """Gradients w.r.t. every trainable parameter, in parameters() order.

    `grad_logits` is the loss gradient at the raw logits of the matching
    forward pass.
    """
    arch = model.architecture
    cache = pred.cache
    grad_logits = np.asarray(grad_logits, dtype=np.float64)

    if isinstance(arch, WhisperArch):
        e, pooled = cache["e"], cache["pooled_hidden"]
        w1, w2 = model.layers
        d_w2 = np.outer(grad_logits, pooled)
        d_b2 = grad_logits.copy()
        d_pooled = w2.weights.T @ grad_logits
        # pooling spreads the gradient uniformly over frames; the
        # per-frame dense gradients collapse to outer products with means
        d_w1 = np.outer(d_pooled, e.mean(axis=0))
        d_b1 = d_pooled
        return [d_w1, d_b1, d_w2, d_b2]

    e, pooled = cache["e"], cache["pooled"]
    z1, a1, z2, a2 = cache["z1"], cache["a1"], cache["z2"], cache["a2"]
    w1, w2, w3 = model.layers
    d_z3 = grad_logits
    d_w3 = np.outer(d_z3, a2)
    d_b3 = d_z3.copy()
    d_z2 = (w3.weights.T @ d_z3) * (z2 > 0)
    d_w2 = np.outer(d_z2, a1)
    d_b2 = d_z2
    d_z1 = (w2.weights.T @ d_z2) * (z1 > 0)
    d_w1 = np.outer(d_z1, pooled)
    d_b1 = d_z1
    grads = [d_w1, d_b1, d_w2, d_b2, d_w3, d_b3]

    if model.layer_weights is not None:
        stack = cache["stack"]
        if stack is None:
            raise HeadError("backward for a layer-weighted model needs a layer-stack forward")
        d_pooled = w1.weights.T @ d_z1
        t = e.shape[0]
        d_e = np.broadcast_to(d_pooled / t, e.shape)
        d_lw = aggregate_layers_backward(stack, model.layer_weights, d_e)
        grads = [d_lw] + grads
    return grads


def _arch_fields(model: HeadModel) -> tuple[int, int, int, int, int]:
    arch = model.architecture
    if isinstance(arch, WhisperArch):
        return 0, arch.input_dim, arch.hidden, 0, 0
    return 1, arch.input_dim, arch.num_layers, arch.hidden1, arch.hidden2


def save_head(model: HeadModel, path) -> None:
    kind, input_dim, a1, a2, a3 = _arch_fields(model)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IBIIIIq", CHECKPOINT_VERSION, kind, input_dim, a1, a2, a3, model.rng_seed))
        for p in model.parameters():
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_head(path) -> HeadModel:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointCorruptError(f"cannot read {path}: {exc}") from exc

    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointCorruptError(f"{path}: bad magic {blob[:4]!r}")
    header_len = 4 + struct.calcsize("<IBIIIIq")
    if len(blob) < header_len:
        raise CheckpointCorruptError(f"{path}: truncated header")
    version, kind, input_dim, a1, a2, a3, seed = struct.unpack("<IBIIIIq", blob[4:header_len])
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")

    if kind == 0:
        arch: Architecture = WhisperArch(input_dim=input_dim, hidden=a1)
    elif kind == 1:
        arch = Wav2VecArch(input_dim=input_dim, num_layers=a1, hidden1=a2, hidden2=a3)
    else:
        raise CheckpointCorruptError(f"{path}: unknown architecture kind {kind}")

    model = init_head(arch, seed)
    offset = header_len
    arrays = []
    for p in model.parameters():
        nbytes = p.size * 8
        chunk = blob[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointCorruptError(f"{path}: truncated parameter payload")
        arrays.append(np.frombuffer(chunk, dtype="<f8").reshape(p.shape).copy())
        offset += nbytes
    if offset != len(blob):
        raise CheckpointCorruptError(f"{path}: {len(blob) - offset} trailing bytes")
    model.set_parameters(arrays)
    return model
