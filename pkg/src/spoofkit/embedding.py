"""Embedding providers and the EMB1/EMBS interchange formats.

Embeddings are time-by-feature matrices produced by a frozen extractor.
Two providers exist: a file-based one for precomputed extractor outputs
and a toy log-mel one for desk-scale runs. Wav2Vec-style pipelines add a
trainable softmax-weighted sum over per-layer outputs.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from . import audio
from .data import Utterance

EMB1_MAGIC = b"EMB1"
EMBS_MAGIC = b"EMBS"

# Declared (T, D) per extractor tag; providers enforce these at load.
SHAPE_CONTRACTS = {
    "whisper-tiny": (1500, 384),
    "whisper-base": (1500, 512),
    "whisper-small": (1500, 768),
    "whisper-medium": (1500, 1024),
    "whisper-large": (1500, 1280),
    "wav2vec2-base": (249, 768),
    "wav2vec2-large": (249, 1024),
    "wav2vec2-xls-r": (249, 1024),
    "toy-logmel": (249, 80),
}


class EmbeddingError(Exception):
    """Unreadable, malformed, or contract-violating embedding."""


@dataclass(frozen=True)
class EmbeddingMatrix:
    """T x D matrix; rows are time frames."""

    values: np.ndarray
    extractor_tag: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise EmbeddingError(f"embedding must be 2D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise EmbeddingError("embedding contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class LayerStack:
    """L x T x D tensor of per-hidden-layer extractor outputs."""

    values: np.ndarray
    extractor_tag: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[0] < 1:
            raise EmbeddingError(f"layer stack must be LxTxD with L >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise EmbeddingError("layer stack contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def num_layers(self) -> int:
        return self.values.shape[0]


def softmax(raw: np.ndarray) -> np.ndarray:
    z = raw - raw.max()
    e = np.exp(z)
    return e / e.sum()


def aggregate_layers(stack: LayerStack, raw_weights: np.ndarray) -> EmbeddingMatrix:
    """Convex combination of layers with softmax-normalized weights."""
    raw = np.asarray(raw_weights, dtype=np.float64)
    if raw.shape != (stack.num_layers,):
        raise EmbeddingError(
            f"layer-weight length {raw.shape} does not match stack with L={stack.num_layers}"
        )
    p = softmax(raw)
    combined = np.tensordot(p, stack.values, axes=(0, 0))
    return EmbeddingMatrix(values=combined, extractor_tag=stack.extractor_tag)


def aggregate_layers_backward(
    stack: LayerStack, raw_weights: np.ndarray, grad_output: np.ndarray
) -> np.ndarray:
    """Gradient of the aggregation w.r.t. the raw (pre-softmax) weights."""
    raw = np.asarray(raw_weights, dtype=np.float64)
    p = softmax(raw)
    # g_l = <grad_output, layer_l>; chain through the softmax Jacobian.
    g = np.tensordot(stack.values, grad_output, axes=([1, 2], [0, 1]))
    return p * (g - float(p @ g))


def write_emb1(m: EmbeddingMatrix, path) -> None:
    rows, cols = m.values.shape
    tag = m.extractor_tag.encode("utf-8")
    payload = m.values.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(EMB1_MAGIC)
        fh.write(struct.pack("<III", rows, cols, len(tag)))
        fh.write(tag)
        fh.write(payload)


def _read_emb1_stream(fh, path) -> EmbeddingMatrix:
    magic = fh.read(4)
    if magic != EMB1_MAGIC:
        raise EmbeddingError(f"{path}: bad magic {magic!r}")
    header = fh.read(12)
    if len(header) != 12:
        raise EmbeddingError(f"{path}: truncated header")
    rows, cols, tag_len = struct.unpack("<III", header)
    if rows > 0 and cols > 0xFFFFFFFF // rows:
        raise EmbeddingError(f"{path}: rows*cols overflow ({rows} x {cols})")
    tag = fh.read(tag_len)
    if len(tag) != tag_len:
        raise EmbeddingError(f"{path}: truncated tag")
    need = rows * cols * 4
    payload = fh.read(need)
    if len(payload) != need:
        raise EmbeddingError(f"{path}: truncated payload ({len(payload)} of {need} bytes)")
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    if not np.all(np.isfinite(values)):
        raise EmbeddingError(f"{path}: non-finite payload values")
    return EmbeddingMatrix(values=values, extractor_tag=tag.decode("utf-8"))


def read_emb1(path) -> EmbeddingMatrix:
    try:
        with open(path, "rb") as fh:
            return _read_emb1_stream(fh, path)
    except OSError as exc:
        raise EmbeddingError(f"cannot read {path}: {exc}") from exc


def write_embs(stack: LayerStack, path) -> None:
    """L-stacked variant: magic, u32 L, then L EMB1 payloads."""
    import io

    with open(path, "wb") as fh:
        fh.write(EMBS_MAGIC)
        fh.write(struct.pack("<I", stack.num_layers))
        for layer in stack.values:
            buf = io.BytesIO()
            rows, cols = layer.shape
            tag = stack.extractor_tag.encode("utf-8")
            buf.write(EMB1_MAGIC)
            buf.write(struct.pack("<III", rows, cols, len(tag)))
            buf.write(tag)
            buf.write(layer.astype("<f4").tobytes(order="C"))
            fh.write(buf.getvalue())


def read_embs(path) -> LayerStack:
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != EMBS_MAGIC:
                raise EmbeddingError(f"{path}: bad magic {magic!r}")
            (num_layers,) = struct.unpack("<I", fh.read(4))
            if num_layers < 1:
                raise EmbeddingError(f"{path}: stack declares L={num_layers}")
            layers = [_read_emb1_stream(fh, path) for _ in range(num_layers)]
    except OSError as exc:
        raise EmbeddingError(f"cannot read {path}: {exc}") from exc
    except struct.error as exc:
        raise EmbeddingError(f"{path}: truncated header") from exc

    tags = {m.extractor_tag for m in layers}
    shapes = {m.shape for m in layers}
    if len(shapes) != 1:
        raise EmbeddingError(f"{path}: inconsistent layer shapes {shapes}")
    return LayerStack(
        values=np.stack([m.values for m in layers]),
        extractor_tag=tags.pop() if len(tags) == 1 else "",
    )


def check_shape_contract(m: EmbeddingMatrix | LayerStack, tag: str) -> None:
    expected = SHAPE_CONTRACTS.get(tag)
    if expected is None:
        return
    got = m.values.shape[-2:]
    if tuple(got) != expected:
        raise EmbeddingError(f"shape mismatch for tag {tag!r}: declared {expected}, got {tuple(got)}")


class FileProvider:
    """Serves precomputed embeddings, one EMB1/EMBS file per utterance.

    The utterance `path` points at the embedding file; `.embs` files
    come back as layer stacks.
    """

    def __init__(self, extractor_tag: str, root: str | None = None):
        self.extractor_tag = extractor_tag
        self.root = root

    def _resolve(self, u: Utterance) -> str:
        path = u.path
        if self.root is not None and not os.path.isabs(path):
            path = os.path.join(self.root, path)
        return path

    def provide(self, u: Utterance) -> EmbeddingMatrix | LayerStack:
        path = self._resolve(u)
        if not os.path.exists(path):
            raise EmbeddingError(f"missing embedding file for utterance {u.id!r}: {path}")
        out = read_embs(path) if path.endswith(".embs") else read_emb1(path)
        if out.extractor_tag != self.extractor_tag:
            raise EmbeddingError(
                f"utterance {u.id!r}: file tag {out.extractor_tag!r} != provider tag {self.extractor_tag!r}"
            )
        check_shape_contract(out, self.extractor_tag)
        return out


class ToyLogMelProvider:
    """Deterministic desk-scale extractor: WAV -> 16 kHz -> 5 s -> log-mel.

    Outputs (249, 80) so the Wav2Vec-style head runs unchanged on toy
    features. Results are cached per utterance id.
    """

    extractor_tag = "toy-logmel"

    def __init__(self, root: str | None = None):
        self.root = root
        self._cache: dict[str, EmbeddingMatrix] = {}

    def provide(self, u: Utterance) -> EmbeddingMatrix:
        cached = self._cache.get(u.id)
        if cached is not None:
            return cached
        path = u.path
        if self.root is not None and not os.path.isabs(path):
            path = os.path.join(self.root, path)
        w = audio.load_wav(path, source_id=u.id)
        w = audio.resample(w, audio.TARGET_RATE)
        w = audio.standardize(w)
        m = EmbeddingMatrix(values=audio.logmel(w), extractor_tag=self.extractor_tag)
        self._cache[u.id] = m
        return m
