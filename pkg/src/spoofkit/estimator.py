"""Scikit-learn style wrappers around the preprocessing and training core.

These let the harness compose with sklearn pipelines and model selection
while the CLI keeps driving the same underlying code through manifests.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from . import audio, trainer
from .data import DatasetManifest, Utterance
from .embedding import EmbeddingMatrix
from .head import Wav2VecArch, WhisperArch, forward, init_head
from .validation import check_binary_labels, check_embeddings


class LogMelTransformer(TransformerMixin, BaseEstimator):
    """Stateless transformer: WAV paths or waveforms -> log-mel embeddings."""

    def __init__(self, n_mels=audio.DEFAULT_N_MELS, frame_len=audio.DEFAULT_FRAME_LEN,
                 hop=audio.DEFAULT_HOP):
        self.n_mels = n_mels
        self.frame_len = frame_len
        self.hop = hop

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        out = []
        for item in X:
            if isinstance(item, audio.Waveform):
                w = item
            else:
                w = audio.load_wav(item)
            w = audio.resample(w, audio.TARGET_RATE)
            w = audio.standardize(w)
            out.append(audio.logmel(w, self.n_mels, self.frame_len, self.hop))
        return np.stack(out)


class _ArrayProvider:
    """Serves embeddings from an in-memory array keyed by utterance id."""

    def __init__(self, arrays: np.ndarray, tag: str = "in-memory"):
        self.arrays = arrays
        self.extractor_tag = tag

    def provide(self, u: Utterance) -> EmbeddingMatrix:
        return EmbeddingMatrix(values=self.arrays[int(u.id)], extractor_tag=self.extractor_tag)


def _as_manifest(indices, y, partition: str, name: str) -> DatasetManifest:
    entries = tuple(
        Utterance(str(i), "", int(y[i]), name, partition) for i in indices
    )
    return DatasetManifest(name=name, entries=entries)


class SpoofDetector(ClassifierMixin, BaseEstimator):
    """Binary deepfake classifier over precomputed embeddings.

    Parameters mirror the training recipe defaults; `architecture` picks
    between the softmax two-layer head ("whisper") and the three-layer
    sigmoid head ("wav2vec").
    """

    def __init__(self, architecture="wav2vec", hidden=512, max_epochs=100, patience=10,
                 batch_size=64, learning_rate=1e-4, weight_decay=0.01,
                 dev_fraction=0.2, seed=0):
        self.architecture = architecture
        self.hidden = hidden
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.dev_fraction = dev_fraction
        self.seed = seed

    def fit(self, X, y):
        X = check_embeddings(X)
        y = check_binary_labels(y, X.shape[0])
        input_dim = X.shape[2]
        if self.architecture == "whisper":
            arch = WhisperArch(input_dim=input_dim, hidden=self.hidden)
        elif self.architecture == "wav2vec":
            arch = Wav2VecArch(input_dim=input_dim)
        else:
            raise ValueError(f"architecture must be 'whisper' or 'wav2vec', got {self.architecture!r}")

        rng = np.random.default_rng(self.seed)
        n = X.shape[0]
        n_dev = max(2, int(round(n * self.dev_fraction)))
        # stratified dev split so both classes appear on each side
        dev_idx: list[int] = []
        for cls in (0, 1):
            cls_idx = np.flatnonzero(y == cls)
            take = max(1, int(round(len(cls_idx) * self.dev_fraction)))
            dev_idx.extend(rng.permutation(cls_idx)[:take].tolist())
        dev_set = set(dev_idx)
        train_idx = [i for i in range(n) if i not in dev_set]

        provider = _ArrayProvider(X)
        cfg = trainer.TrainConfig(
            max_epochs=self.max_epochs, patience=self.patience,
            batch_size=min(self.batch_size, 2 * (len(train_idx) // 2) or 2),
            learning_rate=self.learning_rate, weight_decay=self.weight_decay,
            seed=self.seed,
        )
        model = init_head(arch, self.seed)
        self.model_, self.train_log_ = trainer.fit(
            model, provider,
            _as_manifest(train_idx, y, "train", "fit"),
            _as_manifest(sorted(dev_set), y, "dev", "fit"),
            cfg,
        )
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = input_dim
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("SpoofDetector is not fitted yet")

    def predict_proba(self, X):
        self._check_fitted()
        X = check_embeddings(X)
        scores = np.array([
            forward(self.model_, EmbeddingMatrix(values=x)).score for x in X
        ])
        return np.column_stack([1.0 - scores, scores])

    def decision_function(self, X):
        return self.predict_proba(X)[:, 1]

    def predict(self, X):
        return (self.decision_function(X) >= 0.5).astype(np.int64)
