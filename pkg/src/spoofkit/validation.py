"""Input validation helpers for the estimator API."""

from __future__ import annotations

import numpy as np


def check_embeddings(X) -> np.ndarray:
    """Coerce to a finite float64 array of shape (n_samples, T, D)."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        # single-frame features: treat columns as the feature axis
        arr = arr[:, None, :]
    if arr.ndim != 3:
        raise ValueError(f"expected embeddings of shape (n, T, D), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embeddings contain non-finite values")
    return arr


def check_binary_labels(y, n_samples: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.shape != (n_samples,):
        raise ValueError(f"labels must have shape ({n_samples},), got {arr.shape}")
    uniq = set(np.unique(arr).tolist())
    if not uniq <= {0, 1}:
        raise ValueError(f"labels must be in {{0, 1}}, got {sorted(uniq)}")
    if uniq != {0, 1}:
        raise ValueError("both classes must be present for training")
    return arr.astype(np.int64)
