import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

sys.path.insert(0, str(Path(__file__).parent))

from spoofkit.data import MANIFEST_HEADER, DatasetManifest, Utterance


def write_wav(path, samples, rate=16000, dtype=np.int16):
    samples = np.asarray(samples)
    if dtype == np.int16:
        samples = np.clip(samples * 32767, -32768, 32767).astype(np.int16)
    elif dtype == np.float32:
        samples = samples.astype(np.float32)
    wavfile.write(path, rate, samples)
    return path


def make_manifest_csv(path, rows):
    lines = [",".join(MANIFEST_HEADER)]
    lines += [",".join(str(c) for c in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")
    return path


def tone_clip(rng, freq, rate=16000, seconds=1.0, noise=0.02):
    t = np.arange(int(rate * seconds)) / rate
    phase = rng.uniform(0, 2 * np.pi)
    x = 0.6 * np.sin(2 * np.pi * freq * t + phase) + noise * rng.standard_normal(len(t))
    return np.clip(x, -1.0, 1.0)


def make_blob_dataset(root, n_train=200, n_dev=100, n_eval=100, seed=7):
    """Two-class toy corpus: low-band tones (real) vs high-band tones (fake).

    After log-mel pooling the classes form two well-separated clusters; a
    logistic baseline achieves 0% EER on them.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifests = {}
    for partition, count in (("train", n_train), ("dev", n_dev), ("eval", n_eval)):
        entries = []
        for i in range(count):
            label = i % 2
            base = 2800.0 if label else 350.0
            freq = base + rng.uniform(-150.0, 150.0)
            uid = f"{partition}_{i:04d}"
            path = root / f"{uid}.wav"
            write_wav(path, tone_clip(rng, freq))
            entries.append(Utterance(uid, str(path), label, "toyblobs", partition))
        manifests[partition] = DatasetManifest(name=f"toyblobs-{partition}", entries=tuple(entries))
    return manifests


@pytest.fixture(scope="session")
def blob_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("blobs")
    return make_blob_dataset(root)
