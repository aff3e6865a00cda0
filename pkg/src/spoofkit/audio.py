"""Audio loading and preprocessing.

All downstream processing assumes 16 kHz mono waveforms of exactly 5 s
(80000 samples). Short clips are extended by repetition, long clips are
truncated to the first 5 s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

TARGET_RATE = 16000
TARGET_SECONDS = 5
TARGET_SAMPLES = TARGET_RATE * TARGET_SECONDS

# Toy log-mel extractor defaults: 25 ms frames, 20 ms hop at 16 kHz.
# This yields 249 frames on a standardized waveform, matching the time
# axis the Wav2Vec-style head expects.
DEFAULT_N_MELS = 80
DEFAULT_FRAME_LEN = 400
DEFAULT_HOP = 320

LOG_EPS = 1e-10


class AudioError(Exception):
    """Base class for audio ingestion failures."""


class UnreadableFileError(AudioError):
    """File missing or not a parseable RIFF/WAV container."""


class UnsupportedEncodingError(AudioError):
    """WAV encoding outside PCM 8/16/24/32-bit int or 32-bit float."""


class EmptyAudioError(AudioError):
    """Zero-length audio payload."""


@dataclass(frozen=True)
class Waveform:
    """Mono audio clip with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    def __len__(self):
        return len(self.samples)


_INT_SCALES = {
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,  # scipy stores 24-bit PCM in the high bytes
}


def load_wav(path, source_id: str | None = None) -> Waveform:
    """Read a PCM WAV file into a mono [-1, 1] waveform.

    Multichannel audio is averaged to mono. The original sample rate is
    preserved; use :func:`resample` to bring it to 16 kHz.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        msg = str(exc)
        if "Unsupported" in msg or "Unknown wave file format" in msg and "fmt" not in msg:
            raise UnsupportedEncodingError(f"{path}: {msg}") from exc
        raise UnreadableFileError(f"cannot parse {path}: {msg}") from exc
    except Exception as exc:  # struct errors on truncated headers, etc.
        raise UnreadableFileError(f"cannot parse {path}: {exc}") from exc

    if data.size == 0:
        raise EmptyAudioError(f"zero-length audio: {path}")

    dtype = data.dtype
    if dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif dtype in _INT_SCALES:
        samples = data.astype(np.float64) / _INT_SCALES[dtype]
    elif dtype in (np.dtype(np.float32), np.dtype(np.float64)):
        samples = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedEncodingError(f"{path}: unsupported sample format {dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)

    sid = source_id if source_id is not None else str(path)
    return Waveform(samples=samples, sample_rate=int(rate), source_id=sid)


def _kaiser(u: np.ndarray, beta: float) -> np.ndarray:
    # Kaiser window on |u| <= 1, zero outside.
    inside = np.abs(u) <= 1.0
    w = np.zeros_like(u)
    w[inside] = np.i0(beta * np.sqrt(1.0 - u[inside] ** 2)) / np.i0(beta)
    return w


def resample(w: Waveform, target_rate: int, beta: float = 8.0, taps: int = 32) -> Waveform:
    """Windowed-sinc resampling (Kaiser window).

    The filter half-width is `taps` samples at the lower of the two
    rates. Equal rates are a bit-exact pass-through.
    """
    if w.sample_rate <= 0:
        raise ValueError(f"invalid sample rate {w.sample_rate}")
    if target_rate <= 0:
        raise ValueError(f"invalid target rate {target_rate}")
    if target_rate == w.sample_rate:
        return w

    x = w.samples
    n_in = len(x)
    ratio = target_rate / w.sample_rate
    n_out = int(round(n_in * ratio))

    # Half-width in input samples; widen when downsampling so the
    # anti-aliasing cutoff keeps `taps` taps at the output rate.
    half = taps * max(1.0, 1.0 / ratio)
    cutoff = min(1.0, ratio)  # relative to input Nyquist

    centers = np.arange(n_out) / ratio
    offsets = np.arange(-int(np.ceil(half)), int(np.ceil(half)) + 1)
    # (n_out, n_taps) gather with edge clamping; out-of-range taps get
    # zero weight via the window, clamped index values are harmless.
    idx = np.floor(centers)[:, None].astype(np.int64) + offsets[None, :]
    frac = idx - centers[:, None]
    kernel = cutoff * np.sinc(cutoff * frac) * _kaiser(frac / half, beta)
    kernel[(idx < 0) | (idx >= n_in)] = 0.0
    norm = kernel.sum(axis=1, keepdims=True)
    norm[norm == 0.0] = 1.0
    kernel /= norm
    y = np.einsum("ij,ij->i", kernel, x[np.clip(idx, 0, n_in - 1)])

    return Waveform(samples=y, sample_rate=target_rate, source_id=w.source_id)


def standardize(w: Waveform) -> Waveform:
    """Force exactly 5 s at 16 kHz: tile short clips, truncate long ones."""
    if w.sample_rate != TARGET_RATE:
        raise ValueError(f"standardize expects {TARGET_RATE} Hz input, got {w.sample_rate}")
    n = len(w.samples)
    if n == 0:
        raise EmptyAudioError(f"zero-length audio: {w.source_id}")
    if n == TARGET_SAMPLES:
        return w
    if n > TARGET_SAMPLES:
        samples = w.samples[:TARGET_SAMPLES]
    else:
        reps = -(-TARGET_SAMPLES // n)
        samples = np.tile(w.samples, reps)[:TARGET_SAMPLES]
    return Waveform(samples=samples, sample_rate=w.sample_rate, source_id=w.source_id)


def _mel_points(n_mels: int, n_fft: int, rate: int) -> np.ndarray:
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    mels = np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2.0), n_mels + 2)
    return mel_to_hz(mels)


def mel_filterbank(n_mels: int, n_fft: int, rate: int) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft // 2 + 1)."""
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / rate)
    pts = _mel_points(n_mels, n_fft, rate)
    fb = np.zeros((n_mels, len(freqs)))
    for m in range(n_mels):
        lo, mid, hi = pts[m], pts[m + 1], pts[m + 2]
        up = (freqs - lo) / (mid - lo)
        down = (hi - freqs) / (hi - mid)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def logmel(
    w: Waveform,
    n_mels: int = DEFAULT_N_MELS,
    frame_len: int = DEFAULT_FRAME_LEN,
    hop: int = DEFAULT_HOP,
) -> np.ndarray:
    """Deterministic log-mel energies, shape (num_frames, n_mels).

    Stands in for a pretrained extractor at desk scale: with the default
    configuration a standardized waveform maps to (249, 80).
    """
    n = len(w.samples)
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    if not (0 < hop <= frame_len <= n):
        raise ValueError(f"need 0 < hop <= frame_len <= {n}, got hop={hop} frame_len={frame_len}")

    num_frames = (n - frame_len) // hop + 1
    n_fft = 1
    while n_fft < frame_len:
        n_fft *= 2

    window = np.hanning(frame_len)
    starts = np.arange(num_frames) * hop
    frames = w.samples[starts[:, None] + np.arange(frame_len)] * window
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    fb = mel_filterbank(n_mels, n_fft, w.sample_rate)
    return np.log(power @ fb.T + LOG_EPS)
