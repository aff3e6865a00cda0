/**
 * Waveform preprocessing: Kaiser windowed-sinc resampling to 16 kHz and
 * tile/truncate standardization to exactly 5 s (80000 samples). The
 * numerics mirror the harness so exported embeddings line up with what
 * the training side would compute from the same audio.
 */

import { Wave, WavError } from "./wav.js";

export const TARGET_RATE = 16000;
export const TARGET_SAMPLES = TARGET_RATE * 5;

/** Modified Bessel function of the first kind, order zero (power series). */
function besselI0(x: number): number {
  // Converges quickly for the argument range the Kaiser window uses
  // (|x| <= beta = 8): ~30 terms reach double precision.
  const t = (x / 2) * (x / 2);
  let sum = 1;
  let term = 1;
  for (let k = 1; k < 64; k++) {
    term *= t / (k * k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

function sinc(x: number): number {
  if (x === 0) return 1;
  const px = Math.PI * x;
  return Math.sin(px) / px;
}

/**
 * Windowed-sinc resampling (Kaiser window, beta 8, 32 taps at the lower
 * of the two rates). Equal rates are a bit-exact pass-through.
 */
export function resample(w: Wave, targetRate: number, beta = 8.0, taps = 32): Wave {
  if (w.sampleRate <= 0) throw new RangeError(`invalid sample rate ${w.sampleRate}`);
  if (targetRate <= 0) throw new RangeError(`invalid target rate ${targetRate}`);
  if (targetRate === w.sampleRate) return w;

  const x = w.samples;
  const nIn = x.length;
  const ratio = targetRate / w.sampleRate;
  const nOut = Math.round(nIn * ratio);

  // Half-width in input samples; widen when downsampling so the
  // anti-aliasing cutoff keeps `taps` taps at the output rate.
  const half = taps * Math.max(1, 1 / ratio);
  const cutoff = Math.min(1, ratio);
  const halfCeil = Math.ceil(half);
  const i0Beta = besselI0(beta);

  const y = new Float64Array(nOut);
  for (let i = 0; i < nOut; i++) {
    const center = i / ratio;
    const base = Math.floor(center);
    let acc = 0;
    let norm = 0;
    for (let o = -halfCeil; o <= halfCeil; o++) {
      const idx = base + o;
      if (idx < 0 || idx >= nIn) continue;
      const frac = idx - center;
      const u = frac / half;
      if (Math.abs(u) > 1) continue;
      const win = besselI0(beta * Math.sqrt(1 - u * u)) / i0Beta;
      const k = cutoff * sinc(cutoff * frac) * win;
      acc += k * x[idx];
      norm += k;
    }
    y[i] = norm === 0 ? 0 : acc / norm;
  }
  return { samples: y, sampleRate: targetRate };
}

/** Force exactly 5 s at 16 kHz: tile short clips, truncate long ones. */
export function standardize(w: Wave): Wave {
  if (w.sampleRate !== TARGET_RATE) {
    throw new RangeError(`standardize expects ${TARGET_RATE} Hz input, got ${w.sampleRate}`);
  }
  const n = w.samples.length;
  if (n === 0) throw new WavError("zero-length audio");
  if (n === TARGET_SAMPLES) return w;
  const out = new Float64Array(TARGET_SAMPLES);
  if (n > TARGET_SAMPLES) {
    out.set(w.samples.subarray(0, TARGET_SAMPLES));
  } else {
    for (let i = 0; i < TARGET_SAMPLES; i++) out[i] = w.samples[i % n];
  }
  return { samples: out, sampleRate: TARGET_RATE };
}

/** Load-to-model pipeline: resample to 16 kHz, then standardize. */
export function prepare(w: Wave): Wave {
  return standardize(resample(w, TARGET_RATE));
}
