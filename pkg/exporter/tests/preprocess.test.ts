import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { prepare, resample, standardize, TARGET_SAMPLES } from "../src/preprocess.js";
import { decodeWav, WavError } from "../src/wav.js";

const FIXTURES = join(__dirname, "fixtures");
const CASES: Record<string, { rate: number; resampled: boolean }> = JSON.parse(
  readFileSync(join(FIXTURES, "cases.json"), "utf-8"),
);

function readF64(name: string): Float64Array {
  const buf = readFileSync(join(FIXTURES, `${name}.f64`));
  return new Float64Array(buf.buffer, buf.byteOffset, buf.length / 8);
}

function makeWav(opts: {
  rate?: number;
  channels?: number;
  bits?: number;
  format?: number;
  frames: number[][];
}): Buffer {
  const { rate = 16000, channels = 1, bits = 16, format = 1 } = opts;
  const bytesPer = bits / 8;
  const data = Buffer.alloc(opts.frames.length * channels * bytesPer);
  let pos = 0;
  for (const frame of opts.frames) {
    for (const v of frame) {
      if (format === 3) data.writeFloatLE(v, pos);
      else if (bits === 16) data.writeInt16LE(v, pos);
      else if (bits === 32) data.writeInt32LE(v, pos);
      else if (bits === 24) {
        data[pos] = v & 0xff;
        data[pos + 1] = (v >> 8) & 0xff;
        data[pos + 2] = (v >> 16) & 0xff;
      } else data[pos] = v;
      pos += bytesPer;
    }
  }
  const fmt = Buffer.alloc(16);
  fmt.writeUInt16LE(format, 0);
  fmt.writeUInt16LE(channels, 2);
  fmt.writeUInt32LE(rate, 4);
  fmt.writeUInt32LE(rate * channels * bytesPer, 8);
  fmt.writeUInt16LE(channels * bytesPer, 12);
  fmt.writeUInt16LE(bits, 14);
  const out = Buffer.alloc(12 + 8 + 16 + 8 + data.length);
  out.write("RIFF", 0, "ascii");
  out.writeUInt32LE(out.length - 8, 4);
  out.write("WAVE", 8, "ascii");
  out.write("fmt ", 12, "ascii");
  out.writeUInt32LE(16, 16);
  fmt.copy(out, 20);
  out.write("data", 36, "ascii");
  out.writeUInt32LE(data.length, 40);
  data.copy(out, 44);
  return out;
}

describe("WAV decoding", () => {
  it("scales int16 by 1/32768", () => {
    const w = decodeWav(makeWav({ frames: [[16384], [-32768]] }));
    expect(w.samples[0]).toBe(0.5);
    expect(w.samples[1]).toBe(-1);
  });

  it("scales uint8 with the 128 offset", () => {
    const w = decodeWav(makeWav({ bits: 8, frames: [[128], [0], [255]] }));
    expect(w.samples[0]).toBe(0);
    expect(w.samples[1]).toBe(-1);
    expect(w.samples[2]).toBeCloseTo(127 / 128, 15);
  });

  it("scales int24 by 1/2^23", () => {
    const w = decodeWav(makeWav({ bits: 24, frames: [[4194304], [-8388608]] }));
    expect(w.samples[0]).toBe(0.5);
    expect(w.samples[1]).toBe(-1);
  });

  it("clips float payloads to [-1, 1]", () => {
    const w = decodeWav(makeWav({ bits: 32, format: 3, frames: [[1.5], [-0.25]] }));
    expect(w.samples[0]).toBe(1);
    expect(w.samples[1]).toBe(-0.25);
  });

  it("averages stereo to mono", () => {
    const w = decodeWav(makeWav({ channels: 2, frames: [[16384, -16384]] }));
    expect(w.samples[0]).toBe(0);
  });

  it("rejects garbage, unsupported encodings, and empty payloads", () => {
    expect(() => decodeWav(Buffer.from("not a wav file, really"))).toThrow(WavError);
    expect(() => decodeWav(makeWav({ format: 6, frames: [[0]] }))).toThrow(/encoding/);
    expect(() => decodeWav(makeWav({ frames: [] }))).toThrow(/zero-length/);
  });
});

describe("standardize", () => {
  it("tiles short clips by repetition", () => {
    const samples = new Float64Array([0.1, 0.2, 0.3]);
    const out = standardize({ samples, sampleRate: 16000 });
    expect(out.samples.length).toBe(TARGET_SAMPLES);
    expect(out.samples[3]).toBe(0.1);
    expect(out.samples[TARGET_SAMPLES - 1]).toBe(samples[(TARGET_SAMPLES - 1) % 3]);
  });

  it("truncates long clips", () => {
    const samples = new Float64Array(TARGET_SAMPLES + 100).fill(0.5);
    samples[TARGET_SAMPLES - 1] = -0.5;
    const out = standardize({ samples, sampleRate: 16000 });
    expect(out.samples.length).toBe(TARGET_SAMPLES);
    expect(out.samples[TARGET_SAMPLES - 1]).toBe(-0.5);
  });

  it("passes exact-length input through unchanged", () => {
    const samples = new Float64Array(TARGET_SAMPLES).fill(0.25);
    const out = standardize({ samples, sampleRate: 16000 });
    expect(out.samples).toBe(samples);
  });

  it("rejects non-16 kHz input", () => {
    expect(() => standardize({ samples: new Float64Array(10), sampleRate: 8000 })).toThrow(/16000/);
  });
});

describe("resample", () => {
  it("is a pass-through at equal rates", () => {
    const samples = new Float64Array([0.1, -0.2]);
    const w = { samples, sampleRate: 16000 };
    expect(resample(w, 16000)).toBe(w);
  });

  it("preserves a constant signal away from the edges", () => {
    const samples = new Float64Array(4000).fill(0.5);
    const out = resample({ samples, sampleRate: 8000 }, 16000);
    expect(out.samples.length).toBe(8000);
    for (let i = 200; i < 7800; i++) {
      expect(out.samples[i]).toBeCloseTo(0.5, 9);
    }
  });
});

describe("parity with the harness preprocessing", () => {
  for (const [name, info] of Object.entries(CASES)) {
    it(`matches the reference waveform for ${name}`, () => {
      const wav = decodeWav(readFileSync(join(FIXTURES, `${name}.wav`)));
      expect(wav.sampleRate).toBe(info.rate);
      const got = prepare(wav).samples;
      const want = readF64(name);
      expect(got.length).toBe(want.length);
      if (!info.resampled) {
        // No-resample path must be bit-exact.
        for (let i = 0; i < got.length; i++) {
          if (got[i] !== want[i]) {
            throw new Error(`sample ${i}: ${got[i]} != ${want[i]}`);
          }
        }
      } else {
        let worst = 0;
        for (let i = 0; i < got.length; i++) {
          worst = Math.max(worst, Math.abs(got[i] - want[i]));
        }
        expect(worst).toBeLessThan(1e-9);
      }
    });
  }
});
