/**
 * Minimal PCM WAV (RIFF) reader: 8/16/24/32-bit integer and 32-bit
 * float encodings, multichannel averaged to mono. Scaling matches the
 * harness exactly (int16 / 32768, int24/int32 / 2^31, uint8 offset).
 */

export class WavError extends Error {}

export interface Wave {
  samples: Float64Array;
  sampleRate: number;
}

export function decodeWav(buf: Buffer): Wave {
  if (buf.length < 12 || buf.toString("ascii", 0, 4) !== "RIFF" || buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new WavError("not a RIFF/WAVE file");
  }
  let offset = 12;
  let fmt: { format: number; channels: number; rate: number; bits: number } | null = null;
  let data: Buffer | null = null;
  while (offset + 8 <= buf.length) {
    const id = buf.toString("ascii", offset, offset + 4);
    const size = buf.readUInt32LE(offset + 4);
    const body = buf.subarray(offset + 8, offset + 8 + size);
    if (id === "fmt ") {
      fmt = {
        format: body.readUInt16LE(0),
        channels: body.readUInt16LE(2),
        rate: body.readUInt32LE(4),
        bits: body.readUInt16LE(14),
      };
    } else if (id === "data") {
      data = body;
    }
    offset += 8 + size + (size % 2);
  }
  if (fmt === null || data === null) throw new WavError("missing fmt or data chunk");
  // WAVE_FORMAT_EXTENSIBLE carries the real format in the header tail;
  // treat it as its base format when the bit depth identifies it
  const format = fmt.format === 0xfffe ? (fmt.bits === 32 ? 3 : 1) : fmt.format;
  if (format !== 1 && format !== 3) {
    throw new WavError(`unsupported WAV encoding (format tag ${fmt.format})`);
  }

  const { channels, bits } = fmt;
  const bytesPer = bits / 8;
  const frames = Math.floor(data.length / (bytesPer * channels));
  if (frames === 0) throw new WavError("zero-length audio");

  const out = new Float64Array(frames);
  for (let i = 0; i < frames; i++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) {
      const pos = (i * channels + c) * bytesPer;
      let v: number;
      if (format === 3) {
        v = Math.min(1, Math.max(-1, data.readFloatLE(pos)));
      } else if (bits === 16) {
        v = data.readInt16LE(pos) / 32768;
      } else if (bits === 32) {
        v = data.readInt32LE(pos) / 2147483648;
      } else if (bits === 24) {
        const raw = data[pos] | (data[pos + 1] << 8) | (data[pos + 2] << 16);
        v = ((raw << 8) >> 8) / 8388608;
      } else if (bits === 8) {
        v = (data[pos] - 128) / 128;
      } else {
        throw new WavError(`unsupported PCM bit depth ${bits}`);
      }
      acc += v;
    }
    out[i] = acc / channels;
  }
  return { samples: out, sampleRate: fmt.rate };
}
