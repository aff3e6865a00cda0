/**
 * EMB1 / EMBS embedding container formats.
 *
 * EMB1: magic "EMB1"; u32 rows; u32 cols; u32 tag_len; tag_len bytes of
 * UTF-8 extractor tag; rows*cols float32 values, row-major. All integers
 * little-endian. EMBS stacks per-layer matrices: magic "EMBS"; u32 layer
 * count; that many EMB1 payloads back to back.
 */

export class Emb1FormatError extends Error {}

export interface EmbeddingMatrix {
  /** Row-major (rows x cols) values. */
  data: Float32Array;
  rows: number;
  cols: number;
  tag: string;
}

export interface LayerStack {
  layers: EmbeddingMatrix[];
}

export function encodeEmb1(m: EmbeddingMatrix): Buffer {
  if (m.rows < 1 || m.cols < 1) {
    throw new Emb1FormatError(`invalid shape ${m.rows}x${m.cols}`);
  }
  if (m.data.length !== m.rows * m.cols) {
    throw new Emb1FormatError(`payload length ${m.data.length} != ${m.rows}*${m.cols}`);
  }
  for (let i = 0; i < m.data.length; i++) {
    if (!Number.isFinite(m.data[i])) {
      throw new Emb1FormatError(`non-finite value at index ${i}`);
    }
  }
  const tag = Buffer.from(m.tag, "utf-8");
  const header = Buffer.alloc(16);
  header.write("EMB1", 0, "ascii");
  header.writeUInt32LE(m.rows, 4);
  header.writeUInt32LE(m.cols, 8);
  header.writeUInt32LE(tag.length, 12);
  const payload = Buffer.alloc(m.data.length * 4);
  for (let i = 0; i < m.data.length; i++) payload.writeFloatLE(m.data[i], i * 4);
  return Buffer.concat([header, tag, payload]);
}

/** Decode one EMB1 record starting at `offset`; returns the matrix and end offset. */
function decodeEmb1At(buf: Buffer, offset: number): [EmbeddingMatrix, number] {
  if (buf.length - offset < 16) throw new Emb1FormatError("truncated EMB1 header");
  if (buf.toString("ascii", offset, offset + 4) !== "EMB1") {
    throw new Emb1FormatError("bad EMB1 magic");
  }
  const rows = buf.readUInt32LE(offset + 4);
  const cols = buf.readUInt32LE(offset + 8);
  const tagLen = buf.readUInt32LE(offset + 12);
  if (rows < 1 || cols < 1) throw new Emb1FormatError(`invalid shape ${rows}x${cols}`);
  const payloadStart = offset + 16 + tagLen;
  const end = payloadStart + rows * cols * 4;
  if (buf.length < end) throw new Emb1FormatError("truncated EMB1 payload");
  const tag = buf.toString("utf-8", offset + 16, payloadStart);
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    const v = buf.readFloatLE(payloadStart + i * 4);
    if (!Number.isFinite(v)) throw new Emb1FormatError(`non-finite value at index ${i}`);
    data[i] = v;
  }
  return [{ data, rows, cols, tag }, end];
}

export function decodeEmb1(buf: Buffer): EmbeddingMatrix {
  const [m, end] = decodeEmb1At(buf, 0);
  if (end !== buf.length) throw new Emb1FormatError("trailing bytes after EMB1 payload");
  return m;
}

export function encodeEmbs(s: LayerStack): Buffer {
  if (s.layers.length < 1) throw new Emb1FormatError("layer stack must be non-empty");
  const first = s.layers[0];
  for (const layer of s.layers) {
    if (layer.rows !== first.rows || layer.cols !== first.cols || layer.tag !== first.tag) {
      throw new Emb1FormatError("layer stack requires uniform shapes and tags");
    }
  }
  const header = Buffer.alloc(8);
  header.write("EMBS", 0, "ascii");
  header.writeUInt32LE(s.layers.length, 4);
  return Buffer.concat([header, ...s.layers.map(encodeEmb1)]);
}

export function decodeEmbs(buf: Buffer): LayerStack {
  if (buf.length < 8) throw new Emb1FormatError("truncated EMBS header");
  if (buf.toString("ascii", 0, 4) !== "EMBS") throw new Emb1FormatError("bad EMBS magic");
  const count = buf.readUInt32LE(4);
  if (count < 1) throw new Emb1FormatError("layer stack must be non-empty");
  const layers: EmbeddingMatrix[] = [];
  let offset = 8;
  for (let i = 0; i < count; i++) {
    const [m, end] = decodeEmb1At(buf, offset);
    layers.push(m);
    offset = end;
  }
  if (offset !== buf.length) throw new Emb1FormatError("trailing bytes after EMBS payload");
  const first = layers[0];
  for (const layer of layers) {
    if (layer.rows !== first.rows || layer.cols !== first.cols || layer.tag !== first.tag) {
      throw new Emb1FormatError("layer stack requires uniform shapes and tags");
    }
  }
  return { layers };
}
