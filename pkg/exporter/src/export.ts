/**
 * Batch export: run a frozen extractor over every utterance in a
 * manifest and write one embedding file per utterance, plus a JSON
 * report with shapes, checksums, the model revision, and any skipped
 * inputs. Audio failures are recorded and skipped; a shape that
 * deviates from the extractor's declared contract aborts the run,
 * since that is the signature of checkpoint-revision drift.
 */

import { createHash } from "node:crypto";
import { mkdirSync, readFileSync, renameSync, writeFileSync } from "node:fs";
import { dirname, isAbsolute, join, resolve } from "node:path";

import { encodeEmb1, encodeEmbs, EmbeddingMatrix } from "./emb1.js";
import { Extractor, ExtractorOutput } from "./extractor.js";
import { parseManifest, Utterance } from "./manifest.js";
import { prepare } from "./preprocess.js";
import { decodeWav, WavError } from "./wav.js";

export class ShapeDeviationError extends Error {}

export interface ExportedFile {
  id: string;
  file: string;
  rows: number;
  cols: number;
  layers: number;
  sha256: string;
}

export interface SkippedFile {
  id: string;
  reason: string;
}

export interface ExportReport {
  tag: string;
  modelId: string;
  revision: string;
  exported: ExportedFile[];
  skipped: SkippedFile[];
}

export interface ExportOptions {
  manifestPath: string;
  outDir: string;
  /** Base directory for relative audio paths; defaults to the manifest's directory. */
  audioRoot?: string;
}

/** Embed the revision in the tag so downstream numbers are attributable. */
export function outputTag(ex: Extractor): string {
  return `${ex.spec.tag}@${ex.revision}`;
}

function atomicWrite(path: string, data: Buffer | string): void {
  const tmp = join(dirname(path), `.tmp-${process.pid}-${Math.random().toString(36).slice(2)}`);
  writeFileSync(tmp, data);
  renameSync(tmp, path);
}

function checkShape(out: ExtractorOutput, ex: Extractor, id: string): void {
  if (out.rows !== ex.spec.rows || out.cols !== ex.spec.cols) {
    throw new ShapeDeviationError(
      `utterance ${id}: extractor ${ex.spec.tag} produced (${out.rows}, ${out.cols}), ` +
        `declared (${ex.spec.rows}, ${ex.spec.cols}) — suspect model-revision drift`,
    );
  }
  for (const layer of out.layers) {
    if (layer.length !== out.rows * out.cols) {
      throw new ShapeDeviationError(`utterance ${id}: layer payload length mismatch`);
    }
  }
}

export function encodeOutput(out: ExtractorOutput, tag: string): Buffer {
  const matrices: EmbeddingMatrix[] = out.layers.map((data) => ({
    data,
    rows: out.rows,
    cols: out.cols,
    tag,
  }));
  return matrices.length === 1 ? encodeEmb1(matrices[0]) : encodeEmbs({ layers: matrices });
}

export async function exportManifest(ex: Extractor, opts: ExportOptions): Promise<ExportReport> {
  const utterances = parseManifest(readFileSync(opts.manifestPath, "utf-8"));
  const audioRoot = opts.audioRoot ?? dirname(resolve(opts.manifestPath));
  mkdirSync(opts.outDir, { recursive: true });

  const tag = outputTag(ex);
  const report: ExportReport = {
    tag,
    modelId: ex.spec.modelId,
    revision: ex.revision,
    exported: [],
    skipped: [],
  };

  for (const u of utterances) {
    const audioPath = isAbsolute(u.path) ? u.path : join(audioRoot, u.path);
    let samples: Float64Array;
    try {
      const wav = decodeWav(readFileSync(audioPath));
      samples = prepare(wav).samples;
    } catch (err) {
      if (
        err instanceof WavError ||
        err instanceof RangeError ||
        (err as NodeJS.ErrnoException).code !== undefined
      ) {
        report.skipped.push({ id: u.id, reason: String((err as Error).message ?? err) });
        continue;
      }
      throw err;
    }

    const out = await ex.extract(samples);
    checkShape(out, ex, u.id);

    const blob = encodeOutput(out, tag);
    const ext = out.layers.length === 1 ? "emb1" : "embs";
    const file = join(opts.outDir, `${u.id}.${ext}`);
    atomicWrite(file, blob);
    report.exported.push({
      id: u.id,
      file,
      rows: out.rows,
      cols: out.cols,
      layers: out.layers.length,
      sha256: createHash("sha256").update(blob).digest("hex"),
    });
  }

  atomicWrite(join(opts.outDir, "export_report.json"), JSON.stringify(report, null, 2) + "\n");
  writeEmbeddingManifest(utterances, report, opts.outDir);
  return report;
}

/**
 * Emit a manifest the training harness can consume directly: same rows,
 * paths rewritten to the exported embedding files, skipped rows dropped.
 */
function writeEmbeddingManifest(utterances: Utterance[], report: ExportReport, outDir: string): void {
  const byId = new Map(report.exported.map((e) => [e.id, e]));
  const lines = ["id,path,label,dataset,partition"];
  for (const u of utterances) {
    const e = byId.get(u.id);
    if (e === undefined) continue;
    lines.push([u.id, e.file, String(u.label), u.dataset, u.partition].join(","));
  }
  atomicWrite(join(outDir, "manifest.csv"), lines.join("\n") + "\n");
}
