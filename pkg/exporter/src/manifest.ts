/**
 * Dataset manifest CSV: header `id,path,label,dataset,partition`, one
 * utterance per row. Labels are 0 (real) / 1 (fake); partitions are
 * train / dev / eval.
 */

export class ManifestError extends Error {}

export const MANIFEST_HEADER = ["id", "path", "label", "dataset", "partition"] as const;
export const PARTITIONS = new Set(["train", "dev", "eval"]);

export interface Utterance {
  id: string;
  path: string;
  label: 0 | 1;
  dataset: string;
  partition: string;
}

/** RFC-4180-enough CSV line splitter (quoted fields, doubled quotes). */
function splitCsvLine(line: string): string[] {
  const fields: string[] = [];
  let cur = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          cur += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      fields.push(cur);
      cur = "";
    } else {
      cur += ch;
    }
  }
  fields.push(cur);
  return fields;
}

export function parseManifest(text: string): Utterance[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new ManifestError("empty manifest");
  const header = splitCsvLine(lines[0]);
  if (header.join(",") !== MANIFEST_HEADER.join(",")) {
    throw new ManifestError(`bad header: expected ${MANIFEST_HEADER.join(",")}, got ${lines[0]}`);
  }
  const seen = new Map<string, number>();
  const out: Utterance[] = [];
  for (let i = 1; i < lines.length; i++) {
    const row = splitCsvLine(lines[i]);
    if (row.length !== MANIFEST_HEADER.length) {
      throw new ManifestError(`row ${i + 1}: expected ${MANIFEST_HEADER.length} columns, got ${row.length}`);
    }
    const [id, path, labelStr, dataset, partition] = row;
    if (labelStr !== "0" && labelStr !== "1") {
      throw new ManifestError(`row ${i + 1}: label must be 0 or 1, got ${labelStr}`);
    }
    if (!PARTITIONS.has(partition)) {
      throw new ManifestError(`row ${i + 1}: unknown partition ${partition}`);
    }
    const prev = seen.get(id);
    if (prev !== undefined) {
      throw new ManifestError(`duplicate utterance id ${id} (rows ${prev} and ${i + 1})`);
    }
    seen.set(id, i + 1);
    out.push({ id, path, label: labelStr === "1" ? 1 : 0, dataset, partition });
  }
  return out;
}
