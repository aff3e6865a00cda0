import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { encodeOutput } from "../src/export.js";
import { getSpec } from "../src/extractor.js";

/**
 * Cross-language bridge: files this exporter writes must load in the
 * Python training harness and score finitely. Skipped when the harness
 * is not importable (e.g. the exporter is checked out standalone).
 */

function harnessAvailable(): boolean {
  try {
    execFileSync("python3", ["-c", "import spoofkit"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

describe.skipIf(!harnessAvailable())("harness interop", () => {
  it("a mock wav2vec2-base export scores finitely through the harness", () => {
    const spec = getSpec("wav2vec2-base");
    const layers: Float32Array[] = [];
    for (let l = 0; l < 3; l++) {
      const data = new Float32Array(spec.rows * spec.cols);
      for (let i = 0; i < data.length; i++) data[i] = Math.fround(Math.sin(l + i * 1e-3));
      layers.push(data);
    }
    const tag = "wav2vec2-base@fixed";
    const blob = encodeOutput({ layers, rows: spec.rows, cols: spec.cols }, tag);

    const dir = mkdtempSync(join(tmpdir(), "spoofkit-bridge-"));
    const file = join(dir, "u0.embs");
    writeFileSync(file, blob);

    const script = `
import json
from spoofkit.data import Utterance
from spoofkit.embedding import FileProvider
from spoofkit.head import Wav2VecArch, forward, init_head

u = Utterance(id="u0", path=${JSON.stringify(file)}, label=1, dataset="demo", partition="eval")
stack = FileProvider(extractor_tag=${JSON.stringify(tag)}).provide(u)
model = init_head(Wav2VecArch(input_dim=stack.values.shape[2], num_layers=stack.num_layers), seed=0)
pred = forward(model, stack)
print(json.dumps({"score": float(pred.score), "layers": int(stack.num_layers)}))
`;
    const out = JSON.parse(execFileSync("python3", ["-c", script], { encoding: "utf-8" }));
    expect(out.layers).toBe(3);
    expect(Number.isFinite(out.score)).toBe(true);
    expect(out.score).toBeGreaterThanOrEqual(0);
    expect(out.score).toBeLessThanOrEqual(1);
  });
});
