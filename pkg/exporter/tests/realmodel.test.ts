import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { exportManifest } from "../src/export.js";
import { getSpec, TransformersExtractor } from "../src/extractor.js";

const FIXTURES = join(__dirname, "fixtures");

// Real checkpoints come from the Hugging Face Hub, which this CI
// environment cannot reach. Set SPOOFKIT_REAL_MODELS=1 on a machine
// with network access (or a primed model cache) to run these.
const enabled = process.env.SPOOFKIT_REAL_MODELS === "1";

describe.skipIf(!enabled)("real checkpoint export", () => {
  it(
    "whisper-tiny yields (1500, 384) on three clips with stable checksums",
    { timeout: 600_000 },
    async () => {
      const workDir = mkdtempSync(join(tmpdir(), "spoofkit-real-"));
      const rows = ["id,path,label,dataset,partition"];
      for (const [i, name] of ["tone_16k_5s", "tone_16k_short", "tone_8k"].entries()) {
        rows.push(`clip${i},${join(FIXTURES, `${name}.wav`)},0,demo,eval`);
      }
      const manifestPath = join(workDir, "manifest.csv");
      writeFileSync(manifestPath, rows.join("\n") + "\n");

      const ex = new TransformersExtractor(getSpec("whisper-tiny"));
      const a = await exportManifest(ex, { manifestPath, outDir: join(workDir, "a") });
      expect(a.skipped).toHaveLength(0);
      expect(a.exported).toHaveLength(3);
      for (const e of a.exported) {
        expect([e.rows, e.cols]).toEqual([1500, 384]);
      }
      const b = await exportManifest(ex, { manifestPath, outDir: join(workDir, "b") });
      expect(b.exported.map((e) => e.sha256)).toEqual(a.exported.map((e) => e.sha256));
    },
  );

  it(
    "wav2vec2-base yields an (L, 249, 768) stack",
    { timeout: 600_000 },
    async () => {
      const workDir = mkdtempSync(join(tmpdir(), "spoofkit-real-"));
      const manifestPath = join(workDir, "manifest.csv");
      writeFileSync(
        manifestPath,
        ["id,path,label,dataset,partition", `c0,${join(FIXTURES, "tone_16k_5s.wav")},0,demo,eval`].join(
          "\n",
        ) + "\n",
      );
      const ex = new TransformersExtractor(getSpec("wav2vec2-base"));
      const report = await exportManifest(ex, { manifestPath, outDir: join(workDir, "out") });
      expect(report.exported[0].layers).toBeGreaterThan(1);
      expect([report.exported[0].rows, report.exported[0].cols]).toEqual([249, 768]);
    },
  );
});
