#!/usr/bin/env node
/**
 * spoofkit-export: run a pretrained ASR checkpoint over a manifest and
 * write EMB1/EMBS embedding files plus an export report.
 *
 *   spoofkit-export --manifest data/manifest.csv --extractor whisper-base --out embeddings/
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportManifest, ShapeDeviationError } from "./export.js";
import { EXTRACTOR_SPECS, getSpec, TransformersExtractor } from "./extractor.js";
import { ManifestError } from "./manifest.js";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName("spoofkit-export")
    .option("manifest", { type: "string", demandOption: true, describe: "utterance manifest CSV" })
    .option("extractor", {
      type: "string",
      demandOption: true,
      choices: Object.keys(EXTRACTOR_SPECS),
      describe: "extractor tag",
    })
    .option("out", { type: "string", demandOption: true, describe: "output directory" })
    .option("revision", { type: "string", default: "main", describe: "model revision to pin" })
    .option("audio-root", { type: "string", describe: "base directory for relative audio paths" })
    .option("include-feature-projection", {
      type: "boolean",
      default: false,
      describe: "count the wav2vec2 feature projection as a hidden layer",
    })
    .strict()
    .help()
    .parse();

  const ex = new TransformersExtractor(
    getSpec(argv.extractor),
    argv.revision,
    argv["include-feature-projection"],
  );
  try {
    const report = await exportManifest(ex, {
      manifestPath: argv.manifest,
      outDir: argv.out,
      audioRoot: argv["audio-root"],
    });
    console.log(
      `exported ${report.exported.length} utterance(s), skipped ${report.skipped.length}` +
        ` [${report.tag}]`,
    );
    return 0;
  } catch (err) {
    if (err instanceof ManifestError) {
      console.error(`manifest error: ${err.message}`);
      return 3;
    }
    if (err instanceof ShapeDeviationError) {
      console.error(`shape deviation: ${err.message}`);
      return 4;
    }
    throw err;
  }
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err);
    process.exit(1);
  },
);
