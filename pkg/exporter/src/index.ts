export { decodeWav, WavError, type Wave } from "./wav.js";
export { prepare, resample, standardize, TARGET_RATE, TARGET_SAMPLES } from "./preprocess.js";
export {
  decodeEmb1,
  decodeEmbs,
  Emb1FormatError,
  encodeEmb1,
  encodeEmbs,
  type EmbeddingMatrix,
  type LayerStack,
} from "./emb1.js";
export { ManifestError, parseManifest, type Utterance } from "./manifest.js";
export {
  EXTRACTOR_SPECS,
  getSpec,
  TransformersExtractor,
  type Extractor,
  type ExtractorOutput,
  type ExtractorSpec,
} from "./extractor.js";
export {
  encodeOutput,
  exportManifest,
  outputTag,
  ShapeDeviationError,
  type ExportOptions,
  type ExportReport,
} from "./export.js";
