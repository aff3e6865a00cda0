/**
 * Frozen extractor backends. Each extractor tag maps to a pretrained
 * checkpoint and a declared output shape; the export pipeline refuses
 * any output that deviates from the declaration.
 *
 * Whisper-family extractors emit the final encoder hidden states as a
 * single (1500, D) matrix. Wav2Vec2-family extractors emit the full
 * per-layer hidden-state stack as (L, 249, D) so the training side can
 * learn its own layer weighting.
 */

export interface ExtractorSpec {
  tag: string;
  modelId: string;
  kind: "whisper" | "wav2vec2";
  rows: number;
  cols: number;
}

export const EXTRACTOR_SPECS: Record<string, ExtractorSpec> = {
  "whisper-tiny": { tag: "whisper-tiny", modelId: "openai/whisper-tiny", kind: "whisper", rows: 1500, cols: 384 },
  "whisper-base": { tag: "whisper-base", modelId: "openai/whisper-base", kind: "whisper", rows: 1500, cols: 512 },
  "whisper-small": { tag: "whisper-small", modelId: "openai/whisper-small", kind: "whisper", rows: 1500, cols: 768 },
  "whisper-medium": { tag: "whisper-medium", modelId: "openai/whisper-medium", kind: "whisper", rows: 1500, cols: 1024 },
  "whisper-large": { tag: "whisper-large", modelId: "openai/whisper-large", kind: "whisper", rows: 1500, cols: 1280 },
  "wav2vec2-base": { tag: "wav2vec2-base", modelId: "facebook/wav2vec2-base", kind: "wav2vec2", rows: 249, cols: 768 },
  "wav2vec2-large": { tag: "wav2vec2-large", modelId: "facebook/wav2vec2-large", kind: "wav2vec2", rows: 249, cols: 1024 },
  "wav2vec2-xls-r": { tag: "wav2vec2-xls-r", modelId: "facebook/wav2vec2-xls-r-300m", kind: "wav2vec2", rows: 249, cols: 1024 },
};

/**
 * One extractor run on a standardized 16 kHz / 5 s waveform. `layers`
 * holds row-major (rows x cols) matrices; a single entry means the
 * output is written as EMB1, multiple entries as an EMBS stack.
 */
export interface ExtractorOutput {
  layers: Float32Array[];
  rows: number;
  cols: number;
}

export interface Extractor {
  readonly spec: ExtractorSpec;
  /** Model revision actually loaded, recorded in the export report. */
  readonly revision: string;
  extract(samples: Float64Array): Promise<ExtractorOutput>;
}

/** Extractor backed by transformers.js. Downloads weights on first use. */
export class TransformersExtractor implements Extractor {
  readonly spec: ExtractorSpec;
  readonly revision: string;
  /** Count the pre-transformer feature projection as a hidden layer. */
  readonly includeFeatureProjection: boolean;
  private model: any = null;
  private processor: any = null;

  constructor(spec: ExtractorSpec, revision = "main", includeFeatureProjection = false) {
    this.spec = spec;
    this.revision = revision;
    this.includeFeatureProjection = includeFeatureProjection;
  }

  private async load(): Promise<void> {
    if (this.model !== null) return;
    // Optional dependency: its native-runtime install step needs network
    // access, so offline installs skip it and only mock extractors work.
    const moduleName = "@huggingface/transformers";
    let hf: any;
    try {
      hf = await import(/* @vite-ignore */ moduleName);
    } catch {
      throw new Error(
        `${moduleName} is not installed; reinstall with network access to run real checkpoints`,
      );
    }
    const opts = { revision: this.revision };
    this.processor = await hf.AutoProcessor.from_pretrained(this.spec.modelId, opts);
    this.model = await hf.AutoModel.from_pretrained(this.spec.modelId, opts);
  }

  async extract(samples: Float64Array): Promise<ExtractorOutput> {
    await this.load();
    const audio = Float32Array.from(samples);
    const inputs = await this.processor(audio, { sampling_rate: 16000 });
    if (this.spec.kind === "whisper") {
      const out = await this.model.encoder(inputs);
      return tensorToOutput([out.last_hidden_state]);
    }
    const out = await this.model({ ...inputs, output_hidden_states: true });
    // hidden_states[0] is the feature projection output; transformer
    // blocks follow. Drop it unless explicitly requested.
    const states = this.includeFeatureProjection ? out.hidden_states : out.hidden_states.slice(1);
    return tensorToOutput(states);
  }
}

/** Flatten transformers.js tensors (1, T, D) into row-major layers. */
function tensorToOutput(tensors: any[]): ExtractorOutput {
  const layers: Float32Array[] = [];
  let rows = 0;
  let cols = 0;
  for (const t of tensors) {
    const [batch, T, D] = t.dims.length === 3 ? t.dims : [1, ...t.dims];
    if (batch !== 1) throw new Error(`expected batch size 1, got ${batch}`);
    rows = T;
    cols = D;
    layers.push(Float32Array.from(t.data));
  }
  return { layers, rows, cols };
}

export function getSpec(tag: string): ExtractorSpec {
  const spec = EXTRACTOR_SPECS[tag];
  if (spec === undefined) {
    throw new Error(`unknown extractor tag ${tag}; known: ${Object.keys(EXTRACTOR_SPECS).join(", ")}`);
  }
  return spec;
}
