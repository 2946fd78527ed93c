export interface RawText {
  text_id: string;
  event_id: string;
  stream: string;
  unix_ts: number;
  day: string;
  text: string;
}

export interface QueryRow {
  event_id: string;
  query_id: string;
  text: string;
}

export interface ItemRow extends RawText {
  embedding: number[];
  sc: number;
}

export interface ConfidenceRow {
  text_id: string;
  query_id: string;
  conf_a: number;
  conf_b: number;
}

/** Pluggable model pair: a sentence embedder plus two QA scorers. */
export interface AnnotationBackend {
  name: string;
  embeddingDim: number;
  embed(texts: string[]): Promise<Float64Array[]>;
  /** Answer confidences in [0, 1] for (query, text); 0 means "no answer". */
  qaScore(query: string, text: string): Promise<{ confA: number; confB: number }>;
}

export interface AnnotateOptions {
  itemsPath: string;
  queriesPath: string;
  outDir: string;
  batchSize: number;
  threshold: number;
  maxTokens: number;
}

export interface AnnotateStats {
  texts: number;
  queries: number;
  pairs: number;
  countingPairs: number;
  emptyTexts: number;
  truncatedTexts: number;
}
