/** Deterministic offline backend.
 *
 * Embeddings: every token hashes (FNV-1a) to a seeded pseudo-random
 * direction; a text embeds as the L2-normalized sum of its unigram and
 * bigram directions, so identical texts embed identically, copies with
 * small edits stay close, and disjoint vocabularies land near-orthogonal.
 *
 * QA confidence: two graded lexical scorers standing in for the two
 * extractive readers. Scorer A measures query-term coverage in the text;
 * scorer B blends coverage with the longest in-order run of query terms
 * (span evidence). A verbatim answer span scores 1.0 on both; a query with
 * no vocabulary overlap scores 0 ("no answer").
 *
 * Pretrained-transformer inference is deliberately not bundled: this
 * backend is the reproducible default, and a model-backed implementation
 * can replace it behind the same AnnotationBackend interface.
 */
import { contentTerms, tokenize } from "./text.js";
import type { AnnotationBackend } from "./types.js";

export const EMBEDDING_DIM = 768;

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** mulberry32: small deterministic PRNG, one stream per token hash. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const directionCache = new Map<string, Float64Array>();

function tokenDirection(token: string): Float64Array {
  let dir = directionCache.get(token);
  if (dir !== undefined) return dir;
  const rand = mulberry32(fnv1a(token));
  dir = new Float64Array(EMBEDDING_DIM);
  for (let i = 0; i < EMBEDDING_DIM; i++) dir[i] = 2.0 * rand() - 1.0;
  directionCache.set(token, dir);
  return dir;
}

export function embedText(text: string, maxTokens = 384): {
  vector: Float64Array;
  empty: boolean;
  truncated: boolean;
} {
  let tokens = tokenize(text);
  const truncated = tokens.length > maxTokens;
  if (truncated) tokens = tokens.slice(0, maxTokens);
  const v = new Float64Array(EMBEDDING_DIM);
  const empty = tokens.length === 0;
  if (empty) tokens = ["[empty]"];
  for (const tok of tokens) {
    const d = tokenDirection(tok);
    for (let i = 0; i < EMBEDDING_DIM; i++) v[i] += d[i];
  }
  for (let k = 0; k + 1 < tokens.length; k++) {
    const d = tokenDirection(tokens[k] + " " + tokens[k + 1]);
    for (let i = 0; i < EMBEDDING_DIM; i++) v[i] += 0.5 * d[i];
  }
  let norm = 0;
  for (let i = 0; i < EMBEDDING_DIM; i++) norm += v[i] * v[i];
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < EMBEDDING_DIM; i++) v[i] /= norm;
  }
  return { vector: v, empty, truncated };
}

/** Fraction of distinct query content terms present in the text. */
export function coverageScore(query: string, text: string): number {
  const terms = new Set(contentTerms(query));
  if (terms.size === 0) return 0;
  const have = new Set(contentTerms(text));
  let hit = 0;
  for (const t of terms) if (have.has(t)) hit++;
  return hit / terms.size;
}

/** Longest run of query content terms appearing in order and adjacently
 * in the text, as a fraction of the query's content terms. */
export function spanScore(query: string, text: string): number {
  const terms = contentTerms(query);
  if (terms.length === 0) return 0;
  const termSet = new Set(terms);
  const toks = contentTerms(text);
  let best = 0;
  let run = 0;
  for (const tok of toks) {
    run = termSet.has(tok) ? run + 1 : 0;
    if (run > best) best = run;
  }
  return Math.min(1, best / terms.length);
}

export function createOfflineBackend(maxTokens = 384): AnnotationBackend {
  return {
    name: "offline-lexical",
    embeddingDim: EMBEDDING_DIM,
    async embed(texts: string[]): Promise<Float64Array[]> {
      return texts.map((t) => embedText(t, maxTokens).vector);
    },
    async qaScore(query: string, text: string) {
      const cov = coverageScore(query, text);
      if (cov === 0) return { confA: 0, confB: 0 }; // no answer
      const span = spanScore(query, text);
      return { confA: cov, confB: 0.6 * cov + 0.4 * span };
    },
  };
}
