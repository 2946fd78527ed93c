/** Shared tokenization for the offline embedder and QA scorers:
 * lowercase, split on whitespace, strip edge punctuation. */

const PUNCT = /^[\p{P}\p{S}]+|[\p{P}\p{S}]+$/gu;

export function tokenize(text: string): string[] {
  const out: string[] = [];
  for (const raw of text.toLowerCase().split(/\s+/)) {
    const tok = raw.replace(PUNCT, "");
    if (tok.length > 0) out.push(tok);
  }
  return out;
}

/** Question scaffolding and glue words carry no answer signal. */
export const STOPWORDS = new Set([
  "a", "an", "and", "about", "are", "at", "be", "by", "did", "do", "does",
  "for", "from", "how", "in", "is", "it", "of", "on", "or", "that", "the",
  "this", "to", "was", "were", "what", "when", "where", "which", "who", "why",
  "with",
]);

export function contentTerms(text: string): string[] {
  return tokenize(text).filter((t) => !STOPWORDS.has(t));
}
