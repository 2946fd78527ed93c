import assert from "node:assert/strict";
import { test } from "node:test";

import {
  EMBEDDING_DIM,
  coverageScore,
  createOfflineBackend,
  embedText,
  spanScore,
} from "../src/offline.js";
import { contentTerms, tokenize } from "../src/text.js";

function cosine(a: Float64Array, b: Float64Array): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / Math.sqrt(na * nb);
}

test("tokenize strips punctuation and lowercases", () => {
  assert.deepEqual(tokenize("Fire, spreads... NORTH!"), ["fire", "spreads", "north"]);
  assert.deepEqual(tokenize("  "), []);
});

test("contentTerms drops question scaffolding", () => {
  assert.deepEqual(contentTerms("What is the evacuation zone?"),
    ["evacuation", "zone"]);
});

test("embedding is 768-dim and unit-norm", () => {
  const { vector } = embedText("river levels rising near the bridge");
  assert.equal(vector.length, EMBEDDING_DIM);
  let norm = 0;
  for (const x of vector) norm += x * x;
  assert.ok(Math.abs(Math.sqrt(norm) - 1.0) < 1e-9);
});

test("identical texts embed identically", () => {
  const a = embedText("shelter open at the fairgrounds").vector;
  const b = embedText("shelter open at the fairgrounds").vector;
  assert.deepEqual(Array.from(a), Array.from(b));
});

test("empty string still embeds with a flag", () => {
  const r = embedText("");
  assert.equal(r.empty, true);
  assert.equal(r.vector.length, EMBEDDING_DIM);
  // frozen fixture: the empty-sequence embedding is a fixed vector
  const first5 = Array.from(r.vector.slice(0, 5)).map((x) => x.toPrecision(6));
  assert.deepEqual(first5,
    ["0.0457584", "-0.0242321", "-0.0341587", "0.0527039", "0.00469132"]);
});

test("near-duplicates stay close, disjoint vocab near-orthogonal", () => {
  const a = embedText("fire spreads north of the ridge").vector;
  const near = embedText("fire spreads north of the ridge tonight").vector;
  const far = embedText("quarterly earnings beat analyst estimates").vector;
  assert.ok(cosine(a, near) > 0.8);
  assert.ok(Math.abs(cosine(a, far)) < 0.2);
});

test("long texts truncate with a flag", () => {
  const long = Array.from({ length: 500 }, (_, i) => `w${i}`).join(" ");
  const r = embedText(long, 384);
  assert.equal(r.truncated, true);
  const head = embedText(Array.from({ length: 384 }, (_, i) => `w${i}`).join(" "), 384);
  assert.deepEqual(Array.from(r.vector), Array.from(head.vector));
});

test("coverage and span scores on a verbatim answer", () => {
  const text = "officials said the evacuation zone covers nine blocks downtown";
  assert.equal(coverageScore("Where is the evacuation zone?", text), 1);
  assert.equal(spanScore("Where is the evacuation zone?", text), 1);
});

test("disjoint vocabulary yields no answer", async () => {
  const backend = createOfflineBackend();
  const { confA, confB } = await backend.qaScore(
    "What is the evacuation zone?", "quarterly earnings beat analyst estimates");
  assert.equal(confA, 0);
  assert.equal(confB, 0);
});

test("partial overlap scores between 0 and the threshold", async () => {
  const backend = createOfflineBackend();
  const { confA, confB } = await backend.qaScore(
    "Where is the evacuation zone tonight?",
    "the zone remains closed");
  assert.ok(confA > 0 && confA < 0.8, `confA=${confA}`);
  assert.ok(confB > 0 && confB < 0.8, `confB=${confB}`);
});
