/** End-to-end annotator checks, including the acceptance criterion:
 * 20-text fixture with planted verbatim answers -> every planted pair
 * clears the dual 0.80 threshold, every disjoint-vocabulary pair fails,
 * the emitted corpus validates cleanly, and a rerun is byte-identical.
 */
import assert from "node:assert/strict";
import { execFileSync, spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { annotate } from "../src/annotate.js";
import { createOfflineBackend } from "../src/offline.js";
import { readJsonl, writeJsonl } from "../src/jsonl.js";
import type { ConfidenceRow, ItemRow } from "../src/types.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const CLI = path.join(HERE, "..", "src", "cli.js");

const DAY = "2021-06-01";
const DAY_TS = Date.UTC(2021, 5, 1) / 1000;

interface Fixture {
  dir: string;
  planted: Array<{ text_id: string; query_id: string }>;
  disjoint: Array<{ text_id: string; query_id: string }>;
}

/** 20 texts: 8 carry a verbatim answer span for one query each; 12 are
 * background chatter with vocabulary disjoint from every query. */
function buildFixture(root: string): Fixture {
  const topics = [
    ["evacuation", "zone", "nine"],
    ["shelter", "fairground", "gate"],
    ["highway", "closure", "southbound"],
    ["water", "level", "bridge"],
    ["power", "outage", "substation"],
    ["wind", "gusts", "ridge"],
    ["smoke", "plume", "valley"],
    ["rescue", "crews", "staging"],
  ];
  const backgroundWords = [
    "gadget", "review", "camera", "lens", "battery", "firmware",
    "recipe", "pasta", "garlic", "basil", "oven", "simmer",
  ];
  const queries = topics.map((words, i) => ({
    event_id: "ev1",
    query_id: `q${String(i).padStart(2, "0")}`,
    text: `What about the ${words.join(" ")}?`,
  }));
  const texts: Array<Record<string, unknown>> = [];
  const planted: Fixture["planted"] = [];
  const disjoint: Fixture["disjoint"] = [];
  topics.forEach((words, i) => {
    const tid = `t${String(i).padStart(2, "0")}`;
    texts.push({
      text_id: tid, event_id: "ev1", stream: "twitter",
      unix_ts: DAY_TS + i, day: DAY,
      text: `update confirms ${words.join(" ")} as of noon`,
    });
    planted.push({ text_id: tid, query_id: queries[i].query_id });
  });
  for (let i = 0; i < 12; i++) {
    const tid = `t${String(8 + i).padStart(2, "0")}`;
    const w = backgroundWords;
    texts.push({
      text_id: tid, event_id: "ev1", stream: "reddit",
      unix_ts: DAY_TS + 100 + i, day: DAY,
      text: `${w[i % w.length]} ${w[(i + 3) % w.length]} ${w[(i + 7) % w.length]} thread`,
    });
    for (const q of queries) {
      disjoint.push({ text_id: tid, query_id: q.query_id });
    }
  }
  fs.mkdirSync(root, { recursive: true });
  writeJsonl(path.join(root, "raw_texts.jsonl"), texts);
  writeJsonl(path.join(root, "queries.jsonl"), queries);
  return { dir: root, planted, disjoint };
}

function runCli(fix: Fixture, outDir: string, extra: string[] = []): void {
  execFileSync(process.execPath, [
    CLI, "annotate",
    "--items", path.join(fix.dir, "raw_texts.jsonl"),
    "--queries", path.join(fix.dir, "queries.jsonl"),
    "--out-dir", outDir, ...extra,
  ], { stdio: ["ignore", "ignore", "pipe"] });
}

test("acceptance: planted pairs pass, disjoint fail, corpus validates, rerun identical", () => {
  const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "annot-"));
  const fix = buildFixture(path.join(tmp, "fixture"));
  const out1 = path.join(tmp, "out1");
  runCli(fix, out1);

  const confs = readJsonl<ConfidenceRow>(path.join(out1, "confidences.jsonl"));
  const byPair = new Map(confs.map((c) => [`${c.text_id}|${c.query_id}`, c]));
  for (const p of fix.planted) {
    const c = byPair.get(`${p.text_id}|${p.query_id}`)!;
    assert.ok(c.conf_a >= 0.8 && c.conf_b >= 0.8,
      `planted pair ${p.text_id}/${p.query_id} below dual threshold: ${JSON.stringify(c)}`);
  }
  for (const p of fix.disjoint) {
    const c = byPair.get(`${p.text_id}|${p.query_id}`)!;
    assert.ok(!(c.conf_a >= 0.8 && c.conf_b >= 0.8),
      `disjoint pair ${p.text_id}/${p.query_id} passed: ${JSON.stringify(c)}`);
  }

  const items = readJsonl<ItemRow>(path.join(out1, "items.jsonl"));
  assert.equal(items.length, 20);
  for (const item of items) {
    assert.equal(item.embedding.length, 768);
    const expectPlanted = fix.planted.filter((p) => p.text_id === item.text_id).length;
    assert.equal(item.sc, expectPlanted, `sc mismatch for ${item.text_id}`);
  }

  // the emitted directory is a full corpus for the primary engine
  const validate = spawnSync("python3", ["-m", "crisisline.cli", "validate",
    "--corpus", out1], { encoding: "utf-8" });
  assert.equal(validate.status, 0,
    `crisisline validate failed:\n${validate.stdout}\n${validate.stderr}`);
  const report = JSON.parse(validate.stdout);
  assert.deepEqual(report.violations, []);

  // rerun: byte-identical output files
  const out2 = path.join(tmp, "out2");
  runCli(fix, out2);
  for (const name of ["events.jsonl", "queries.jsonl", "items.jsonl", "confidences.jsonl"]) {
    const a = fs.readFileSync(path.join(out1, name));
    const b = fs.readFileSync(path.join(out2, name));
    assert.ok(a.equals(b), `${name} differs between reruns`);
  }
  console.log("AC-10 PASS: planted pairs clear dual 0.80, disjoint pairs fail, " +
    "validate reports zero violations, rerun byte-identical");
});

test("batch size does not change the output", async () => {
  const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "annot-"));
  const fix = buildFixture(path.join(tmp, "fixture"));
  const backend = createOfflineBackend();
  const mk = (batchSize: number) => ({
    itemsPath: path.join(fix.dir, "raw_texts.jsonl"),
    queriesPath: path.join(fix.dir, "queries.jsonl"),
    outDir: path.join(tmp, `out-b${batchSize}`),
    batchSize, threshold: 0.8, maxTokens: 384,
  });
  await annotate(backend, mk(1));
  await annotate(backend, mk(7));
  for (const name of ["items.jsonl", "confidences.jsonl"]) {
    const a = fs.readFileSync(path.join(tmp, "out-b1", name));
    const b = fs.readFileSync(path.join(tmp, "out-b7", name));
    assert.ok(a.equals(b), `${name} differs across batch sizes`);
  }
});

test("zero queries produce an empty confidences file", async () => {
  const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "annot-"));
  const fix = buildFixture(path.join(tmp, "fixture"));
  writeJsonl(path.join(fix.dir, "queries.jsonl"), []);
  const backend = createOfflineBackend();
  const stats = await annotate(backend, {
    itemsPath: path.join(fix.dir, "raw_texts.jsonl"),
    queriesPath: path.join(fix.dir, "queries.jsonl"),
    outDir: path.join(tmp, "out"), batchSize: 32, threshold: 0.8, maxTokens: 384,
  });
  assert.equal(stats.pairs, 0);
  assert.equal(fs.readFileSync(path.join(tmp, "out", "confidences.jsonl"), "utf-8"), "");
  const items = readJsonl<ItemRow>(path.join(tmp, "out", "items.jsonl"));
  assert.ok(items.every((i) => i.sc === 0));
});

test("duplicate text ids rejected", async () => {
  const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "annot-"));
  const fix = buildFixture(path.join(tmp, "fixture"));
  const rows = readJsonl<Record<string, unknown>>(path.join(fix.dir, "raw_texts.jsonl"));
  rows.push(rows[0]);
  writeJsonl(path.join(fix.dir, "raw_texts.jsonl"), rows);
  const backend = createOfflineBackend();
  await assert.rejects(annotate(backend, {
    itemsPath: path.join(fix.dir, "raw_texts.jsonl"),
    queriesPath: path.join(fix.dir, "queries.jsonl"),
    outDir: path.join(tmp, "out"), batchSize: 32, threshold: 0.8, maxTokens: 384,
  }), /duplicate id/);
});

test("cli usage errors exit 64", () => {
  const r = spawnSync(process.execPath, [CLI, "annotate", "--nope", "x"],
    { encoding: "utf-8" });
  assert.equal(r.status, 64);
});
