import * as fs from "node:fs";
import * as path from "node:path";

export function readJsonl<T>(file: string): T[] {
  const rows: T[] = [];
  const lines = fs.readFileSync(file, "utf-8").split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    try {
      rows.push(JSON.parse(line) as T);
    } catch (err) {
      throw new Error(`${file}:${i + 1}: malformed JSON (${(err as Error).message})`);
    }
  }
  return rows;
}

export function writeJsonl(file: string, rows: unknown[]): void {
  fs.mkdirSync(path.dirname(file), { recursive: true });
  const tmp = file + ".tmp";
  fs.writeFileSync(tmp, rows.map((r) => JSON.stringify(r)).join("\n") + (rows.length ? "\n" : ""));
  fs.renameSync(tmp, file);
}

/** Fixed 6-significant-digit formatting keeps reruns byte-identical and
 * downstream 0.80 thresholding away from formatting noise. */
export function round6(x: number): number {
  return Number(x.toPrecision(6));
}
