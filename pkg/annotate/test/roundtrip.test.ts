/**
 * Compatibility tests against the tracker itself: everything this package
 * emits must load through the tracker's corpus loaders without error, for
 * both the native output and the raw-layout + sidecar path.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { nativeTurn, toJsonLines } from "../src/emit";
import { annotateCorpus } from "../src/pipeline";
import { Tagger } from "../src/tagger";

const RAW = path.join(__dirname, "..", "fixtures", "raw");
const UTTERANCES = path.join(__dirname, "..", "fixtures", "utterances.txt");

const LOAD_SCRIPT = `
import json, sys
from slotfree.corpus import load_corpus
dialogues, ontology = load_corpus(sys.argv[1], format=sys.argv[2])
print(json.dumps({
    "dialogues": len(dialogues),
    "turns": sum(len(d.turns) for d in dialogues),
    "first_id": dialogues[0].id,
    "first_tokens": [t.surface for t in dialogues[0].turns[0].utterance],
    "first_pos": [t.pos for t in dialogues[0].turns[0].utterance],
    "n_values": ontology.n_values,
}))
`;

function loadWithTracker(corpusPath: string, format: string) {
  const run = spawnSync("python3", ["-c", LOAD_SCRIPT, corpusPath, format],
                        { encoding: "utf-8" });
  expect(run.status, run.stderr).toBe(0);
  return JSON.parse(run.stdout);
}

function mkTmp(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

describe("round trip through the tracker's loaders", () => {
  it("native output loads without error and keeps every kept turn", () => {
    const outDir = mkTmp("annotate-rt-");
    try {
      const summary = annotateCorpus({ inDir: RAW, outDir, log: () => undefined });
      const loaded = loadWithTracker(path.join(outDir, "corpus.jsonl"), "native");
      expect(loaded.dialogues).toBe(summary.dialogues);
      expect(loaded.turns).toBe(summary.turns);
      expect(loaded.n_values).toBe(5 + 3 + 3 + 5);
    } finally {
      fs.rmSync(outDir, { recursive: true, force: true });
    }
  });

  it("sidecar annotations drive the raw-layout loader's tokens", () => {
    const outDir = mkTmp("annotate-rt-");
    const rawCopy = mkTmp("annotate-raw-");
    try {
      annotateCorpus({ inDir: RAW, outDir, log: () => undefined });
      for (const name of fs.readdirSync(RAW)) {
        fs.copyFileSync(path.join(RAW, name), path.join(rawCopy, name));
      }
      fs.copyFileSync(path.join(outDir, "annotations.jsonl"),
                      path.join(rawCopy, "annotations.jsonl"));
      const loaded = loadWithTracker(rawCopy, "woz");
      expect(loaded.dialogues).toBe(4);
      // files are read in sorted order, so the test split comes first
      expect(loaded.first_id).toBe("300");
      // real tokenization splits the question mark off; the whitespace
      // fallback would have glued it to "south?"
      expect(loaded.first_tokens).toEqual(
        ["is", "there", "an", "italian", "restaurant", "in", "the", "south", "?"]);
      expect(loaded.first_pos[loaded.first_pos.length - 1]).toBe(".");
    } finally {
      fs.rmSync(outDir, { recursive: true, force: true });
      fs.rmSync(rawCopy, { recursive: true, force: true });
    }
  });

  it("the 50-utterance fixture aligns and loads end to end", () => {
    const tagger = new Tagger(() => undefined);
    const lines = fs.readFileSync(UTTERANCES, "utf-8")
      .split("\n").filter((l) => l.trim().length > 0);
    expect(lines).toHaveLength(50);

    const dialogues = lines.map((line, i) => {
      const tagged = tagger.tagUtterance(line);
      expect(tagged, line).not.toBeNull();
      const { tokens, lemmas, pos, ner } = tagged!;
      expect(new Set([tokens.length, lemmas.length, pos.length, ner.length])
        .size, line).toBe(1);
      return {
        id: `utt-${String(i).padStart(3, "0")}`,
        split: "train",
        turns: [nativeTurn(tagged!, [], [], [], [])],
      };
    });

    const outDir = mkTmp("annotate-fix-");
    try {
      const corpus = path.join(outDir, "corpus.jsonl");
      fs.writeFileSync(corpus, toJsonLines(dialogues), "utf-8");
      fs.writeFileSync(path.join(outDir, "corpus.ontology.json"),
                       JSON.stringify({ slots: ["request"],
                                        values: { request: ["phone"] } }),
                       "utf-8");
      const loaded = loadWithTracker(corpus, "native");
      expect(loaded.dialogues).toBe(50);
      expect(loaded.turns).toBe(50);
    } finally {
      fs.rmSync(outDir, { recursive: true, force: true });
    }
  });
});
