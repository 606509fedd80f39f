/**
 * End-to-end annotation: read a directory of raw dialogue files, tag every
 * transcript and ASR hypothesis, and write
 *
 *   corpus.jsonl            the tracker's native line-delimited format
 *   corpus.ontology.json    the ontology sibling the native loader expects
 *   annotations.jsonl       per-turn sidecar for the raw-layout loader
 *   manifest.json           tagger name/version and the tag inventories
 *
 * Output is deterministic for a pinned tagger version: dialogues are sorted
 * by id, turns by index, and all serialization is canonical.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  AnnotationRecord,
  AsrJson,
  NativeDialogue,
  SlotValueJson,
  annotationRecord,
  buildManifest,
  nativeTurn,
  ontologyJson,
  toJsonLines,
} from "./emit";
import { OntologyJson, RawDialogue, discoverDataset, parseDialogueFile, parseOntology } from "./formats";
import { PINNED_MODEL_VERSION, TAGGER_NAME, Tagger } from "./tagger";

export interface PipelineOptions {
  inDir: string;
  outDir: string;
  log?: (msg: string) => void;
}

export interface PipelineSummary {
  dialogues: number;
  turns: number;
  skippedTurns: number;
  outDir: string;
}

function ontologyHas(ontology: OntologyJson, slot: string, value: string): boolean {
  const values = ontology.values[slot];
  return values !== undefined &&
    values.some((v) => v.toLowerCase() === value.toLowerCase());
}

/** Map raw system acts onto slot/value pairs, dropping non-members. */
export function mapSystemActs(acts: Array<string | [string, string]>,
                              ontology: OntologyJson, dialogueId: string,
                              turnIndex: number,
                              log: (msg: string) => void): SlotValueJson[] {
  const out: SlotValueJson[] = [];
  for (const act of acts) {
    if (typeof act === "string") {
      if (ontologyHas(ontology, "request", act)) {
        out.push({ slot: "request", value: act });
      } else {
        log(`dialogue ${dialogueId} turn ${turnIndex}: system request act ` +
            `"${act}" not in ontology, skipped`);
      }
    } else {
      const [slot, value] = act;
      if (ontologyHas(ontology, slot, value)) {
        out.push({ slot, value });
      } else {
        log(`dialogue ${dialogueId} turn ${turnIndex}: system act ` +
            `(${slot}, ${value}) not in ontology, skipped`);
      }
    }
  }
  return out;
}

export function annotateCorpus(options: PipelineOptions): PipelineSummary {
  const log = options.log ?? ((msg: string) => console.warn(msg));
  const tagger = new Tagger(log);
  const dataset = discoverDataset(options.inDir);
  const ontology = parseOntology(dataset.ontologyPath);

  const raw: RawDialogue[] = [];
  for (const file of dataset.dialogueFiles) {
    raw.push(...parseDialogueFile(file.path, file.split));
  }
  raw.sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));

  const nativeDialogues: NativeDialogue[] = [];
  const sidecar: AnnotationRecord[] = [];
  let turnCount = 0;
  let skipped = 0;

  for (const dialogue of raw) {
    const turns = [...dialogue.turns].sort((a, b) => a.index - b.index);
    const outTurns = [];
    for (const turn of turns) {
      const tagged = tagger.tagUtterance(turn.transcript);
      if (tagged === null) {
        skipped += 1;
        log(`dialogue ${dialogue.id} turn ${turn.index}: no tokens, skipped`);
        continue;
      }
      const goals: SlotValueJson[] = [];
      const requests: SlotValueJson[] = [];
      for (const [slot, value] of turn.turnLabel) {
        (slot.toLowerCase() === "request" ? requests : goals)
          .push({ slot, value });
      }
      const asr: AsrJson[] = [];
      for (const [text, score] of turn.asr) {
        const hyp = tagger.tagAsrHypothesis(text);
        if (hyp !== null) asr.push({ tokens: hyp.tokens, score });
      }
      asr.sort((a, b) => b.score - a.score);
      outTurns.push(nativeTurn(
        tagged,
        mapSystemActs(turn.systemActs, ontology, dialogue.id, turn.index, log),
        goals, requests, asr));
      sidecar.push(annotationRecord(dialogue.id, turn.index, tagged));
      turnCount += 1;
    }
    nativeDialogues.push({ id: dialogue.id, split: dialogue.split, turns: outTurns });
  }

  fs.mkdirSync(options.outDir, { recursive: true });
  const write = (name: string, text: string) =>
    fs.writeFileSync(path.join(options.outDir, name), text, "utf-8");
  write("corpus.jsonl", toJsonLines(nativeDialogues));
  write("corpus.ontology.json", ontologyJson(ontology));
  write("annotations.jsonl", toJsonLines(sidecar));
  write("manifest.json", JSON.stringify(
    buildManifest(TAGGER_NAME, tagger.modelVersion, PINNED_MODEL_VERSION,
                  { dialogues: nativeDialogues.length, turns: turnCount,
                    skipped_turns: skipped }),
    null, 2) + "\n");

  return {
    dialogues: nativeDialogues.length,
    turns: turnCount,
    skippedTurns: skipped,
    outDir: options.outDir,
  };
}
