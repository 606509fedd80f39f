/**
 * Assembly of the line-delimited corpus format the tracker loads natively,
 * plus the per-turn annotation sidecar and the tagging manifest.
 *
 * Field order inside each record mirrors the tracker's own writer, and
 * every line is compact JSON, so output is deterministic byte for byte.
 */

import { NER_INVENTORY, POS_INVENTORY } from "./inventories";
import { TaggedUtterance } from "./tagger";
import { OntologyJson } from "./formats";

export interface SlotValueJson {
  slot: string;
  value: string;
}

export interface AsrJson {
  tokens: string[];
  score: number;
}

/** One fully annotated turn, shaped exactly like the native format. */
export interface NativeTurn {
  tokens: string[];
  lemmas: string[];
  pos: string[];
  ner: string[];
  system_actions: SlotValueJson[];
  turn_goals: SlotValueJson[];
  turn_requests: SlotValueJson[];
  asr: AsrJson[];
}

export interface NativeDialogue {
  id: string;
  split: string;
  turns: NativeTurn[];
}

/** Sidecar record: annotations keyed by dialogue id + turn index. */
export interface AnnotationRecord {
  id: string;
  turn: number;
  tokens: string[];
  lemmas: string[];
  pos: string[];
  ner: string[];
}

export function annotationRecord(id: string, turn: number,
                                 tagged: TaggedUtterance): AnnotationRecord {
  const { tokens, lemmas, pos, ner } = tagged;
  if (lemmas.length !== tokens.length || pos.length !== tokens.length ||
      ner.length !== tokens.length) {
    throw new Error(
      `dialogue ${id} turn ${turn}: annotation arrays misaligned ` +
      `(${tokens.length}/${lemmas.length}/${pos.length}/${ner.length})`);
  }
  return { id, turn, tokens, lemmas, pos, ner };
}

export function nativeTurn(tagged: TaggedUtterance,
                           systemActions: SlotValueJson[],
                           goals: SlotValueJson[],
                           requests: SlotValueJson[],
                           asr: AsrJson[]): NativeTurn {
  return {
    tokens: tagged.tokens,
    lemmas: tagged.lemmas,
    pos: tagged.pos,
    ner: tagged.ner,
    system_actions: systemActions,
    turn_goals: goals,
    turn_requests: requests,
    asr,
  };
}

/** One dialogue per line, compact JSON, trailing newline. */
export function toJsonLines(records: object[]): string {
  return records.map((r) => JSON.stringify(r)).join("\n") + (records.length ? "\n" : "");
}

export function ontologyJson(ontology: OntologyJson): string {
  return JSON.stringify({ slots: ontology.slots, values: ontology.values });
}

export interface Manifest {
  tagger: { name: string; version: string; pinned: string };
  inventories: { pos: string[]; ner: string[] };
  counts: { dialogues: number; turns: number; skipped_turns: number };
}

export function buildManifest(taggerName: string, taggerVersion: string,
                              pinnedVersion: string,
                              counts: Manifest["counts"]): Manifest {
  return {
    tagger: { name: taggerName, version: taggerVersion, pinned: pinnedVersion },
    inventories: { pos: [...POS_INVENTORY], ner: [...NER_INVENTORY] },
    counts,
  };
}
