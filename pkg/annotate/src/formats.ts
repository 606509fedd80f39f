/**
 * Readers for the publicly distributed restaurant-dialogue JSON layouts:
 * a directory of per-split files (`*train*` / `*dev*` or `*valid*` /
 * `*test*`) whose records carry raw transcripts, turn labels, system acts,
 * and optional ASR hypotheses, plus an `ontology*.json`.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export type Split = "train" | "dev" | "test";

export interface RawTurn {
  index: number;
  transcript: string;
  /** [slot, value] pairs; slot "request" marks a requested slot. */
  turnLabel: Array<[string, string]>;
  /** Bare slot name (a request act) or [slot, value] (an inform act). */
  systemActs: Array<string | [string, string]>;
  /** [text, score] pairs, best first not guaranteed. */
  asr: Array<[string, number]>;
}

export interface RawDialogue {
  id: string;
  split: Split;
  turns: RawTurn[];
}

export interface OntologyJson {
  slots: string[];
  values: Record<string, string[]>;
}

export function splitOfFileName(name: string): Split | null {
  const lower = name.toLowerCase();
  if (lower.includes("train")) return "train";
  if (lower.includes("dev") || lower.includes("valid")) return "dev";
  if (lower.includes("test")) return "test";
  return null;
}

function asPair(entry: unknown): [string, string] | null {
  if (Array.isArray(entry) && entry.length === 2) {
    return [String(entry[0]), String(entry[1])];
  }
  return null;
}

/** Parse one raw dialogue file (a JSON list of dialogues). */
export function parseDialogueFile(filePath: string, split: Split): RawDialogue[] {
  const payload = JSON.parse(fs.readFileSync(filePath, "utf-8"));
  if (!Array.isArray(payload)) {
    throw new Error(`${filePath}: expected a JSON list of dialogues`);
  }
  return payload.map((draw: any, pos: number) => {
    const id = String(draw.dialogue_idx ?? pos);
    const rawTurns: any[] = Array.isArray(draw.dialogue) ? draw.dialogue : [];
    const turns: RawTurn[] = rawTurns.map((traw: any, i: number) => ({
      index: Number(traw.turn_idx ?? i),
      transcript: String(traw.transcript ?? ""),
      turnLabel: (Array.isArray(traw.turn_label) ? traw.turn_label : [])
        .map(asPair)
        .filter((p: [string, string] | null): p is [string, string] => p !== null),
      systemActs: (Array.isArray(traw.system_acts) ? traw.system_acts : [])
        .map((a: unknown) => (typeof a === "string" ? a : asPair(a)))
        .filter((a: string | [string, string] | null):
          a is string | [string, string] => a !== null),
      asr: (Array.isArray(traw.asr) ? traw.asr : [])
        .map(asPair)
        .filter((p: [string, string] | null): p is [string, string] => p !== null)
        .map(([text, score]: [string, string]): [string, number] =>
          [text, Number(score)]),
    }));
    return { id, split, turns };
  });
}

/**
 * Read the ontology file, accepting either the native `{slots, values}`
 * shape or the public `{informable, requestable}` shape; the requestable
 * slots become values of a dedicated `request` slot.
 */
export function parseOntology(filePath: string): OntologyJson {
  const obj = JSON.parse(fs.readFileSync(filePath, "utf-8"));
  if (obj.slots && obj.values) {
    return { slots: obj.slots.map(String), values: obj.values };
  }
  if (obj.informable) {
    const values: Record<string, string[]> = {};
    const slots: string[] = [];
    for (const slot of Object.keys(obj.informable)) {
      slots.push(slot);
      values[slot] = obj.informable[slot].map(String);
    }
    if (Array.isArray(obj.requestable)) {
      slots.push("request");
      values["request"] = obj.requestable.map(String);
    }
    return { slots, values };
  }
  throw new Error(`${filePath}: unrecognized ontology shape`);
}

export interface DatasetFiles {
  dialogueFiles: Array<{ path: string; split: Split }>;
  ontologyPath: string;
}

/** Locate dialogue files (split by name) and the ontology in a directory. */
export function discoverDataset(root: string): DatasetFiles {
  if (!fs.existsSync(root) || !fs.statSync(root).isDirectory()) {
    throw new Error(`expected a dataset directory, got ${root}`);
  }
  const names = fs.readdirSync(root).filter((n) => n.endsWith(".json")).sort();
  const ontologyNames = names.filter((n) => n.toLowerCase().includes("ontology"));
  if (ontologyNames.length === 0) {
    throw new Error(`no ontology*.json found under ${root}`);
  }
  const dialogueFiles = names
    .filter((n) => !n.toLowerCase().includes("ontology"))
    .map((n) => ({ path: path.join(root, n), split: splitOfFileName(n) }))
    .filter((f): f is { path: string; split: Split } => f.split !== null);
  return {
    dialogueFiles,
    ontologyPath: path.join(root, ontologyNames[0]),
  };
}
