/**
 * Wrapper around the wink-nlp English pipeline that emits Penn-style POS
 * tags and OntoNotes-style entity types, aligned token by token.
 *
 * wink-nlp tags with the Universal POS set; `refinePos` sharpens those
 * categories into Treebank tags using surface/lemma morphology and a little
 * left context. The mapping is deterministic, so a pinned model version
 * yields byte-identical output.
 */

import winkNLP, { ItemEntity, ItemToken, ItsFunction, WinkMethods } from "wink-nlp";
import model from "wink-eng-lite-web-model";
import modelPackage from "wink-eng-lite-web-model/package.json";

import { NO_ENTITY, UNK, clampNer, clampPos } from "./inventories";

/** Model version this package was calibrated against. */
export const PINNED_MODEL_VERSION = "1.8.1";
export const TAGGER_NAME = "wink-nlp";

export interface TaggedUtterance {
  tokens: string[];
  lemmas: string[];
  pos: string[];
  ner: string[];
}

const MODALS = new Set([
  "can", "could", "may", "might", "must", "shall", "should", "will", "would",
  "ca", "wo", "'ll", "'d",
]);
const POSSESSIVE_PRON = new Set(["my", "your", "his", "her", "its", "our", "their"]);
const WH_PRON = new Set(["who", "whom", "what", "whoever", "whatever"]);
const WH_ADV = new Set(["how", "when", "where", "why", "whenever", "wherever"]);
const WH_DET = new Set(["which", "whichever"]);
const OPEN_PUNCT = new Set(["(", "[", "{"]);
const CLOSE_PUNCT = new Set([")", "]", "}"]);
const END_PUNCT = new Set([".", "!", "?"]);

function verbTag(surface: string, lemma: string, prevLemma: string): string {
  if (MODALS.has(surface) || MODALS.has(lemma)) return "MD";
  if (lemma === "be") {
    if (surface === "is" || surface === "'s") return "VBZ";
    if (surface === "was" || surface === "were") return "VBD";
    if (surface === "been") return "VBN";
    if (surface === "being") return "VBG";
    if (surface === "be") return "VB";
    return "VBP"; // am, are, 're, 'm
  }
  if (surface.endsWith("ing")) return "VBG";
  if (surface !== lemma && (surface.endsWith("ed") || surface.endsWith("en") ||
      surface === "did" || surface === "had")) {
    return prevLemma === "be" || prevLemma === "have" ? "VBN" : "VBD";
  }
  if (surface !== lemma && surface.endsWith("s")) return "VBZ";
  return prevLemma === "to" || MODALS.has(prevLemma) ? "VB" : "VBP";
}

function punctTag(surface: string): string {
  if (END_PUNCT.has(surface)) return ".";
  if (surface === ",") return ",";
  if (OPEN_PUNCT.has(surface)) return "(";
  if (CLOSE_PUNCT.has(surface)) return ")";
  if (surface === "``" || surface === "`") return "``";
  if (surface === "''" || surface === '"' || surface === "'") return "''";
  return ":"; // ; : … -- and other separators
}

/** Universal POS + morphology -> Penn Treebank tag. */
export function refinePos(upos: string, rawSurface: string, lemma: string,
                          prevLemma: string): string {
  const surface = rawSurface.toLowerCase();
  const inflected = surface !== lemma;
  switch (upos) {
    case "NOUN":
      return inflected && surface.endsWith("s") ? "NNS" : "NN";
    case "PROPN":
      return inflected && surface.endsWith("s") ? "NNPS" : "NNP";
    case "VERB":
    case "AUX":
      return verbTag(surface, lemma, prevLemma);
    case "ADJ":
      if (inflected && surface.endsWith("er")) return "JJR";
      if (inflected && surface.endsWith("est")) return "JJS";
      return "JJ";
    case "ADV":
      if (WH_ADV.has(surface)) return "WRB";
      if (inflected && surface.endsWith("er")) return "RBR";
      if (inflected && surface.endsWith("est")) return "RBS";
      return "RB";
    case "PRON":
      if (surface === "there") return "EX";
      if (surface === "whose") return "WP$";
      if (POSSESSIVE_PRON.has(surface)) return "PRP$";
      if (WH_PRON.has(surface)) return "WP";
      if (WH_DET.has(surface)) return "WDT";
      return "PRP";
    case "DET":
      return WH_DET.has(surface) ? "WDT" : "DT";
    case "ADP":
      return surface === "to" ? "TO" : "IN";
    case "SCONJ":
      return "IN";
    case "CCONJ":
      return "CC";
    case "NUM":
      return "CD";
    case "PART":
      if (surface === "to") return "TO";
      if (surface === "not" || surface === "n't") return "RB";
      if (surface === "'s") return "POS";
      return "RP";
    case "INTJ":
      return "UH";
    case "SYM":
      return surface === "$" ? "$" : surface === "#" ? "#" : "SYM";
    case "PUNCT":
      return punctTag(surface);
    case "X":
      return "FW";
    default:
      return UNK;
  }
}

/** wink entity type -> OntoNotes type (the lite model covers a subset). */
export function mapEntityType(winkType: string): string {
  switch (winkType.toUpperCase()) {
    case "DATE": return "DATE";
    case "TIME": return "TIME";
    case "DURATION": return "TIME";
    case "CARDINAL": return "CARDINAL";
    case "ORDINAL": return "ORDINAL";
    case "PERCENT": return "PERCENT";
    case "MONEY": return "MONEY";
    default: return UNK; // EMAIL, URL, HASHTAG, ... have no OntoNotes home
  }
}

export class Tagger {
  private readonly nlp: WinkMethods;
  readonly modelVersion: string;

  constructor(onWarning: (msg: string) => void = (m) => console.warn(m)) {
    this.nlp = winkNLP(model);
    this.modelVersion = modelPackage.version;
    if (this.modelVersion !== PINNED_MODEL_VERSION) {
      onWarning(
        `${TAGGER_NAME} model version ${this.modelVersion} differs from the ` +
        `pinned ${PINNED_MODEL_VERSION}; annotations may not be reproducible`);
    }
  }

  /**
   * Tokenize and tag one utterance. Returns null for text with no tokens
   * (the caller logs and skips the turn).
   */
  tagUtterance(text: string): TaggedUtterance | null {
    const doc = this.nlp.readDoc(text);
    const toks = doc.tokens();
    const n = toks.length();
    if (n === 0) return null;

    const its = this.nlp.its;
    const asStrings = (f: unknown) => toks.out(f as ItsFunction<string>) as string[];
    const tokens = toks.out();
    const lemmas = asStrings(its.lemma);
    const upos = asStrings(its.pos);

    const ner = new Array<string>(n).fill(NO_ENTITY);
    doc.entities().each((e: ItemEntity) => {
      const mapped = mapEntityType(e.out(its.type as ItsFunction<string>) as string);
      e.tokens().each((t: ItemToken) => { ner[t.index()] = mapped; });
    });

    const pos = upos.map((u, i) =>
      clampPos(refinePos(u, tokens[i], lemmas[i], i > 0 ? lemmas[i - 1] : "")));
    return { tokens, lemmas, pos, ner: ner.map(clampNer) };
  }

  /**
   * Tokenize an ASR hypothesis: real POS (the tagger handles noisy text
   * reasonably) but UNK NER, since entity detection is unreliable there.
   */
  tagAsrHypothesis(text: string): TaggedUtterance | null {
    const tagged = this.tagUtterance(text);
    if (tagged === null) return null;
    return { ...tagged, ner: tagged.tokens.map(() => UNK) };
  }
}
