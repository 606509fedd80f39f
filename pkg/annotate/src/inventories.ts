/**
 * Tag inventories the tracker's featurizer embeds. Every tag this package
 * emits is a member of one of these sets; anything else is mapped to UNK at
 * emit time so downstream embedding tables never see an unknown symbol.
 */

export const UNK = "UNK";
export const NO_ENTITY = "none";

/** Penn Treebank word-level tags plus punctuation. */
export const POS_TAGS: readonly string[] = [
  "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
  "NN", "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
  "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP",
  "VBZ", "WDT", "WP", "WP$", "WRB",
  "#", "$", ".", ",", ":", "(", ")", "``", "''",
];

/** OntoNotes entity types; non-entities carry NO_ENTITY. */
export const NER_TYPES: readonly string[] = [
  "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT",
  "WORK_OF_ART", "LAW", "LANGUAGE", "DATE", "TIME", "PERCENT", "MONEY",
  "QUANTITY", "ORDINAL", "CARDINAL",
];

export const POS_INVENTORY: readonly string[] = [...POS_TAGS, UNK];
export const NER_INVENTORY: readonly string[] = [...NER_TYPES, NO_ENTITY, UNK];

const POS_SET = new Set(POS_INVENTORY);
const NER_SET = new Set(NER_INVENTORY);

export function clampPos(tag: string): string {
  return POS_SET.has(tag) ? tag : UNK;
}

export function clampNer(tag: string): string {
  return NER_SET.has(tag) ? tag : UNK;
}
