export { NER_INVENTORY, NER_TYPES, NO_ENTITY, POS_INVENTORY, POS_TAGS, UNK,
         clampNer, clampPos } from "./inventories";
export { PINNED_MODEL_VERSION, TAGGER_NAME, TaggedUtterance, Tagger,
         mapEntityType, refinePos } from "./tagger";
export { DatasetFiles, OntologyJson, RawDialogue, RawTurn, Split,
         discoverDataset, parseDialogueFile, parseOntology,
         splitOfFileName } from "./formats";
export { AnnotationRecord, AsrJson, Manifest, NativeDialogue, NativeTurn,
         SlotValueJson, annotationRecord, buildManifest, nativeTurn,
         ontologyJson, toJsonLines } from "./emit";
export { PipelineOptions, PipelineSummary, annotateCorpus,
         mapSystemActs } from "./pipeline";
