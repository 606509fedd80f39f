import * as path from "node:path";

import { describe, expect, it } from "vitest";

import {
  discoverDataset,
  parseDialogueFile,
  parseOntology,
  splitOfFileName,
} from "../src/formats";

const RAW = path.join(__dirname, "..", "fixtures", "raw");

describe("splitOfFileName", () => {
  it("reads the split out of the file name", () => {
    expect(splitOfFileName("woz_train_en.json")).toBe("train");
    expect(splitOfFileName("woz_validate_en.json")).toBe("dev");
    expect(splitOfFileName("dev_set.json")).toBe("dev");
    expect(splitOfFileName("WOZ_TEST_EN.json")).toBe("test");
    expect(splitOfFileName("other.json")).toBeNull();
  });
});

describe("discoverDataset", () => {
  it("finds the split files and the ontology", () => {
    const found = discoverDataset(RAW);
    expect(found.dialogueFiles).toHaveLength(3);
    expect(found.dialogueFiles.map((f) => f.split).sort())
      .toEqual(["dev", "test", "train"]);
    expect(path.basename(found.ontologyPath)).toBe("ontology_en.json");
  });

  it("rejects a missing directory", () => {
    expect(() => discoverDataset(path.join(RAW, "nope"))).toThrow(/directory/);
  });
});

describe("parseDialogueFile", () => {
  it("extracts ids, turns, labels, acts, and ASR", () => {
    const dialogues = parseDialogueFile(
      path.join(RAW, "woz_test_en.json"), "test");
    expect(dialogues).toHaveLength(1);
    const [d] = dialogues;
    expect(d.id).toBe("300");
    expect(d.split).toBe("test");
    expect(d.turns).toHaveLength(2);
    expect(d.turns[0].transcript).toMatch(/Italian restaurant/);
    expect(d.turns[0].turnLabel).toEqual(
      [["food", "italian"], ["area", "south"]]);
    expect(d.turns[0].asr).toHaveLength(3);
    expect(d.turns[1].systemActs).toEqual([["food", "italian"], "phone"]);
  });
});

describe("parseOntology", () => {
  it("converts the informable/requestable shape", () => {
    const onto = parseOntology(path.join(RAW, "ontology_en.json"));
    expect(onto.slots).toContain("food");
    expect(onto.slots).toContain("request");
    expect(onto.values["request"]).toContain("phone");
    expect(onto.values["price range"]).toContain("moderate");
  });
});
