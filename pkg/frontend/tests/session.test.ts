import { describe, expect, it } from "vitest";

import { parseAnnotationFile, parseReviewBundle } from "../src/schema.js";
import { AnnotatorSession } from "../src/session.js";
import { sampleBundle } from "./fixtures.js";

function makeSession(): AnnotatorSession {
  return new AnnotatorSession(parseReviewBundle(sampleBundle()));
}

describe("AnnotatorSession", () => {
  it("starts with a perfect score and the bundle word count", () => {
    const session = makeSession();
    expect(session.liveScore()).toBe(1);
    expect(session.wordCount).toBe(100);
    expect(session.system).toBe("PBP_VIS");
  });

  it("one critical on a 100-word bundle drops the score by 0.25", () => {
    const session = makeSession();
    session.annotate("p000_r00", "accuracy/mistranslation", "critical");
    expect(session.liveScore()).toBeCloseTo(0.75, 12);
    session.removeAnnotation(0);
    expect(session.liveScore()).toBe(1);
  });

  it("live score always equals the formula over current drafts", () => {
    const session = makeSession();
    session.annotate("p000_r00", "fluency/grammar", "minor");
    session.annotate("p000_r01", "accuracy/mistranslation", "major");
    session.annotate("p001_r00", "accuracy/untranslated", "critical", [0, 4]);
    expect(session.counts()).toEqual({ minor: 1, major: 1, critical: 1 });
    expect(session.liveScore()).toBeCloseTo(1 - (5 + 10 + 25) / 100, 12);
    session.wordCount = 200;
    expect(session.liveScore()).toBeCloseTo(1 - 40 / 200, 12);
  });

  it("rejects non-leaf issue types and unknown lines", () => {
    const session = makeSession();
    expect(() => session.annotate("p000_r00", "fluency", "minor")).toThrow(
      /taxonomy leaf/,
    );
    expect(() =>
      session.annotate("nope", "fluency/grammar", "minor"),
    ).toThrow(/unknown line/);
    expect(() =>
      session.annotate("p000_r00", "fluency/grammar", "minor", [5, 2]),
    ).toThrow(/span/);
  });

  it("replicates the benchmark GT error profile on a matching word count", () => {
    const session = makeSession();
    session.wordCount = 1338; // inverse-solved from the benchmark score
    for (let i = 0; i < 5; i += 1)
      session.annotate("p000_r00", "fluency/grammar", "minor");
    for (let i = 0; i < 20; i += 1)
      session.annotate("p000_r01", "accuracy/mistranslation", "major");
    for (let i = 0; i < 272; i += 1)
      session.annotate("p001_r00", "accuracy/mistranslation", "critical");
    expect(Math.abs(session.liveScore() - -4.25)).toBeLessThanOrEqual(0.01);
  });

  it("exports and re-imports annotations losslessly", () => {
    const session = makeSession();
    session.annotate("p000_r00", "fluency/punctuation", "minor", [2, 9], "odd comma");
    session.annotate("p001_r00", "accuracy/mistranslation", "critical");
    session.system = "custom-system";
    session.wordCount = 321;
    const exported = session.exportAnnotations();

    const reparsed = parseAnnotationFile(
      JSON.parse(JSON.stringify(exported)),
    );
    const fresh = makeSession();
    fresh.importAnnotations(reparsed);
    expect(fresh.exportAnnotations()).toEqual(exported);
    expect(fresh.liveScore()).toBe(session.liveScore());
  });

  it("autosave state round-trips", () => {
    const session = makeSession();
    session.annotate("p000_r01", "accuracy/untranslated", "major");
    session.moveTo(2);
    session.wordCount = 88;
    const saved = session.draftState();

    const restored = makeSession();
    restored.restoreDraftState(saved);
    expect(restored.cursor).toBe(2);
    expect(restored.wordCount).toBe(88);
    expect(restored.drafts).toEqual(session.drafts);
    expect(restored.liveScore()).toBe(session.liveScore());
  });

  it("navigates lines in bundle order", () => {
    const session = makeSession();
    expect(session.currentLine().line_id).toBe("p000_r00");
    session.moveTo(1);
    expect(session.currentLine().line_id).toBe("p000_r01");
    expect(() => session.moveTo(99)).toThrow(/out of range/);
  });
});
