import type { ReviewBundle } from "../src/schema.js";

export function sampleBundle(): ReviewBundle & Record<string, unknown> {
  return {
    schema: "mangatl/review-bundle/v1",
    provenance: {
      run_id: "abc123def456",
      approach: "PBP_VIS",
      volume: "synthetic_demo",
      model: "test-model",
      config_digest: "c".repeat(64),
      cassette_digest: "d".repeat(64),
    },
    target_lang: "en",
    word_count: 100,
    taxonomy: [
      {
        group: "fluency",
        label: "Fluency",
        issues: [
          { id: "fluency/punctuation", label: "Punctuation" },
          { id: "fluency/grammar", label: "Grammar" },
        ],
      },
      {
        group: "accuracy",
        label: "Accuracy",
        issues: [
          { id: "accuracy/mistranslation", label: "Mistranslation" },
          { id: "accuracy/untranslated", label: "Untranslated text" },
        ],
      },
    ],
    lines: [
      {
        line_id: "p000_r00",
        page_index: 0,
        image: "images/p000.png",
        image_size: [420, 594],
        bbox: [30, 30, 150, 50],
        source: "朝の学校。",
        reference: "Morning at school.",
        hypothesis: "Morning at school.",
      },
      {
        line_id: "p000_r01",
        page_index: 0,
        image: "images/p000.png",
        image_size: [420, 594],
        bbox: [250, 380, 130, 80],
        source: "今日は試合の日だね。",
        reference: "Today's the day of the match.",
        hypothesis: "Today is the match day.",
      },
      {
        line_id: "p001_r00",
        page_index: 1,
        image: "images/p001.png",
        image_size: [420, 594],
        bbox: [240, 40, 140, 70],
        source: "緊張してる？",
        reference: "Are you nervous?",
        hypothesis: "Are you nervous?",
      },
    ],
  };
}
