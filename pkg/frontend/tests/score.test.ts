import { describe, expect, it } from "vitest";

import { mqmScore, SEVERITY_WEIGHTS } from "../src/score.js";

describe("mqmScore", () => {
  it("scores 1.0 with zero errors", () => {
    expect(mqmScore({ minor: 0, major: 0, critical: 0 }, 57)).toBe(1);
  });

  it("scores 0.0 at one minor per five words", () => {
    expect(mqmScore({ minor: 1, major: 0, critical: 0 }, 5)).toBe(0);
  });

  it("uses the 5/10/25 severity weights", () => {
    expect(SEVERITY_WEIGHTS).toEqual({ minor: 5, major: 10, critical: 25 });
    const w = 200;
    const base = mqmScore({ minor: 3, major: 2, critical: 1 }, w);
    expect(mqmScore({ minor: 3, major: 2, critical: 2 }, w)).toBeCloseTo(
      base - 25 / w,
      12,
    );
    expect(mqmScore({ minor: 4, major: 2, critical: 1 }, w)).toBeCloseTo(
      base - 5 / w,
      12,
    );
  });

  it("reproduces the benchmark human-evaluation rows to ±0.01", () => {
    const rows: Array<[number, number, number, number]> = [
      [14, 50, 107, -1.31],
      [5, 20, 272, -4.25],
      [8, 18, 160, -1.98],
    ];
    for (const [minor, major, critical, expected] of rows) {
      const penalty = 5 * minor + 10 * major + 25 * critical;
      const wordCount = Math.round(penalty / (1 - expected));
      const got = mqmScore({ minor, major, critical }, wordCount);
      expect(Math.abs(got - expected)).toBeLessThanOrEqual(0.01);
    }
  });

  it("rejects a non-positive word count", () => {
    expect(() => mqmScore({ minor: 0, major: 0, critical: 0 }, 0)).toThrow();
    expect(() => mqmScore({ minor: 0, major: 0, critical: 0 }, -3)).toThrow();
  });
});
