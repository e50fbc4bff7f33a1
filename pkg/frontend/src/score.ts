/**
 * Severity-weighted quality score: the single place the 5/10/25 weights
 * live on the UI side. Upper bound 1 (no errors), unbounded below.
 */

export type Severity = "minor" | "major" | "critical";

export const SEVERITIES: readonly Severity[] = ["minor", "major", "critical"];

export const SEVERITY_WEIGHTS: Record<Severity, number> = {
  minor: 5,
  major: 10,
  critical: 25,
};

export interface SeverityCounts {
  minor: number;
  major: number;
  critical: number;
}

export function mqmScore(counts: SeverityCounts, wordCount: number): number {
  if (!Number.isFinite(wordCount) || wordCount <= 0) {
    throw new Error(`word count must be positive, got ${wordCount}`);
  }
  const penalty =
    SEVERITY_WEIGHTS.minor * counts.minor +
    SEVERITY_WEIGHTS.major * counts.major +
    SEVERITY_WEIGHTS.critical * counts.critical;
  return 1 - penalty / wordCount;
}

export function isSeverity(value: string): value is Severity {
  return (SEVERITIES as readonly string[]).includes(value);
}
