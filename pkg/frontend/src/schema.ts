/**
 * Hand-rolled validation for the two file formats this UI exchanges
 * with the core pipeline: review bundles (input) and annotation sets
 * (output). Errors carry the offending field path so a bad file is
 * rejected with a message naming exactly what is wrong.
 */

import { isSeverity, type Severity } from "./score.js";

export const BUNDLE_SCHEMA = "mangatl/review-bundle/v1";
export const ANNOTATIONS_SCHEMA = "mangatl/annotations/v1";

export class SchemaError extends Error {
  constructor(public readonly field: string, message: string) {
    super(`${field}: ${message}`);
    this.name = "SchemaError";
  }
}

export interface BundleLine {
  line_id: string;
  page_index: number;
  image: string;
  image_size?: [number, number];
  bbox: [number, number, number, number];
  source: string;
  reference: string | null;
  hypothesis: string;
}

export interface TaxonomyIssue {
  id: string;
  label: string;
}

export interface TaxonomyGroup {
  group: string;
  label: string;
  issues: TaxonomyIssue[];
}

export interface ReviewBundle {
  schema: string;
  provenance: {
    run_id: string;
    approach: string;
    volume: string;
    model: string;
    config_digest: string;
    cassette_digest: string;
  };
  target_lang: string;
  word_count: number;
  taxonomy: TaxonomyGroup[];
  lines: BundleLine[];
}

export interface AnnotationRecord {
  line_id: string;
  issue_type: string;
  severity: Severity;
  span: [number, number] | null;
  note: string;
}

export interface AnnotationFile {
  schema: string;
  system: string;
  word_count: number;
  annotations: AnnotationRecord[];
}

function isObject(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function requireString(
  obj: Record<string, unknown>,
  key: string,
  path: string,
): string {
  const value = obj[key];
  if (typeof value !== "string") {
    throw new SchemaError(`${path}.${key}`, "missing or not a string");
  }
  return value;
}

function requireInt(
  obj: Record<string, unknown>,
  key: string,
  path: string,
): number {
  const value = obj[key];
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw new SchemaError(`${path}.${key}`, "missing or not an integer");
  }
  return value;
}

function parseBBox(value: unknown, path: string): [number, number, number, number] {
  if (
    !Array.isArray(value) ||
    value.length !== 4 ||
    value.some((v) => typeof v !== "number" || !Number.isFinite(v))
  ) {
    throw new SchemaError(path, "bbox must be [x, y, w, h] numbers");
  }
  const [x, y, w, h] = value as [number, number, number, number];
  if (w <= 0 || h <= 0) {
    throw new SchemaError(path, "bbox sides must be positive");
  }
  return [x, y, w, h];
}

export function parseReviewBundle(doc: unknown): ReviewBundle {
  if (!isObject(doc)) {
    throw new SchemaError("$", "bundle is not an object");
  }
  if (doc["schema"] !== BUNDLE_SCHEMA) {
    throw new SchemaError("$.schema", `expected ${BUNDLE_SCHEMA}`);
  }
  const provenance = doc["provenance"];
  if (!isObject(provenance)) {
    throw new SchemaError("$.provenance", "missing");
  }
  for (const key of [
    "run_id",
    "approach",
    "volume",
    "model",
    "config_digest",
    "cassette_digest",
  ]) {
    requireString(provenance, key, "$.provenance");
  }
  const wordCount = requireInt(doc, "word_count", "$");
  if (wordCount < 0) {
    throw new SchemaError("$.word_count", "must be non-negative");
  }

  const taxonomyRaw = doc["taxonomy"];
  if (!Array.isArray(taxonomyRaw) || taxonomyRaw.length === 0) {
    throw new SchemaError("$.taxonomy", "missing or empty");
  }
  const taxonomy: TaxonomyGroup[] = taxonomyRaw.map((groupRaw, gi) => {
    const gPath = `$.taxonomy[${gi}]`;
    if (!isObject(groupRaw)) throw new SchemaError(gPath, "not an object");
    const issuesRaw = groupRaw["issues"];
    if (!Array.isArray(issuesRaw) || issuesRaw.length === 0) {
      throw new SchemaError(`${gPath}.issues`, "missing or empty");
    }
    return {
      group: requireString(groupRaw, "group", gPath),
      label: requireString(groupRaw, "label", gPath),
      issues: issuesRaw.map((issueRaw, ii) => {
        const iPath = `${gPath}.issues[${ii}]`;
        if (!isObject(issueRaw)) throw new SchemaError(iPath, "not an object");
        return {
          id: requireString(issueRaw, "id", iPath),
          label: requireString(issueRaw, "label", iPath),
        };
      }),
    };
  });

  const linesRaw = doc["lines"];
  if (!Array.isArray(linesRaw) || linesRaw.length === 0) {
    throw new SchemaError("$.lines", "bundle has no lines");
  }
  const seen = new Set<string>();
  const lines: BundleLine[] = linesRaw.map((lineRaw, li) => {
    const path = `$.lines[${li}]`;
    if (!isObject(lineRaw)) throw new SchemaError(path, "not an object");
    const lineId = requireString(lineRaw, "line_id", path);
    if (seen.has(lineId)) {
      throw new SchemaError(`${path}.line_id`, `duplicate line_id ${lineId}`);
    }
    seen.add(lineId);
    const reference = lineRaw["reference"];
    if (reference !== null && reference !== undefined && typeof reference !== "string") {
      throw new SchemaError(`${path}.reference`, "must be a string or null");
    }
    let imageSize: [number, number] | undefined;
    const sizeRaw = lineRaw["image_size"];
    if (Array.isArray(sizeRaw) && sizeRaw.length === 2 &&
        sizeRaw.every((v) => typeof v === "number")) {
      imageSize = [sizeRaw[0] as number, sizeRaw[1] as number];
    }
    return {
      line_id: lineId,
      page_index: requireInt(lineRaw, "page_index", path),
      image: requireString(lineRaw, "image", path),
      image_size: imageSize,
      bbox: parseBBox(lineRaw["bbox"], `${path}.bbox`),
      source: requireString(lineRaw, "source", path),
      reference: (reference ?? null) as string | null,
      hypothesis: requireString(lineRaw, "hypothesis", path),
    };
  });

  return {
    schema: BUNDLE_SCHEMA,
    provenance: provenance as ReviewBundle["provenance"],
    target_lang: typeof doc["target_lang"] === "string"
      ? (doc["target_lang"] as string)
      : "en",
    word_count: wordCount,
    taxonomy,
    lines,
  };
}

export function taxonomyLeafIds(bundle: ReviewBundle): Set<string> {
  const ids = new Set<string>();
  for (const group of bundle.taxonomy) {
    for (const issue of group.issues) {
      ids.add(issue.id);
    }
  }
  return ids;
}

export function parseAnnotationFile(doc: unknown): AnnotationFile {
  if (!isObject(doc)) {
    throw new SchemaError("$", "annotation file is not an object");
  }
  if (doc["schema"] !== ANNOTATIONS_SCHEMA) {
    throw new SchemaError("$.schema", `expected ${ANNOTATIONS_SCHEMA}`);
  }
  const wordCount = requireInt(doc, "word_count", "$");
  const annotationsRaw = doc["annotations"];
  if (!Array.isArray(annotationsRaw)) {
    throw new SchemaError("$.annotations", "missing");
  }
  const annotations: AnnotationRecord[] = annotationsRaw.map((raw, i) => {
    const path = `$.annotations[${i}]`;
    if (!isObject(raw)) throw new SchemaError(path, "not an object");
    const severity = requireString(raw, "severity", path);
    if (!isSeverity(severity)) {
      throw new SchemaError(`${path}.severity`, `unknown severity ${severity}`);
    }
    const spanRaw = raw["span"];
    let span: [number, number] | null = null;
    if (spanRaw !== null && spanRaw !== undefined) {
      if (
        !Array.isArray(spanRaw) ||
        spanRaw.length !== 2 ||
        spanRaw.some((v) => typeof v !== "number" || !Number.isInteger(v))
      ) {
        throw new SchemaError(`${path}.span`, "span must be [start, end] integers");
      }
      span = [spanRaw[0] as number, spanRaw[1] as number];
    }
    return {
      line_id: requireString(raw, "line_id", path),
      issue_type: requireString(raw, "issue_type", path),
      severity,
      span,
      note: typeof raw["note"] === "string" ? (raw["note"] as string) : "",
    };
  });
  return {
    schema: ANNOTATIONS_SCHEMA,
    system: typeof doc["system"] === "string" ? (doc["system"] as string) : "unnamed",
    word_count: wordCount,
    annotations,
  };
}
