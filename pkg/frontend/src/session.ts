/**
 * Annotation session state: the bundle under review, draft annotations,
 * and the live score. The score shown to the annotator is always the
 * severity-weighted formula applied to the current drafts, so exporting
 * and rescoring with the core tool reproduces it exactly.
 */

import {
  ANNOTATIONS_SCHEMA,
  parseAnnotationFile,
  parseReviewBundle,
  taxonomyLeafIds,
  type AnnotationFile,
  type AnnotationRecord,
  type BundleLine,
  type ReviewBundle,
} from "./schema.js";
import { mqmScore, type Severity, type SeverityCounts } from "./score.js";

export class AnnotatorSession {
  readonly bundle: ReviewBundle;
  readonly leafIds: Set<string>;
  cursor = 0;
  drafts: AnnotationRecord[] = [];
  /** Editable: the formula's basis is ambiguous, so the reviewer owns it. */
  wordCount: number;
  system: string;

  constructor(bundle: ReviewBundle) {
    this.bundle = bundle;
    this.leafIds = taxonomyLeafIds(bundle);
    this.wordCount = bundle.word_count;
    this.system = bundle.provenance.approach;
  }

  static fromJson(text: string): AnnotatorSession {
    return new AnnotatorSession(parseReviewBundle(JSON.parse(text)));
  }

  get lines(): BundleLine[] {
    return this.bundle.lines;
  }

  currentLine(): BundleLine {
    const line = this.bundle.lines[this.cursor];
    if (!line) throw new Error(`cursor ${this.cursor} out of range`);
    return line;
  }

  moveTo(index: number): void {
    if (index < 0 || index >= this.bundle.lines.length) {
      throw new Error(`line index ${index} out of range`);
    }
    this.cursor = index;
  }

  annotate(
    lineId: string,
    issueType: string,
    severity: Severity,
    span?: [number, number],
    note = "",
  ): AnnotationRecord {
    if (!this.bundle.lines.some((line) => line.line_id === lineId)) {
      throw new Error(`unknown line ${lineId}`);
    }
    if (!this.leafIds.has(issueType)) {
      throw new Error(`issue type ${issueType} is not a taxonomy leaf`);
    }
    if (span && (span[0] < 0 || span[1] < span[0])) {
      throw new Error(`bad span [${span[0]}, ${span[1]}]`);
    }
    const record: AnnotationRecord = {
      line_id: lineId,
      issue_type: issueType,
      severity,
      span: span ?? null,
      note,
    };
    this.drafts.push(record);
    return record;
  }

  removeAnnotation(index: number): void {
    if (index < 0 || index >= this.drafts.length) {
      throw new Error(`annotation index ${index} out of range`);
    }
    this.drafts.splice(index, 1);
  }

  counts(): SeverityCounts {
    const counts: SeverityCounts = { minor: 0, major: 0, critical: 0 };
    for (const draft of this.drafts) {
      counts[draft.severity] += 1;
    }
    return counts;
  }

  liveScore(): number {
    return mqmScore(this.counts(), this.wordCount);
  }

  annotationsFor(lineId: string): AnnotationRecord[] {
    return this.drafts.filter((draft) => draft.line_id === lineId);
  }

  exportAnnotations(): AnnotationFile {
    return {
      schema: ANNOTATIONS_SCHEMA,
      system: this.system,
      word_count: this.wordCount,
      annotations: this.drafts.map((draft) => ({ ...draft })),
    };
  }

  importAnnotations(file: AnnotationFile): void {
    this.system = file.system;
    this.wordCount = file.word_count;
    this.drafts = file.annotations.map((record) => ({ ...record }));
  }

  /** Serializable autosave state (everything except the bundle itself). */
  draftState(): string {
    return JSON.stringify({
      system: this.system,
      word_count: this.wordCount,
      cursor: this.cursor,
      annotations: this.drafts,
    });
  }

  restoreDraftState(text: string): void {
    const doc = JSON.parse(text) as {
      system?: string;
      word_count?: number;
      cursor?: number;
      annotations?: AnnotationRecord[];
    };
    const file = parseAnnotationFile({
      schema: ANNOTATIONS_SCHEMA,
      system: doc.system ?? this.system,
      word_count: doc.word_count ?? this.wordCount,
      annotations: doc.annotations ?? [],
    });
    this.importAnnotations(file);
    if (
      typeof doc.cursor === "number" &&
      doc.cursor >= 0 &&
      doc.cursor < this.bundle.lines.length
    ) {
      this.cursor = doc.cursor;
    }
  }

  storageKey(): string {
    return `mqm-annotator/${this.bundle.provenance.run_id}`;
  }
}
