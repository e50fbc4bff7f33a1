/**
 * DOM wiring for the annotation UI. All scoring and schema logic lives
 * in session/score/schema modules; this file only renders state and
 * forwards events.
 *
 * Serve any directory containing both this app and a review bundle,
 * then open index.html?bundle=<path-to-bundle.json>.
 */

import { isSeverity } from "./score.js";
import { parseAnnotationFile, SchemaError } from "./schema.js";
import { AnnotatorSession } from "./session.js";

let session: AnnotatorSession | null = null;
let imageBase = "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(message: string, isError = false): void {
  const status = el<HTMLDivElement>("status");
  status.textContent = message;
  status.className = isError ? "status error" : "status";
}

function fmtScore(value: number): string {
  return value.toFixed(4);
}

function renderScore(): void {
  if (!session) return;
  const counts = session.counts();
  el<HTMLSpanElement>("score-value").textContent = fmtScore(session.liveScore());
  el<HTMLSpanElement>("count-minor").textContent = String(counts.minor);
  el<HTMLSpanElement>("count-major").textContent = String(counts.major);
  el<HTMLSpanElement>("count-critical").textContent = String(counts.critical);
  (el<HTMLInputElement>("word-count")).value = String(session.wordCount);
  (el<HTMLInputElement>("system-name")).value = session.system;
}

function renderLineList(): void {
  if (!session) return;
  const tbody = el<HTMLTableSectionElement>("line-rows");
  tbody.replaceChildren();
  session.lines.forEach((line, index) => {
    const row = document.createElement("tr");
    row.className = index === session!.cursor ? "selected" : "";
    const marks = session!.annotationsFor(line.line_id).length;
    row.innerHTML = "";
    const cells = [
      String(index + 1),
      line.source,
      line.hypothesis,
      line.reference ?? "—",
      marks ? `${marks} ⚑` : "",
    ];
    for (const text of cells) {
      const cell = document.createElement("td");
      cell.textContent = text;
      row.appendChild(cell);
    }
    row.addEventListener("click", () => {
      session!.moveTo(index);
      renderAll();
    });
    tbody.appendChild(row);
  });
}

function renderImagePanel(): void {
  if (!session) return;
  const line = session.currentLine();
  const canvas = el<HTMLCanvasElement>("page-canvas");
  const context = canvas.getContext("2d");
  if (!context) return;
  const image = new Image();
  image.onload = () => {
    const scale = Math.min(1, 460 / image.width);
    canvas.width = Math.round(image.width * scale);
    canvas.height = Math.round(image.height * scale);
    context.drawImage(image, 0, 0, canvas.width, canvas.height);
    const [x, y, w, h] = line.bbox;
    context.strokeStyle = "#d03049";
    context.lineWidth = 3;
    context.strokeRect(x * scale, y * scale, w * scale, h * scale);
  };
  image.onerror = () => {
    canvas.width = 460;
    canvas.height = 200;
    context.fillStyle = "#eee";
    context.fillRect(0, 0, canvas.width, canvas.height);
    context.fillStyle = "#666";
    context.fillText(`image not reachable: ${imageBase}${line.image}`, 10, 100);
  };
  image.src = imageBase + line.image;
}

function renderDetail(): void {
  if (!session) return;
  const line = session.currentLine();
  el<HTMLDivElement>("detail-source").textContent = line.source;
  el<HTMLDivElement>("detail-hypothesis").textContent = line.hypothesis;
  el<HTMLDivElement>("detail-reference").textContent = line.reference ?? "(no reference)";

  const list = el<HTMLUListElement>("annotation-list");
  list.replaceChildren();
  session.drafts.forEach((draft, index) => {
    if (draft.line_id !== line.line_id) return;
    const item = document.createElement("li");
    const span = draft.span ? ` [${draft.span[0]}..${draft.span[1]}]` : "";
    item.textContent = `${draft.issue_type} / ${draft.severity}${span} ${draft.note}`;
    const remove = document.createElement("button");
    remove.textContent = "remove";
    remove.addEventListener("click", () => {
      session!.removeAnnotation(index);
      autosave();
      renderAll();
    });
    item.appendChild(remove);
    list.appendChild(item);
  });
  renderImagePanel();
}

function renderTaxonomy(): void {
  if (!session) return;
  const select = el<HTMLSelectElement>("issue-type");
  select.replaceChildren();
  for (const group of session.bundle.taxonomy) {
    const optgroup = document.createElement("optgroup");
    optgroup.label = group.label;
    for (const issue of group.issues) {
      const option = document.createElement("option");
      option.value = issue.id;
      option.textContent = issue.label;
      optgroup.appendChild(option);
    }
    select.appendChild(optgroup);
  }
}

function renderAll(): void {
  renderScore();
  renderLineList();
  renderDetail();
}

function autosave(): void {
  if (!session) return;
  try {
    localStorage.setItem(session.storageKey(), session.draftState());
  } catch {
    // storage may be unavailable (private mode); drafts still live in memory
  }
}

function restoreAutosave(): void {
  if (!session) return;
  const saved = localStorage.getItem(session.storageKey());
  if (!saved) return;
  try {
    session.restoreDraftState(saved);
    setStatus("restored autosaved drafts");
  } catch {
    localStorage.removeItem(session.storageKey());
  }
}

function onAnnotate(): void {
  if (!session) return;
  const severity = el<HTMLSelectElement>("severity").value;
  if (!isSeverity(severity)) {
    setStatus(`unknown severity ${severity}`, true);
    return;
  }
  if (severity === "critical" &&
      !window.confirm("Mark this error as critical? Critical carries the " +
                      "heaviest penalty (25 per word count).")) {
    return;
  }
  const spanText = el<HTMLInputElement>("span").value.trim();
  let span: [number, number] | undefined;
  if (spanText) {
    const parts = spanText.split(/[-:,.]+/).map((v) => Number.parseInt(v, 10));
    if (parts.length !== 2 || parts.some((v) => Number.isNaN(v))) {
      setStatus("span must look like 3-12", true);
      return;
    }
    span = [parts[0]!, parts[1]!];
  }
  try {
    session.annotate(
      session.currentLine().line_id,
      el<HTMLSelectElement>("issue-type").value,
      severity,
      span,
      el<HTMLInputElement>("note").value,
    );
  } catch (error) {
    setStatus(String(error), true);
    return;
  }
  el<HTMLInputElement>("span").value = "";
  el<HTMLInputElement>("note").value = "";
  autosave();
  renderAll();
  setStatus("annotation added");
}

function onExport(): void {
  if (!session) return;
  const doc = session.exportAnnotations();
  const blob = new Blob([JSON.stringify(doc, null, 2) + "\n"],
                        { type: "application/json" });
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(blob);
  anchor.download = `annotations-${session.system || "system"}.json`;
  anchor.click();
  URL.revokeObjectURL(anchor.href);
  setStatus(`exported ${doc.annotations.length} annotations`);
}

async function onImportFile(file: File): Promise<void> {
  if (!session) return;
  try {
    const parsed = parseAnnotationFile(JSON.parse(await file.text()));
    session.importAnnotations(parsed);
    autosave();
    renderAll();
    setStatus(`imported ${parsed.annotations.length} annotations`);
  } catch (error) {
    setStatus(error instanceof SchemaError ? error.message : String(error), true);
  }
}

async function loadBundle(url: string): Promise<void> {
  const reply = await fetch(url);
  if (!reply.ok) {
    throw new Error(`cannot fetch ${url}: HTTP ${reply.status}`);
  }
  session = AnnotatorSession.fromJson(await reply.text());
  imageBase = url.slice(0, url.lastIndexOf("/") + 1);
  restoreAutosave();
  renderTaxonomy();
  renderAll();
  setStatus(`loaded ${session.lines.length} lines `
    + `(${session.bundle.provenance.approach} on `
    + `${session.bundle.provenance.volume})`);
}

function init(): void {
  const params = new URLSearchParams(window.location.search);
  const bundleUrl = params.get("bundle") ?? "bundle.json";

  el<HTMLButtonElement>("annotate").addEventListener("click", onAnnotate);
  el<HTMLButtonElement>("export").addEventListener("click", onExport);
  el<HTMLInputElement>("import-file").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    if (input.files?.[0]) void onImportFile(input.files[0]);
  });
  el<HTMLInputElement>("word-count").addEventListener("change", (event) => {
    if (!session) return;
    const value = Number.parseInt((event.target as HTMLInputElement).value, 10);
    if (Number.isInteger(value) && value > 0) {
      session.wordCount = value;
      autosave();
      renderScore();
    } else {
      setStatus("word count must be a positive integer", true);
    }
  });
  el<HTMLInputElement>("system-name").addEventListener("change", (event) => {
    if (!session) return;
    session.system = (event.target as HTMLInputElement).value;
    autosave();
  });
  el<HTMLButtonElement>("prev-line").addEventListener("click", () => {
    if (session && session.cursor > 0) {
      session.moveTo(session.cursor - 1);
      renderAll();
    }
  });
  el<HTMLButtonElement>("next-line").addEventListener("click", () => {
    if (session && session.cursor < session.lines.length - 1) {
      session.moveTo(session.cursor + 1);
      renderAll();
    }
  });

  loadBundle(bundleUrl).catch((error) => {
    setStatus(error instanceof SchemaError
      ? `bundle rejected — ${error.message}`
      : String(error), true);
  });
}

document.addEventListener("DOMContentLoaded", init);
