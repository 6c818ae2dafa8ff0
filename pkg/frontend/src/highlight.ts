/**
 * HTML generation for the editor's two overlay layers: token colors and
 * diagnostic squiggles.  Pure string functions so the span arithmetic is
 * testable without a DOM.
 */

import { tokenize } from "./tokens.js";
import { ServiceDiagnostic, Span } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Token-colored HTML for the highlight layer behind the textarea. */
export function highlightHtml(text: string): string {
  return tokenize(text)
    .map((token) =>
      token.kind === "space"
        ? escapeHtml(token.text)
        : `<span class="tok-${token.kind}">${escapeHtml(token.text)}</span>`
    )
    .join("");
}

/**
 * Convert a 1-based line/col span (end_col exclusive) to character offsets
 * into `text`.  Returns null for the all-zero "unknown position" span.
 * Offsets are clamped to the text so a span pointing at EOF still renders.
 */
export function spanToOffsets(text: string, span: Span): { start: number; end: number } | null {
  if (span.line <= 0) {
    return null;
  }
  const lineStarts = [0];
  for (let i = 0; i < text.length; i += 1) {
    if (text[i] === "\n") {
      lineStarts.push(i + 1);
    }
  }
  const offsetOf = (line: number, col: number): number => {
    const lineIndex = Math.min(Math.max(line - 1, 0), lineStarts.length - 1);
    const lineStart = lineStarts[lineIndex] as number;
    const lineEnd = lineIndex + 1 < lineStarts.length ? (lineStarts[lineIndex + 1] as number) - 1 : text.length;
    return Math.min(lineStart + Math.max(col - 1, 0), lineEnd);
  };
  const start = offsetOf(span.line, span.col);
  const end = Math.max(offsetOf(span.end_line || span.line, span.end_col || span.col), start);
  return { start, end };
}

/**
 * HTML for the squiggle layer: the diagnosed character range — exactly the
 * span the service reported — wrapped in a marker element, everything else
 * kept verbatim so the layer aligns with the text.
 */
export function squiggleHtml(text: string, diagnostics: readonly ServiceDiagnostic[]): string {
  const ranges = diagnostics
    .map((d) => {
      const offsets = spanToOffsets(text, d);
      return offsets ? { ...offsets, message: d.message } : null;
    })
    .filter((r): r is { start: number; end: number; message: string } => r !== null)
    .sort((a, b) => a.start - b.start);

  let html = "";
  let cursor = 0;
  for (const range of ranges) {
    if (range.start < cursor) {
      continue; // overlapping spans: first one wins
    }
    html += escapeHtml(text.slice(cursor, range.start));
    html += `<span class="squiggle" data-message="${escapeHtml(range.message)}">`;
    html += escapeHtml(text.slice(range.start, range.end));
    html += "</span>";
    cursor = range.end;
  }
  html += escapeHtml(text.slice(cursor));
  return html;
}
