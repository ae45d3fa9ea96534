/**
 * Label-set editing model: non-overlapping event lists over sample indices,
 * with the same canonical CSV serialization the backend and CLI use.
 */
import type { LabelEvent } from "./api.js";

export const FIVE_CLASS_NAMES = [
  "none",
  "fixation_stationary",
  "fixation_translation",
  "pursuit",
  "saccade",
] as const;

export const COLLAPSED_NAMES = ["none", "fixation", "pursuit", "saccade"] as const;

export type Scheme = "five" | "collapsed";

export function classNames(scheme: Scheme): readonly string[] {
  return scheme === "collapsed" ? COLLAPSED_NAMES : FIVE_CLASS_NAMES;
}

export function isValidClass(scheme: Scheme, name: string): boolean {
  return classNames(scheme).includes(name) && name !== "none";
}

/** Events sorted by start; [start_idx, end_idx) half-open. */
export function sortEvents(events: LabelEvent[]): LabelEvent[] {
  return [...events].sort((a, b) => a.start_idx - b.start_idx);
}

export function eventsOverlap(a: LabelEvent, b: LabelEvent): boolean {
  return a.start_idx < b.end_idx && b.start_idx < a.end_idx;
}

export function findOverlap(
  events: LabelEvent[],
  candidate: LabelEvent,
  ignoreIndex = -1,
): number {
  return events.findIndex(
    (ev, i) => i !== ignoreIndex && eventsOverlap(ev, candidate),
  );
}

export interface EditResult {
  ok: boolean;
  reason?: string;
  events: LabelEvent[];
}

/** Adds an event; refused when it would overlap or leave the recording. */
export function markRegion(
  events: LabelEvent[],
  candidate: LabelEvent,
  nSamples: number,
  scheme: Scheme,
): EditResult {
  if (!isValidClass(scheme, candidate.class_name)) {
    return { ok: false, reason: `unknown class ${candidate.class_name}`, events };
  }
  if (candidate.end_idx <= candidate.start_idx) {
    return { ok: false, reason: "empty region", events };
  }
  if (candidate.start_idx < 0 || candidate.end_idx > nSamples) {
    return { ok: false, reason: "region outside the recording", events };
  }
  if (findOverlap(events, candidate) >= 0) {
    return { ok: false, reason: "overlaps an existing event", events };
  }
  return { ok: true, events: sortEvents([...events, candidate]) };
}

export function removeEvent(events: LabelEvent[], index: number): EditResult {
  if (index < 0 || index >= events.length) {
    return { ok: false, reason: "no such event", events };
  }
  return { ok: true, events: events.filter((_, i) => i !== index) };
}

/** Translates one event by a whole number of samples. */
export function shiftEvent(
  events: LabelEvent[],
  index: number,
  deltaSamples: number,
  nSamples: number,
): EditResult {
  const ev = events[index];
  if (!ev) return { ok: false, reason: "no such event", events };
  const moved: LabelEvent = {
    start_idx: ev.start_idx + deltaSamples,
    end_idx: ev.end_idx + deltaSamples,
    class_name: ev.class_name,
  };
  if (moved.start_idx < 0 || moved.end_idx > nSamples) {
    return { ok: false, reason: "shift leaves the recording", events };
  }
  if (findOverlap(events, moved, index) >= 0) {
    return { ok: false, reason: "shift collides with a neighbour", events };
  }
  const next = [...events];
  next[index] = moved;
  return { ok: true, events: sortEvents(next) };
}

/**
 * Canonical CSV text: header with the scheme token, one sorted run per line.
 * The backend serializer writes every run of the sample sequence, including
 * the unlabelled gaps as explicit `none` rows; gaps are reconstructed here
 * from the recording length so exports stay byte-identical to it.
 */
export function serializeLabels(
  events: LabelEvent[],
  scheme: Scheme,
  nSamples: number,
): string {
  const lines = [`start_idx,end_idx,class_name,scheme=${scheme}`];
  let cursor = 0;
  for (const ev of sortEvents(events)) {
    if (ev.start_idx > cursor) {
      lines.push(`${cursor},${ev.start_idx},none`);
    }
    lines.push(`${ev.start_idx},${ev.end_idx},${ev.class_name}`);
    cursor = ev.end_idx;
  }
  if (cursor < nSamples) {
    lines.push(`${cursor},${nSamples},none`);
  }
  return lines.join("\n") + "\n";
}

export function parseLabels(text: string): { scheme: Scheme; events: LabelEvent[] } {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  const header = (lines[0] ?? "").split(",");
  if (
    header[0] !== "start_idx" ||
    header[1] !== "end_idx" ||
    header[2] !== "class_name"
  ) {
    throw new Error("unexpected label header");
  }
  let scheme: Scheme = "five";
  for (const extra of header.slice(3)) {
    if (extra.startsWith("scheme=")) {
      const s = extra.slice("scheme=".length);
      if (s !== "five" && s !== "collapsed") throw new Error(`unknown scheme ${s}`);
      scheme = s;
    }
  }
  const events: LabelEvent[] = [];
  for (const line of lines.slice(1)) {
    const [s, e, name] = line.split(",");
    const start = Number(s);
    const end = Number(e);
    if (!Number.isInteger(start) || !Number.isInteger(end) || !name) {
      throw new Error(`bad event row: ${line}`);
    }
    // `none` rows encode the gaps between events, not events themselves
    if (name !== "none") {
      events.push({ start_idx: start, end_idx: end, class_name: name });
    }
  }
  return { scheme, events: sortEvents(events) };
}
