/**
 * Annotation session state: the active recording, the viewport, the selected
 * class, and pending label edits on top of a base version. Submits use
 * optimistic concurrency; a stale base surfaces as a conflict the caller
 * must resolve by reloading.
 *
 * Everything here is reconstructible from service data plus the pending
 * edit list — there is no hidden client-only truth.
 */
import { ApiClient, ConflictError, LabelEvent, LabelSet, RecordingInfo } from "./api.js";
import {
  classNames,
  markRegion,
  removeEvent,
  Scheme,
  serializeLabels,
  shiftEvent,
  sortEvents,
} from "./labels.js";
import { clampViewport, Viewport } from "./trace.js";

export type SubmitOutcome =
  | { kind: "saved"; version: number }
  | { kind: "conflict"; message: string; serverLabels: LabelSet }
  | { kind: "error"; message: string };

// radio-button order from the labelling workflow, bound to number keys
export function classForKey(scheme: Scheme, key: string): string | null {
  const names = classNames(scheme);
  const idx = Number(key);
  if (!Number.isInteger(idx) || idx < 1 || idx >= names.length) return null;
  return names[idx];
}

export class AnnotationSession {
  recording: RecordingInfo;
  viewport: Viewport;
  scheme: Scheme;
  selectedClass: string;
  /** working copy of the events, including unsubmitted edits */
  events: LabelEvent[] = [];
  baseVersion = 0;
  dirty = false;
  lastError: string | null = null;

  constructor(
    private readonly api: ApiClient,
    recording: RecordingInfo,
  ) {
    this.recording = recording;
    this.viewport = { startS: 0, widthS: Math.min(5, recording.duration_s) };
    this.scheme = "five";
    this.selectedClass = "fixation_stationary";
  }

  async load(): Promise<void> {
    const ls = await this.api.getLabels(this.recording.name);
    this.adopt(ls);
  }

  /** Replaces local state with a server label set (initial load or reload). */
  adopt(ls: LabelSet): void {
    this.baseVersion = ls.version;
    this.scheme = ls.scheme === "collapsed" ? "collapsed" : "five";
    this.events = sortEvents(ls.events);
    this.dirty = false;
    if (!classNames(this.scheme).includes(this.selectedClass)) {
      this.selectedClass = classNames(this.scheme)[1];
    }
  }

  pan(deltaS: number): void {
    this.viewport = clampViewport(
      { startS: this.viewport.startS + deltaS, widthS: this.viewport.widthS },
      this.recording.duration_s,
    );
  }

  zoom(factor: number): void {
    const center = this.viewport.startS + this.viewport.widthS / 2;
    const width = this.viewport.widthS * factor;
    this.viewport = clampViewport(
      { startS: center - width / 2, widthS: width },
      this.recording.duration_s,
    );
  }

  /** Jumps the viewport so the given event is centred ("go-to"). */
  goToEvent(index: number): void {
    const ev = this.events[index];
    if (!ev) return;
    const mid = (ev.start_idx + ev.end_idx) / 2 / this.recording.rate_hz;
    this.viewport = clampViewport(
      { startS: mid - this.viewport.widthS / 2, widthS: this.viewport.widthS },
      this.recording.duration_s,
    );
  }

  private apply(result: { ok: boolean; reason?: string; events: LabelEvent[] }): boolean {
    if (!result.ok) {
      this.lastError = result.reason ?? "edit refused";
      return false;
    }
    this.events = result.events;
    this.dirty = true;
    this.lastError = null;
    return true;
  }

  markSelection(startS: number, endS: number): boolean {
    const r = this.recording.rate_hz;
    return this.apply(
      markRegion(
        this.events,
        {
          start_idx: Math.round(startS * r),
          end_idx: Math.round(endS * r),
          class_name: this.selectedClass,
        },
        this.recording.n_samples,
        this.scheme,
      ),
    );
  }

  remove(index: number): boolean {
    return this.apply(removeEvent(this.events, index));
  }

  shift(index: number, deltaSamples: number): boolean {
    return this.apply(
      shiftEvent(this.events, index, deltaSamples, this.recording.n_samples),
    );
  }

  /** Versioned save. A 409 means someone else saved first. */
  async submit(): Promise<SubmitOutcome> {
    try {
      const saved = await this.api.putLabels(this.recording.name, {
        version: this.baseVersion,
        scheme: this.scheme,
        events: this.events,
      });
      this.baseVersion = saved.version;
      this.dirty = false;
      return { kind: "saved", version: saved.version };
    } catch (err) {
      if (err instanceof ConflictError) {
        const serverLabels = await this.api.getLabels(this.recording.name);
        return { kind: "conflict", message: err.detail, serverLabels };
      }
      return { kind: "error", message: String(err) };
    }
  }

  /** Local canonical CSV of the working copy (matches server export bytes). */
  exportText(): string {
    return serializeLabels(this.events, this.scheme, this.recording.n_samples);
  }
}
