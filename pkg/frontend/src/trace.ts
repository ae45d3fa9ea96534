/**
 * Rendering model for the velocity trace panels. DOM-free: converts the
 * service's decimated channel payloads into SVG polyline geometry plus
 * shaded low-confidence regions, so it is unit-testable headlessly.
 */
import type { TracePayload } from "./api.js";

// samples with tracker confidence below this are treated as masked
export const CONFIDENCE_THRESHOLD = 0.3;

export const EYE_CHANNELS = ["eye_abs", "eye_az", "eye_el"] as const;
export const HEAD_CHANNELS = ["head_abs", "head_az", "head_el"] as const;

export interface Viewport {
  startS: number;
  widthS: number;
}

/** Clamps a requested viewport to the recording bounds. */
export function clampViewport(
  vp: Viewport,
  durationS: number,
  minWidthS = 0.05,
): Viewport {
  const width = Math.min(Math.max(vp.widthS, minWidthS), durationS);
  const start = Math.min(Math.max(vp.startS, 0), durationS - width);
  return { startS: start, widthS: width };
}

export interface PanelGeometry {
  /** one polyline per channel, as [x, y] pixel pairs */
  lines: Record<string, [number, number][]>;
  /** [xStart, xEnd] pixel ranges where confidence dips below threshold */
  maskRegions: [number, number][];
  vMin: number;
  vMax: number;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return lo <= hi ? [lo, hi] : [0, 1];
}

/**
 * Lays out the given channels of a trace payload into a width x height
 * pixel box. The shared vertical scale spans every plotted channel so the
 * panels stay comparable.
 */
export function layoutPanel(
  trace: TracePayload,
  channelNames: readonly string[],
  width: number,
  height: number,
): PanelGeometry {
  const t0 = trace.start_s;
  const t1 = trace.end_s;
  const span = Math.max(t1 - t0, 1e-9);

  let vMin = Infinity;
  let vMax = -Infinity;
  for (const name of channelNames) {
    const ch = trace.channels[name];
    if (!ch) continue;
    const [lo, hi] = extent(ch.v);
    vMin = Math.min(vMin, lo);
    vMax = Math.max(vMax, hi);
  }
  if (!(vMin < vMax)) {
    vMin = 0;
    vMax = 1;
  }

  const x = (t: number) => ((t - t0) / span) * width;
  const y = (v: number) => height - ((v - vMin) / (vMax - vMin)) * height;

  const lines: Record<string, [number, number][]> = {};
  for (const name of channelNames) {
    const ch = trace.channels[name];
    if (!ch) continue;
    lines[name] = ch.t.map((t, i) => [x(t), y(ch.v[i])] as [number, number]);
  }

  const maskRegions: [number, number][] = [];
  const conf = trace.channels["confidence"];
  if (conf) {
    let open: number | null = null;
    for (let i = 0; i < conf.v.length; i++) {
      const low = conf.v[i] < CONFIDENCE_THRESHOLD;
      if (low && open === null) open = x(conf.t[i]);
      if (!low && open !== null) {
        maskRegions.push([open, x(conf.t[i])]);
        open = null;
      }
    }
    if (open !== null) maskRegions.push([open, width]);
  }

  return { lines, maskRegions, vMin, vMax };
}

/** Peak absolute value per channel, for extrema cross-checks against the API. */
export function channelExtrema(trace: TracePayload): Record<string, [number, number]> {
  const out: Record<string, [number, number]> = {};
  for (const [name, ch] of Object.entries(trace.channels)) {
    out[name] = extent(ch.v);
  }
  return out;
}

/** Number of points to request for a viewport at roughly 2 samples/pixel. */
export function pointsForWidth(pixelWidth: number): number {
  return Math.max(16, 2 * Math.round(pixelWidth));
}
