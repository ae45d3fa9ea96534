import { describe, expect, it } from "vitest";

import type { LabelEvent } from "../src/api.js";
import {
  markRegion,
  parseLabels,
  removeEvent,
  serializeLabels,
  shiftEvent,
  sortEvents,
} from "../src/labels.js";

// exact bytes produced by the backend serializer for the same label content;
// regenerate with the Python toolkit if the canonical format ever changes
const FIVE_FIXTURE =
  "start_idx,end_idx,class_name,scheme=five\n" +
  "0,120,fixation_stationary\n" +
  "120,135,saccade\n" +
  "135,240,pursuit\n" +
  "240,250,none\n" +
  "250,290,fixation_translation\n" +
  "290,300,none\n";

const COLLAPSED_FIXTURE =
  "start_idx,end_idx,class_name,scheme=collapsed\n" +
  "0,5,none\n" +
  "5,50,fixation\n" +
  "50,60,saccade\n" +
  "60,70,none\n" +
  "70,90,pursuit\n" +
  "90,100,none\n";

describe("serializeLabels", () => {
  it("is byte-identical to the backend for the five-class fixture", () => {
    const events: LabelEvent[] = [
      { start_idx: 0, end_idx: 120, class_name: "fixation_stationary" },
      { start_idx: 120, end_idx: 135, class_name: "saccade" },
      { start_idx: 135, end_idx: 240, class_name: "pursuit" },
      { start_idx: 250, end_idx: 290, class_name: "fixation_translation" },
    ];
    expect(serializeLabels(events, "five", 300)).toBe(FIVE_FIXTURE);
  });

  it("is byte-identical to the backend for the collapsed fixture", () => {
    const events: LabelEvent[] = [
      { start_idx: 5, end_idx: 50, class_name: "fixation" },
      { start_idx: 50, end_idx: 60, class_name: "saccade" },
      { start_idx: 70, end_idx: 90, class_name: "pursuit" },
    ];
    expect(serializeLabels(events, "collapsed", 100)).toBe(COLLAPSED_FIXTURE);
  });

  it("serializes an empty set as just the header", () => {
    expect(serializeLabels([], "five", 0)).toBe(
      "start_idx,end_idx,class_name,scheme=five\n",
    );
  });

  it("round-trips through parseLabels", () => {
    const parsed = parseLabels(FIVE_FIXTURE);
    expect(parsed.scheme).toBe("five");
    expect(parsed.events).toHaveLength(4); // none gaps are not events
    expect(serializeLabels(parsed.events, parsed.scheme, 300)).toBe(FIVE_FIXTURE);
  });

  it("rejects unknown headers and schemes", () => {
    expect(() => parseLabels("nope\n")).toThrow(/header/);
    expect(() =>
      parseLabels("start_idx,end_idx,class_name,scheme=weird\n"),
    ).toThrow(/scheme/);
  });
});

describe("markRegion", () => {
  const base: LabelEvent[] = [
    { start_idx: 10, end_idx: 20, class_name: "saccade" },
  ];

  it("adds a non-overlapping event in sorted position", () => {
    const r = markRegion(
      base,
      { start_idx: 0, end_idx: 10, class_name: "pursuit" },
      100,
      "five",
    );
    expect(r.ok).toBe(true);
    expect(r.events.map((e) => e.start_idx)).toEqual([0, 10]);
  });

  it("refuses overlaps at entry", () => {
    const r = markRegion(
      base,
      { start_idx: 15, end_idx: 30, class_name: "pursuit" },
      100,
      "five",
    );
    expect(r.ok).toBe(false);
    expect(r.reason).toMatch(/overlap/);
    expect(r.events).toBe(base); // untouched
  });

  it("refuses empty, out-of-range, and unknown-class regions", () => {
    expect(
      markRegion(base, { start_idx: 5, end_idx: 5, class_name: "pursuit" }, 100, "five").ok,
    ).toBe(false);
    expect(
      markRegion(base, { start_idx: 90, end_idx: 110, class_name: "pursuit" }, 100, "five").ok,
    ).toBe(false);
    expect(
      markRegion(base, { start_idx: 0, end_idx: 5, class_name: "blink" }, 100, "five").ok,
    ).toBe(false);
    expect(
      markRegion(base, { start_idx: 0, end_idx: 5, class_name: "none" }, 100, "five").ok,
    ).toBe(false);
  });
});

describe("shiftEvent", () => {
  const events: LabelEvent[] = [
    { start_idx: 10, end_idx: 20, class_name: "saccade" },
    { start_idx: 30, end_idx: 40, class_name: "pursuit" },
  ];

  it("translates by whole samples", () => {
    const r = shiftEvent(events, 0, 5, 100);
    expect(r.ok).toBe(true);
    expect(r.events[0]).toEqual({
      start_idx: 15,
      end_idx: 25,
      class_name: "saccade",
    });
  });

  it("refuses collisions and out-of-range shifts", () => {
    expect(shiftEvent(events, 0, 25, 100).ok).toBe(false); // into neighbour
    expect(shiftEvent(events, 0, -11, 100).ok).toBe(false); // before start
    expect(shiftEvent(events, 1, 70, 100).ok).toBe(false); // past the end
    expect(shiftEvent(events, 5, 1, 100).ok).toBe(false); // no such event
  });

  it("keeps the list sorted after a shift that reorders", () => {
    const r = shiftEvent(events, 1, -25, 100); // [5, 15) would overlap? no: 30-25=5,40-25=15 overlaps [10,20)
    expect(r.ok).toBe(false);
    const r2 = shiftEvent(events, 0, 45, 100); // [55, 65): now after the pursuit
    expect(r2.ok).toBe(true);
    expect(r2.events.map((e) => e.start_idx)).toEqual([30, 55]);
  });
});

describe("removeEvent", () => {
  it("removes by index and rejects bad indices", () => {
    const events = sortEvents([
      { start_idx: 0, end_idx: 5, class_name: "saccade" },
      { start_idx: 10, end_idx: 15, class_name: "pursuit" },
    ]);
    const r = removeEvent(events, 0);
    expect(r.ok).toBe(true);
    expect(r.events).toHaveLength(1);
    expect(removeEvent(events, 9).ok).toBe(false);
  });
});
