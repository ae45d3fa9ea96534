/**
 * In-memory stand-in for the annotation backend, mirroring its versioned
 * compare-and-swap label writes and canonical CSV export. Used as the
 * injectable fetch implementation in tests.
 */
import type { FetchLike, LabelSet, RecordingInfo } from "../src/api.js";
import { serializeLabels, sortEvents } from "../src/labels.js";

export class FakeBackend {
  labels: Map<string, LabelSet> = new Map();

  constructor(public recordings: RecordingInfo[]) {
    for (const rec of recordings) {
      this.labels.set(rec.name, { version: 0, scheme: "five", events: [] });
    }
  }

  get fetch(): FetchLike {
    return async (url, init) => this.handle(url, init);
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private async handle(url: string, init?: RequestInit): Promise<Response> {
    const path = url.split("?")[0];
    if (path === "/api/recordings") {
      return this.json(200, this.recordings);
    }
    const m = path.match(/^\/api\/recordings\/([^/]+)\/(labels|export|trace)$/);
    if (!m) return this.json(404, { detail: "no route" });
    const [, name, op] = m;
    const rec = this.recordings.find((r) => r.name === name);
    if (!rec) return this.json(404, { detail: `unknown recording '${name}'` });
    const current = this.labels.get(name)!;

    if (op === "labels" && (init?.method ?? "GET") === "PUT") {
      const incoming = JSON.parse(String(init?.body)) as LabelSet;
      if (incoming.version !== current.version) {
        return this.json(409, {
          detail: `stale version ${incoming.version}; current is ${current.version}`,
        });
      }
      const stored: LabelSet = {
        version: current.version + 1,
        scheme: incoming.scheme,
        events: sortEvents(incoming.events),
      };
      this.labels.set(name, stored);
      return this.json(200, stored);
    }
    if (op === "labels") {
      return this.json(200, current);
    }
    if (op === "export") {
      const text = serializeLabels(
        current.events,
        current.scheme as "five" | "collapsed",
        rec.n_samples,
      );
      return new Response(text, {
        status: 200,
        headers: { "Content-Type": "text/csv" },
      });
    }
    return this.json(400, { detail: "trace not faked here" });
  }
}

export function makeRecording(
  name: string,
  nSamples = 1200,
  rateHz = 300,
): RecordingInfo {
  return {
    name,
    n_samples: nSamples,
    rate_hz: rateHz,
    duration_s: nSamples / rateHz,
  };
}
