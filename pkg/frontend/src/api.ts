/**
 * Typed client for the annotation backend's HTTP/JSON API.
 *
 * The fetch implementation is injectable so tests can run against a fake
 * transport; the default is the global fetch.
 */

export interface RecordingInfo {
  name: string;
  n_samples: number;
  rate_hz: number;
  duration_s: number;
}

export interface ChannelSeries {
  t: number[];
  v: number[];
}

export interface TracePayload {
  name: string;
  rate_hz: number;
  start_s: number;
  end_s: number;
  n_source_samples: number;
  channels: Record<string, ChannelSeries>;
}

export interface LabelEvent {
  start_idx: number;
  end_idx: number;
  class_name: string;
}

export interface LabelSet {
  version: number;
  scheme: string;
  events: LabelEvent[];
}

export interface GazePayload {
  name: string;
  t: number[];
  x: number[];
  y: number[];
  z: number[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Thrown on a 409: someone else saved a newer label version. */
export class ConflictError extends ApiError {
  constructor(detail: string) {
    super(409, detail);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  private async request(url: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchImpl(this.baseUrl + url, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (typeof body?.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body: keep the status text */
      }
      if (res.status === 409) throw new ConflictError(detail);
      throw new ApiError(res.status, detail);
    }
    return res;
  }

  async listRecordings(): Promise<RecordingInfo[]> {
    return (await this.request("/api/recordings")).json();
  }

  async getTrace(
    name: string,
    opts: { startS?: number; endS?: number; points?: number } = {},
  ): Promise<TracePayload> {
    const q = new URLSearchParams();
    if (opts.startS !== undefined) q.set("start_s", String(opts.startS));
    if (opts.endS !== undefined) q.set("end_s", String(opts.endS));
    if (opts.points !== undefined) q.set("points", String(opts.points));
    const qs = q.toString();
    const url = `/api/recordings/${encodeURIComponent(name)}/trace${qs ? "?" + qs : ""}`;
    return (await this.request(url)).json();
  }

  async getGaze(name: string, stride = 1): Promise<GazePayload> {
    const url = `/api/recordings/${encodeURIComponent(name)}/gaze?stride=${stride}`;
    return (await this.request(url)).json();
  }

  async getLabels(name: string): Promise<LabelSet> {
    return (
      await this.request(`/api/recordings/${encodeURIComponent(name)}/labels`)
    ).json();
  }

  /** Versioned save; rejects with ConflictError when the base is stale. */
  async putLabels(name: string, labels: LabelSet): Promise<LabelSet> {
    const res = await this.request(
      `/api/recordings/${encodeURIComponent(name)}/labels`,
      {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(labels),
      },
    );
    return res.json();
  }

  /** Server-side canonical CSV export (byte-identical to CLI output). */
  async exportLabels(name: string): Promise<string> {
    return (
      await this.request(`/api/recordings/${encodeURIComponent(name)}/export`)
    ).text();
  }
}
