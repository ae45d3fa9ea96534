/**
 * Browser entry point: recording picker, stacked eye/head velocity panels
 * with confidence shading, label band, and the edit controls. All state
 * lives in AnnotationSession; this file only wires it to the DOM.
 */
import { ApiClient } from "./api.js";
import { classNames } from "./labels.js";
import { AnnotationSession, classForKey } from "./session.js";
import {
  EYE_CHANNELS,
  HEAD_CHANNELS,
  layoutPanel,
  pointsForWidth,
} from "./trace.js";

const PANEL_W = 960;
const PANEL_H = 160;

const CHANNEL_COLORS: Record<string, string> = {
  eye_abs: "#1f77b4",
  eye_az: "#2ca02c",
  eye_el: "#9467bd",
  head_abs: "#d62728",
  head_az: "#ff7f0e",
  head_el: "#8c564b",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

class App {
  private api = new ApiClient();
  private session: AnnotationSession | null = null;
  private status!: HTMLElement;
  private panels!: HTMLElement;
  private eventList!: HTMLElement;

  async start(root: HTMLElement): Promise<void> {
    this.status = el("div", { class: "status" });
    this.panels = el("div", { class: "panels" });
    this.eventList = el("div", { class: "events" });
    const picker = el("select");
    root.append(this.status, picker, this.panels, this.eventList);

    try {
      const recordings = await this.api.listRecordings();
      for (const rec of recordings) {
        picker.append(el("option", { value: rec.name }, rec.name));
      }
      picker.onchange = () => {
        const rec = recordings.find((r) => r.name === picker.value);
        if (rec) void this.open(rec.name, recordings);
      };
      if (recordings.length > 0) await this.open(recordings[0].name, recordings);
    } catch (err) {
      // degraded state: the backend is unreachable, say so loudly
      this.status.textContent = `service unreachable: ${String(err)}`;
      this.status.classList.add("error");
      return;
    }

    document.addEventListener("keydown", (ev) => this.onKey(ev));
  }

  private async open(
    name: string,
    recordings: { name: string }[],
  ): Promise<void> {
    const infos = await this.api.listRecordings();
    const info = infos.find((r) => r.name === name);
    if (!info) return;
    this.session = new AnnotationSession(this.api, info);
    await this.session.load();
    await this.refresh();
    void recordings;
  }

  private onKey(ev: KeyboardEvent): void {
    const s = this.session;
    if (!s) return;
    if (ev.key === "ArrowLeft") s.pan(-s.viewport.widthS / 4);
    else if (ev.key === "ArrowRight") s.pan(s.viewport.widthS / 4);
    else if (ev.key === "+") s.zoom(0.5);
    else if (ev.key === "-") s.zoom(2);
    else {
      const cls = classForKey(s.scheme, ev.key);
      if (cls) s.selectedClass = cls;
      else return;
    }
    void this.refresh();
  }

  private async refresh(): Promise<void> {
    const s = this.session;
    if (!s) return;
    try {
      const trace = await this.api.getTrace(s.recording.name, {
        startS: s.viewport.startS,
        endS: s.viewport.startS + s.viewport.widthS,
        points: pointsForWidth(PANEL_W),
      });
      this.panels.replaceChildren(
        this.renderPanel(trace, EYE_CHANNELS, "eye velocity"),
        this.renderPanel(trace, HEAD_CHANNELS, "head velocity"),
      );
      this.renderEvents();
      this.status.textContent =
        `${s.recording.name}  class=${s.selectedClass}` +
        `  v${s.baseVersion}${s.dirty ? "*" : ""}` +
        (s.lastError ? `  [${s.lastError}]` : "");
      this.status.classList.remove("error");
    } catch (err) {
      this.status.textContent = `service unreachable: ${String(err)}`;
      this.status.classList.add("error");
    }
  }

  private renderPanel(
    trace: Parameters<typeof layoutPanel>[0],
    channels: readonly string[],
    title: string,
  ): HTMLElement {
    const geo = layoutPanel(trace, channels, PANEL_W, PANEL_H);
    const box = el("div", { class: "panel" });
    box.append(el("div", { class: "title" }, title));
    const svg = svgEl("svg", {
      width: String(PANEL_W),
      height: String(PANEL_H),
      viewBox: `0 0 ${PANEL_W} ${PANEL_H}`,
    });
    for (const [x0, x1] of geo.maskRegions) {
      svg.append(
        svgEl("rect", {
          x: String(x0),
          y: "0",
          width: String(Math.max(x1 - x0, 1)),
          height: String(PANEL_H),
          fill: "#cccccc",
          opacity: "0.5",
        }),
      );
    }
    for (const [name, pts] of Object.entries(geo.lines)) {
      svg.append(
        svgEl("polyline", {
          points: pts.map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`).join(" "),
          fill: "none",
          stroke: CHANNEL_COLORS[name] ?? "#000",
          "stroke-width": "1",
        }),
      );
    }
    box.append(svg);
    return box;
  }

  private renderEvents(): void {
    const s = this.session;
    if (!s) return;
    const list = el("div");
    list.append(el("div", { class: "title" }, `events (${s.events.length})`));
    s.events.forEach((ev, i) => {
      const row = el("div", { class: "event-row" });
      row.append(
        el("span", {}, `${ev.class_name} [${ev.start_idx}, ${ev.end_idx})`),
      );
      const goto = el("button", {}, "go-to");
      goto.onclick = () => {
        s.goToEvent(i);
        void this.refresh();
      };
      const del = el("button", {}, "remove");
      del.onclick = () => {
        s.remove(i);
        void this.refresh();
      };
      row.append(goto, del);
      list.append(row);
    });
    const save = el("button", {}, "save");
    save.onclick = async () => {
      const outcome = await s.submit();
      if (outcome.kind === "conflict") {
        // surface the conflict; the user chooses to reload-and-merge
        if (confirm(`conflict: ${outcome.message}\nReload server labels?`)) {
          s.adopt(outcome.serverLabels);
        }
      } else if (outcome.kind === "error") {
        this.status.textContent = outcome.message;
      }
      void this.refresh();
    };
    const exportBtn = el("button", {}, "export");
    exportBtn.onclick = async () => {
      const text = await this.api.exportLabels(s.recording.name);
      const blob = new Blob([text], { type: "text/csv" });
      const a = el("a", {
        href: URL.createObjectURL(blob),
        download: `${s.recording.name}.labels.csv`,
      });
      a.click();
    };
    const classPicker = el("select");
    for (const name of classNames(s.scheme).slice(1)) {
      classPicker.append(el("option", { value: name }, name));
    }
    classPicker.value = s.selectedClass;
    classPicker.onchange = () => {
      s.selectedClass = classPicker.value;
      void this.refresh();
    };
    list.append(classPicker, save, exportBtn);
    this.eventList.replaceChildren(list);
  }
}

const rootNode = document.getElementById("app");
if (rootNode) void new App().start(rootNode);
