/** DOM wiring for the what-if explorer. State transitions live in
 * scenario.ts / sequencing.ts; this file only renders and forwards events. */

import { ApiError, Client } from "./api";
import {
  Scales,
  bandGeometry,
  levelStepPath,
  linePath,
  pixelToLevel,
  pixelToStep,
  stepToMinutes,
  xPixel,
  yPixel,
} from "./chart";
import {
  ScenarioDraft,
  apply,
  newDraft,
  segments,
  validTrajectory,
} from "./scenario";
import { SequencerState, acceptResponse, beginRequest, newSequencer } from "./sequencing";
import { SampleItem, WhatIfRequest } from "./types";

const PIN_COLORS = ["#e4572e", "#17bebb", "#76b041", "#9a44ff"];

const apiBase =
  new URLSearchParams(location.search).get("api") ??
  (window as { MCSIM_API_BASE?: string }).MCSIM_API_BASE ??
  "http://127.0.0.1:8008";

const client = new Client(apiBase);

let draft: ScenarioDraft = newDraft();
let seqState: SequencerState = newSequencer();
let currentSample: SampleItem | null = null;

const $ = (id: string) => document.getElementById(id) as HTMLElement;

function banner(message: string | null) {
  const el = $("banner");
  el.textContent = message ?? "";
  el.style.display = message ? "block" : "none";
}

function scales(): Scales {
  const svg = $("chart") as unknown as SVGSVGElement;
  return {
    width: svg.clientWidth || 900,
    height: 320,
    tMin: 0,
    tMax: 30,
    yMin: 20,
    yMax: 160,
  };
}

function render() {
  const s = scales();
  const svg = $("chart");
  const parts: string[] = [];

  // axes: minute grid and pressure grid
  for (let m = 0; m <= 30; m += 5) {
    const x = xPixel(s, m).toFixed(1);
    parts.push(`<line x1="${x}" y1="0" x2="${x}" y2="${s.height}" class="grid"/>`);
    parts.push(`<text x="${x}" y="${s.height + 14}" class="tick">${m}m</text>`);
  }
  for (let p = 40; p <= 160; p += 40) {
    const y = yPixel(s, p).toFixed(1);
    parts.push(`<line x1="0" y1="${y}" x2="${s.width}" y2="${y}" class="grid"/>`);
    parts.push(`<text x="4" y="${(+y - 4).toFixed(1)}" class="tick">${p}</text>`);
  }
  const xSplit = xPixel(s, 15).toFixed(1);
  parts.push(`<line x1="${xSplit}" y1="0" x2="${xSplit}" y2="${s.height}" class="split"/>`);

  if (currentSample) {
    const mapColumn = currentSample.x.map((row) => row[0]);
    parts.push(`<path d="${linePath(s, mapColumn, false)}" class="context"/>`);
  }

  draft.pinned.forEach((pin, i) => {
    const color = PIN_COLORS[i % PIN_COLORS.length];
    parts.push(
      `<path d="${linePath(s, pin.response.mean, true)}" class="pinned" stroke="${color}"/>`,
    );
  });

  if (draft.lastResponse) {
    const r = draft.lastResponse;
    const band = bandGeometry(s, r.q10, r.q90);
    parts.push(`<path d="${band.path}" class="band"/>`);
    parts.push(`<path d="${linePath(s, r.mean, true)}" class="mean"/>`);
    $("trend").textContent = `trend: ${r.trend}`;
    $("meta").textContent =
      `${r.model_version} · ${r.latency_ms.toFixed(0)} ms · n=${draft.eventLog.length} events`;
  } else {
    $("trend").textContent = "trend: –";
  }
  svg.innerHTML = parts.join("");

  // editor lane
  const lane = $("editor");
  const laneParts: string[] = [];
  for (let level = 1; level <= 9; level++) {
    const y = levelY(level).toFixed(1);
    laneParts.push(`<line x1="${xSplit}" y1="${y}" x2="${s.width}" y2="${y}" class="grid"/>`);
    laneParts.push(`<text x="${+xSplit - 16}" y="${(+y + 3).toFixed(1)}" class="tick">P${level}</text>`);
  }
  laneParts.push(
    `<path d="${levelStepPath(s, draft.futurePl, (l) => levelY(l))}" class="levels"/>`,
  );
  for (const [a, b, level] of segments(draft.futurePl)) {
    const x0 = xPixel(s, stepToMinutes(a, true));
    const x1 = xPixel(s, stepToMinutes(b + 1, true));
    const y = levelY(level);
    laneParts.push(
      `<rect x="${x0.toFixed(1)}" y="${(y - 6).toFixed(1)}" width="${(x1 - x0).toFixed(1)}"` +
      ` height="12" class="segment" data-from="${a}" data-to="${b}"/>`,
    );
  }
  lane.innerHTML = laneParts.join("");
  $("pins").textContent = draft.pinned.map((p, i) => `#${i + 1} ${p.label}`).join("  ");
}

const LANE_TOP = 8;
const LANE_HEIGHT = 104;

function levelY(level: number): number {
  return LANE_TOP + LANE_HEIGHT * (1 - (level - 1) / 8);
}

async function refreshForecast() {
  if (!currentSample || !validTrajectory(draft.futurePl)) return;
  const req: WhatIfRequest = {
    context: currentSample.x,
    future_pl: draft.futurePl,
    n_samples: 50,
  };
  const { state, seq } = beginRequest(seqState);
  seqState = state;
  try {
    const resp = await client.predict(req);
    const verdict = acceptResponse(seqState, seq);
    seqState = verdict.state;
    if (verdict.render) {
      draft = apply(draft, { kind: "response", response: resp });
      banner(null);
      render();
    }
  } catch (err) {
    const verdict = acceptResponse(seqState, seq);
    seqState = verdict.state;
    if (err instanceof ApiError) {
      const fields = err.fields.map((f) => f.field).join(", ");
      banner(`${err.message}${fields ? ` [${fields}]` : ""}`);
    } else {
      banner(String(err));
    }
  }
}

function wireEditor() {
  const lane = $("editor");
  let dragging = false;
  let dragStart = 0;

  lane.addEventListener("pointerdown", (ev) => {
    dragging = true;
    const rect = lane.getBoundingClientRect();
    dragStart = pixelToStep(scales(), ev.clientX - rect.left);
  });
  lane.addEventListener("pointerup", (ev) => {
    if (!dragging) return;
    dragging = false;
    const rect = lane.getBoundingClientRect();
    const end = pixelToStep(scales(), ev.clientX - rect.left);
    const level = pixelToLevel(ev.clientY - rect.top, LANE_TOP, LANE_HEIGHT);
    const [from, to] = dragStart <= end ? [dragStart, end] : [end, dragStart];
    const before = draft.futurePl;
    draft = apply(draft, { kind: "edit", from, to, level });
    if (draft.futurePl !== before) {
      render();
      void refreshForecast();
    }
  });
}

async function loadSamples() {
  try {
    const page = await client.samples(0, 25);
    const select = $("samples") as HTMLSelectElement;
    select.innerHTML = page.items
      .map((it) => `<option value="${it.id}">#${it.id} ${it.trend} (domain ${it.domain})</option>`)
      .join("");
    const pick = (idx: number) => {
      currentSample = page.items[idx] ?? null;
      if (currentSample) {
        draft = apply(newDraft(), {
          kind: "load",
          sampleId: currentSample.id,
          level: currentSample.last_level,
        });
        render();
        void refreshForecast();
      }
    };
    select.addEventListener("change", () => pick(select.selectedIndex));
    if (page.items.length) pick(0);
  } catch (err) {
    banner(`failed to load samples: ${String(err)}`);
  }
}

function wireButtons() {
  $("undo").addEventListener("click", () => {
    draft = apply(draft, { kind: "undo" });
    render();
    void refreshForecast();
  });
  $("pin").addEventListener("click", () => {
    draft = apply(draft, { kind: "pin", label: draft.lastResponse?.trend ?? "pin" });
    render();
  });
}

async function boot() {
  wireButtons();
  wireEditor();
  try {
    const h = await client.health();
    $("meta").textContent = `service ok · ${h.model_version ?? ""}`;
  } catch {
    banner(`service unreachable at ${apiBase} (pass ?api=http://host:port)`);
  }
  await loadSamples();
}

void boot();
