/**
 * DOM wiring for the analyst page. All analysis numbers come from service
 * responses; this file only routes them between widgets and the canvas.
 */

import { ApiClient, ApiError } from "./api.js";
import { drawArrows } from "./arrows.js";
import { debounce, TS_SLIDER_DEBOUNCE_MS } from "./debounce.js";
import { clampRoi, type DragRect } from "./roi.js";
import {
  applyAnalysis,
  applySweep,
  initialState,
  nextRequest,
  paramsRoundTrip,
  requestParams,
  setArrowScale,
  setBrightness,
  setPair,
  setRoi,
  setTs,
  setView,
  withSession,
  type UiState,
} from "./state.js";
import { survivorField, SweepTable } from "./sweep.js";
import { formatSeconds, frameTimestamp, isValidIndex } from "./timeline.js";
import type { ViewMode } from "./types.js";

const api = new ApiClient("");
let state: UiState = initialState();
let sweepTable: SweepTable | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const framesDirInput = el<HTMLInputElement>("frames-dir");
const connectBtn = el<HTMLButtonElement>("connect");
const sessionLabel = el<HTMLSpanElement>("session-label");
const pairA = el<HTMLInputElement>("pair-a");
const pairB = el<HTMLInputElement>("pair-b");
const timelineLabel = el<HTMLSpanElement>("timeline");
const analyzeBtn = el<HTMLButtonElement>("analyze");
const tsSlider = el<HTMLInputElement>("ts-slider");
const tsLabel = el<HTMLSpanElement>("ts-label");
const countLabel = el<HTMLSpanElement>("count-label");
const scaleSlider = el<HTMLInputElement>("scale-slider");
const scaleLabel = el<HTMLSpanElement>("scale-label");
const gainSlider = el<HTMLInputElement>("gain-slider");
const viewSelect = el<HTMLSelectElement>("view-select");
const agreementBadge = el<HTMLSpanElement>("agreement");
const statusLine = el<HTMLDivElement>("status");
const overlayCanvas = el<HTMLCanvasElement>("overlay-canvas");
const diffImage = el<HTMLImageElement>("diff-image");
const roiLabel = el<HTMLSpanElement>("roi-label");
const clearRoiBtn = el<HTMLButtonElement>("clear-roi");

function status(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.className = isError ? "status error" : "status";
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return String(err);
}

function updateTimeline(): void {
  const fps = state.session?.fps ?? 29.97;
  const [a, b] = state.pair;
  const count = state.session?.frame_count ?? 0;
  if (isValidIndex(a, count) && isValidIndex(b, count)) {
    timelineLabel.textContent = `${formatSeconds(frameTimestamp(a, fps))} / ${formatSeconds(
      frameTimestamp(b, fps),
    )} @ ${fps} fps`;
    analyzeBtn.disabled = a === b;
  } else {
    timelineLabel.textContent = "frame out of range";
    analyzeBtn.disabled = true;
  }
}

function updateReadouts(): void {
  tsLabel.textContent = `${state.ts.toFixed(1)} px`;
  scaleLabel.textContent = `×${state.arrowScale}`;
  roiLabel.textContent = state.roi
    ? `${state.roi.x0},${state.roi.y0} ${state.roi.width}×${state.roi.height}`
    : "full frame";
  if (sweepTable && sweepTable.tsGrid.includes(state.ts)) {
    countLabel.textContent = `${sweepTable.countAt(state.ts)} features`;
  } else if (state.analysis) {
    countLabel.textContent = `${survivorField(state.analysis.field, state.ts).vectors.length} features`;
  } else {
    countLabel.textContent = "—";
  }
  const agreement = state.analysis?.agreement;
  agreementBadge.textContent =
    agreement === null || agreement === undefined ? "undefined" : agreement.toFixed(3);
  agreementBadge.className =
    agreement === null || agreement === undefined ? "badge undefined" : "badge";
}

let baseFrame: HTMLImageElement | null = null;

function renderOverlay(): void {
  const ctx = overlayCanvas.getContext("2d");
  if (!ctx || !state.analysis) {
    return;
  }
  const field = survivorField(state.analysis.field, state.ts);
  if (baseFrame && baseFrame.complete) {
    overlayCanvas.width = baseFrame.naturalWidth;
    overlayCanvas.height = baseFrame.naturalHeight;
    ctx.drawImage(baseFrame, 0, 0);
  } else {
    ctx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
  }
  drawArrows(ctx, field, state.arrowScale);
  drawRoiOutline(ctx);
}

function drawRoiOutline(ctx: CanvasRenderingContext2D): void {
  if (!pendingDrag) {
    return;
  }
  const roi = clampRoi(pendingDrag, overlayCanvas.width, overlayCanvas.height);
  if (!roi) {
    return;
  }
  ctx.strokeStyle = "#4cc2ff";
  ctx.lineWidth = 1;
  ctx.strokeRect(roi.x0 + 0.5, roi.y0 + 0.5, roi.width, roi.height);
}

function refreshBaseFrame(): void {
  if (!state.session) {
    return;
  }
  const img = new Image();
  img.onload = () => {
    baseFrame = img;
    renderOverlay();
  };
  img.src = api.frameUrl(state.session.id, state.pair[0], state.roi, state.brightness);
}

function applyView(): void {
  const overlayBox = el<HTMLDivElement>("overlay-box");
  const diffBox = el<HTMLDivElement>("diff-box");
  const mode = state.view;
  overlayBox.style.display = mode === "diff" ? "none" : "block";
  diffBox.style.display = mode === "overlay" ? "none" : "block";
  if (state.analysis && mode !== "overlay") {
    diffImage.src = state.analysis.artifact_urls.diff ?? "";
  }
}

async function runAnalyze(): Promise<void> {
  if (!state.session) {
    return;
  }
  const sessionId = state.session.id;
  const [next, seq] = nextRequest(state);
  state = next;
  const params = requestParams(state);
  status("analyzing…");
  try {
    const [analysis, sweep] = await Promise.all([
      api.analyze(sessionId, state.pair, params),
      api.sweep(sessionId, state.pair, params),
    ]);
    state = applySweep(applyAnalysis(state, seq, analysis), seq, sweep);
    if (state.analysis === analysis) {
      sweepTable = new SweepTable(sweep);
      if (!paramsRoundTrip(state, analysis)) {
        status("warning: service echoed different parameters", true);
      } else {
        status(
          `tracked ${analysis.counts.tracked}, inliers ${analysis.counts.inliers}, ` +
            `${analysis.filtered_field.vectors.length} above cutoff`,
        );
      }
      refreshBaseFrame();
      renderOverlay();
      applyView();
    }
  } catch (err) {
    status(describeError(err), true);
  }
  updateReadouts();
}

const debouncedAnalyze = debounce(() => void runAnalyze(), TS_SLIDER_DEBOUNCE_MS);

connectBtn.addEventListener("click", async () => {
  try {
    const info = await api.createSession(framesDirInput.value);
    state = withSession(state, info);
    sweepTable = null;
    baseFrame = null;
    sessionLabel.textContent = `${info.frame_count} frames, ${info.width}×${info.height}`;
    pairA.max = pairB.max = String(info.frame_count);
    pairA.value = String(state.pair[0]);
    pairB.value = String(state.pair[1]);
    status("session ready");
    updateTimeline();
    refreshBaseFrame();
  } catch (err) {
    status(describeError(err), true);
  }
});

for (const input of [pairA, pairB]) {
  input.addEventListener("change", () => {
    state = setPair(state, Number(pairA.value), Number(pairB.value));
    updateTimeline();
    refreshBaseFrame();
  });
}

analyzeBtn.addEventListener("click", () => void runAnalyze());

tsSlider.addEventListener("input", () => {
  state = setTs(state, Number(tsSlider.value));
  updateReadouts();
  renderOverlay(); // instant: client-side re-filter + redraw
  debouncedAnalyze(); // canonical server refresh
});

scaleSlider.addEventListener("input", () => {
  state = setArrowScale(state, Number(scaleSlider.value));
  updateReadouts();
  renderOverlay();
});

gainSlider.addEventListener("input", () => {
  state = setBrightness(state, Number(gainSlider.value));
  refreshBaseFrame();
  debouncedAnalyze();
});

viewSelect.addEventListener("change", () => {
  state = setView(state, viewSelect.value as ViewMode);
  applyView();
});

let pendingDrag: DragRect | null = null;

overlayCanvas.addEventListener("mousedown", (ev) => {
  const rect = overlayCanvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * overlayCanvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * overlayCanvas.height;
  pendingDrag = { x0: x, y0: y, x1: x, y1: y };
});

overlayCanvas.addEventListener("mousemove", (ev) => {
  if (!pendingDrag) {
    return;
  }
  const rect = overlayCanvas.getBoundingClientRect();
  pendingDrag.x1 = ((ev.clientX - rect.left) / rect.width) * overlayCanvas.width;
  pendingDrag.y1 = ((ev.clientY - rect.top) / rect.height) * overlayCanvas.height;
  renderOverlay();
});

overlayCanvas.addEventListener("mouseup", () => {
  if (!pendingDrag) {
    return;
  }
  const roi = clampRoi(pendingDrag, overlayCanvas.width, overlayCanvas.height);
  pendingDrag = null;
  if (roi) {
    // drag coordinates are relative to the current crop
    const base = state.roi;
    state = setRoi(
      state,
      base
        ? { x0: base.x0 + roi.x0, y0: base.y0 + roi.y0, width: roi.width, height: roi.height }
        : roi,
    );
    updateReadouts();
    refreshBaseFrame();
    debouncedAnalyze();
  }
});

clearRoiBtn.addEventListener("click", () => {
  state = setRoi(state, null);
  updateReadouts();
  refreshBaseFrame();
  debouncedAnalyze();
});

updateTimeline();
updateReadouts();
applyView();
