/**
 * UI state and pure transitions. At most one in-flight analyze matters per
 * view: responses carry the request sequence number they answered, and
 * anything older than the latest applied response is discarded.
 */

import type {
  AnalysisParamsJson,
  AnalysisResponse,
  RoiJson,
  SessionInfo,
  SweepResponse,
  ViewMode,
} from "./types.js";

export interface UiState {
  session: SessionInfo | null;
  pair: [number, number];
  roi: RoiJson | null; // null = full frame
  ts: number;
  arrowScale: number;
  brightness: number;
  seed: number;
  view: ViewMode;
  analysis: AnalysisResponse | null;
  sweep: SweepResponse | null;
  requestSeq: number;
  appliedSeq: number;
}

export function initialState(): UiState {
  return {
    session: null,
    pair: [1, 2],
    roi: null,
    ts: 3.5,
    arrowScale: 10,
    brightness: 1.8,
    seed: 0,
    view: "overlay",
    analysis: null,
    sweep: null,
    requestSeq: 0,
    appliedSeq: 0,
  };
}

export function withSession(state: UiState, info: SessionInfo): UiState {
  const pair: [number, number] =
    info.frame_count >= 2 ? [1, 2] : [1, 1];
  return { ...initialState(), session: info, pair, view: state.view };
}

/** Returns the state with a fresh sequence number plus that number; attach
 * it to the request and hand it back to applyAnalysis/applySweep. */
export function nextRequest(state: UiState): [UiState, number] {
  const seq = state.requestSeq + 1;
  return [{ ...state, requestSeq: seq }, seq];
}

export function applyAnalysis(state: UiState, seq: number, resp: AnalysisResponse): UiState {
  if (seq <= state.appliedSeq) {
    return state; // stale: a newer response already landed
  }
  return { ...state, analysis: resp, appliedSeq: seq };
}

export function applySweep(state: UiState, seq: number, resp: SweepResponse): UiState {
  if (seq <= state.appliedSeq) {
    return state;
  }
  return { ...state, sweep: resp, appliedSeq: seq };
}

export function setTs(state: UiState, ts: number): UiState {
  return ts >= 0 ? { ...state, ts } : state;
}

export function setArrowScale(state: UiState, scale: number): UiState {
  return scale > 0 ? { ...state, arrowScale: scale } : state;
}

export function setBrightness(state: UiState, gain: number): UiState {
  return gain > 0 ? { ...state, brightness: gain } : state;
}

export function setView(state: UiState, view: ViewMode): UiState {
  return { ...state, view };
}

export function setRoi(state: UiState, roi: RoiJson | null): UiState {
  return { ...state, roi };
}

export function setPair(state: UiState, a: number, b: number): UiState {
  const count = state.session?.frame_count ?? 0;
  const ok = (k: number) => Number.isInteger(k) && k >= 1 && k <= count;
  if (!ok(a) || !ok(b) || a === b) {
    return state;
  }
  return { ...state, pair: [a, b] };
}

/** The parameter bundle an analyze/sweep request sends; the response echoes
 * it back in params, which paramsRoundTrip checks field by field. */
export function requestParams(state: UiState): AnalysisParamsJson {
  return {
    roi: state.roi,
    ts: state.ts,
    seed: state.seed,
    arrow: { scale: state.arrowScale },
    brightness_gain: state.brightness,
  };
}

/** True when the analysis echo matches what the UI asked for. */
export function paramsRoundTrip(state: UiState, resp: AnalysisResponse): boolean {
  const p = resp.params;
  const roiMatches =
    state.roi === null
      ? p.roi === null
      : p.roi !== null &&
        p.roi.x0 === state.roi.x0 &&
        p.roi.y0 === state.roi.y0 &&
        p.roi.width === state.roi.width &&
        p.roi.height === state.roi.height;
  return (
    roiMatches &&
    p.ts === state.ts &&
    p.seed === state.seed &&
    p.arrow.scale === state.arrowScale &&
    p.brightness_gain === state.brightness
  );
}
