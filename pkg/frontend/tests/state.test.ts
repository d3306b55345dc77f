import { describe, expect, it } from "vitest";

import {
  applyAnalysis,
  applySweep,
  initialState,
  nextRequest,
  paramsRoundTrip,
  requestParams,
  setArrowScale,
  setPair,
  setTs,
  setView,
  withSession,
} from "../src/state.js";
import type { AnalysisResponse, SessionInfo, SweepResponse } from "../src/types.js";
import analysisFixture from "./fixtures/analysis.json";
import sessionFixture from "./fixtures/session.json";
import sweepFixture from "./fixtures/sweep.json";

const analysis = analysisFixture as unknown as AnalysisResponse;
const session = sessionFixture as unknown as SessionInfo;
const sweep = sweepFixture as unknown as SweepResponse;

describe("sequence numbers", () => {
  it("discards stale analysis responses", () => {
    let state = withSession(initialState(), session);
    const [s1, seqOld] = nextRequest(state);
    const [s2, seqNew] = nextRequest(s1);
    state = s2;
    const newer = { ...analysis, agreement: 0.5 };
    state = applyAnalysis(state, seqNew, newer);
    expect(state.analysis).toBe(newer);
    // the slower, superseded response arrives afterwards
    state = applyAnalysis(state, seqOld, analysis);
    expect(state.analysis).toBe(newer);
  });

  it("applies in-order sweep responses", () => {
    let state = withSession(initialState(), session);
    const [s1, seq] = nextRequest(state);
    state = applySweep(s1, seq, sweep);
    expect(state.sweep).toBe(sweep);
  });
});

describe("parameter round-trip", () => {
  it("accepts the service echo of what the UI sent", () => {
    let state = withSession(initialState(), session);
    state = setTs(state, 3.5);
    // fixture was requested with ts=3.5, seed=0, no roi, default arrow/gain
    expect(requestParams(state).ts).toBe(3.5);
    expect(paramsRoundTrip(state, analysis)).toBe(true);
  });

  it("flags a mismatched echo", () => {
    let state = withSession(initialState(), session);
    state = setTs(state, 2.0);
    expect(paramsRoundTrip(state, analysis)).toBe(false);
  });
});

describe("setters", () => {
  it("ignores invalid pairs and accepts valid ones", () => {
    let state = withSession(initialState(), session);
    expect(state.pair).toEqual([1, 2]);
    state = setPair(state, 2, 1);
    expect(state.pair).toEqual([2, 1]);
    state = setPair(state, 0, 1);
    expect(state.pair).toEqual([2, 1]); // unchanged
    state = setPair(state, 1, 1);
    expect(state.pair).toEqual([2, 1]); // i = j rejected
    state = setPair(state, 1, 99);
    expect(state.pair).toEqual([2, 1]); // out of range
  });

  it("guards ts and scale ranges", () => {
    let state = initialState();
    state = setTs(state, -1);
    expect(state.ts).toBe(3.5);
    state = setTs(state, 0);
    expect(state.ts).toBe(0);
    state = setArrowScale(state, 0);
    expect(state.arrowScale).toBe(10);
  });

  it("switches views", () => {
    let state = initialState();
    state = setView(state, "side-by-side");
    expect(state.view).toBe("side-by-side");
  });
});
