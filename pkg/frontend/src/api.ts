/** Typed fetch wrapper for the analysis service; the only network surface. */

import type {
  AnalysisParamsJson,
  AnalysisResponse,
  ServiceErrorBody,
  SessionInfo,
  SweepResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let body: Partial<ServiceErrorBody> = {};
      try {
        body = (await resp.json()) as ServiceErrorBody;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(
        resp.status,
        body.code ?? "http_error",
        body.message ?? `${resp.status} on ${path}`,
        body.detail ?? {},
      );
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createSession(framesDir: string, fps?: number): Promise<SessionInfo> {
    const payload: Record<string, unknown> = { frames_dir: framesDir };
    if (fps !== undefined) {
      payload.fps = fps;
    }
    return this.post<SessionInfo>("/sessions", payload);
  }

  getSession(id: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(`/sessions/${id}`);
  }

  /** URL for an <img>/drawImage source; roi as X,Y,W,H. */
  frameUrl(
    id: string,
    index: number,
    roi?: { x0: number; y0: number; width: number; height: number } | null,
    gain?: number,
  ): string {
    const params = new URLSearchParams();
    if (roi) {
      params.set("roi", `${roi.x0},${roi.y0},${roi.width},${roi.height}`);
    }
    if (gain !== undefined) {
      params.set("gain", String(gain));
    }
    const query = params.toString();
    return `${this.baseUrl}/sessions/${id}/frames/${index}${query ? `?${query}` : ""}`;
  }

  analyze(
    id: string,
    pair: [number, number],
    params: AnalysisParamsJson,
  ): Promise<AnalysisResponse> {
    return this.post<AnalysisResponse>(`/sessions/${id}/analyze`, { pair, params });
  }

  sweep(
    id: string,
    pair: [number, number],
    params: AnalysisParamsJson,
    tsGrid?: number[],
  ): Promise<SweepResponse> {
    const payload: Record<string, unknown> = { pair, params };
    if (tsGrid !== undefined) {
      payload.ts_grid = tsGrid;
    }
    return this.post<SweepResponse>(`/sessions/${id}/sweep`, payload);
  }
}
