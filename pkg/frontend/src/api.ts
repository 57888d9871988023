/** Typed client for the segmentation service REST API. */

import { Axis, Vec3 } from "./coords.js";
import { OverlaySlice } from "./overlay.js";
import { PointMap } from "./clicks.js";

export interface CaseInfo {
  id: string;
  dims: Vec3;
  spacing: Vec3;
}

export interface SliceData {
  data: Uint8Array;
  shape: [number, number];
  window: [number, number];
}

export interface RoundLog {
  round: number;
  mean_dice_gt: number | null;
  mean_dice_prev: number | null;
  seconds: number;
  converged: boolean;
  flagged_cases: number;
}

export interface SegmentResult {
  status: "done" | "failed";
  mode: "init" | "full";
  overlay?: OverlaySlice[];
  dims?: Vec3;
  rounds?: RoundLog[];
  error?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function errorOf(response: Response): Promise<ApiError> {
  let message = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.error === "string") message = body.error;
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async get(path: string, signal?: AbortSignal): Promise<Response> {
    const r = await this.fetchImpl(this.baseUrl + path, { signal });
    if (!r.ok) throw await errorOf(r);
    return r;
  }

  async listCases(signal?: AbortSignal): Promise<CaseInfo[]> {
    return (await this.get("/cases", signal)).json();
  }

  async getSlice(
    caseId: string,
    axis: Axis,
    index: number,
    signal?: AbortSignal,
  ): Promise<SliceData> {
    const r = await this.get(
      `/cases/${caseId}/slice?axis=${axis}&index=${index}`,
      signal,
    );
    const shape = (r.headers.get("X-Shape") ?? "")
      .split(",")
      .map((s) => parseInt(s, 10));
    return {
      data: new Uint8Array(await r.arrayBuffer()),
      shape: [shape[0], shape[1]],
      window: [
        parseFloat(r.headers.get("X-Window-Lo") ?? "0"),
        parseFloat(r.headers.get("X-Window-Hi") ?? "0"),
      ],
    };
  }

  async postPoints(
    caseId: string,
    points: PointMap,
  ): Promise<{ state: "incomplete" | "ready"; points: PointMap }> {
    const r = await this.fetchImpl(`${this.baseUrl}/cases/${caseId}/points`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ points }),
    });
    if (!r.ok) throw await errorOf(r);
    return r.json();
  }

  async startSegment(
    caseId: string,
    mode: "init" | "full",
  ): Promise<{ job: string; status: string }> {
    const r = await this.fetchImpl(
      `${this.baseUrl}/cases/${caseId}/segment?mode=${mode}`,
      { method: "POST" },
    );
    if (!r.ok) throw await errorOf(r);
    return r.json();
  }

  async getResult(
    caseId: string,
    signal?: AbortSignal,
  ): Promise<SegmentResult | { status: "running" }> {
    return (await this.get(`/cases/${caseId}/result`, signal)).json();
  }

  /**
   * Poll /result until the job leaves the running state. The abort signal
   * cancels polling (used when the user switches cases mid-job).
   */
  async pollResult(
    caseId: string,
    intervalMs = 1000,
    signal?: AbortSignal,
  ): Promise<SegmentResult> {
    for (;;) {
      const result = await this.getResult(caseId, signal);
      if (result.status !== "running") return result as SegmentResult;
      await new Promise<void>((resolve, reject) => {
        const t = setTimeout(resolve, intervalMs);
        signal?.addEventListener(
          "abort",
          () => {
            clearTimeout(t);
            reject(new DOMException("polling aborted", "AbortError"));
          },
          { once: true },
        );
      });
    }
  }
}
