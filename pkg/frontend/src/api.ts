// Client for the render service. Requests carry sequence numbers so a
// stale preview can never overwrite a newer full-resolution response.

import { ConditionInfo } from "./state.js";
import { ViewportRange } from "./viewport.js";

export interface RenderParams {
  conditionId: string;
  seed: number;
  steps: number;
  width: number;
  height: number;
  viewport: ViewportRange;
}

export interface RenderResult {
  imageUrl: string;
  dimension: number | null;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export function renderRequestBody(params: RenderParams): string {
  return JSON.stringify({
    condition: params.conditionId,
    seed: params.seed,
    width: params.width,
    height: params.height,
    viewport: {
      x: { lo: params.viewport.xLo, hi: params.viewport.xHi },
      y: { lo: params.viewport.yLo, hi: params.viewport.yHi },
    },
    overrides: { steps: params.steps },
  });
}

export class RenderClient {
  private sequence = 0;
  private latestApplied = 0;

  constructor(private baseUrl: string) {}

  async conditions(): Promise<ConditionInfo[]> {
    const resp = await fetch(`${this.baseUrl}/api/conditions`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.json();
  }

  nextSequence(): number {
    return ++this.sequence;
  }

  /** True when `seq` is newer than anything already shown. */
  shouldApply(seq: number): boolean {
    if (seq < this.latestApplied) return false;
    this.latestApplied = seq;
    return true;
  }

  async render(params: RenderParams,
               onProgress?: (fraction: number) => void): Promise<RenderResult> {
    const resp = await fetch(`${this.baseUrl}/api/render`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: renderRequestBody(params),
    });
    if (!resp.ok) {
      const body = await resp.text();
      throw new ApiError(resp.status, errorMessage(body) ?? body);
    }
    const payload = await resp.json();
    if (payload.image_url) {
      return {
        imageUrl: this.baseUrl + payload.image_url,
        dimension: payload.dimension ?? null,
      };
    }
    return this.poll(payload.job_id, onProgress);
  }

  private async poll(jobId: string,
                     onProgress?: (fraction: number) => void): Promise<RenderResult> {
    for (;;) {
      const resp = await fetch(`${this.baseUrl}/api/render/${jobId}/status`);
      if (!resp.ok) throw new ApiError(resp.status, await resp.text());
      const status = await resp.json();
      onProgress?.(status.progress ?? 0);
      if (status.state === "done") {
        return {
          imageUrl: `${this.baseUrl}/api/render/${jobId}/image.png`,
          dimension: await this.dimensionOf(jobId),
        };
      }
      if (status.state === "failed") {
        throw new ApiError(500, status.message || "render failed");
      }
      await sleep(500);
    }
  }

  private async dimensionOf(jobId: string): Promise<number | null> {
    const resp = await fetch(`${this.baseUrl}/api/render/${jobId}/fracdim.csv`);
    if (!resp.ok) return null;
    return parseDimensionCsv(await resp.text());
  }
}

/** Pull the fitted dimension out of the box-count CSV comment trailer. */
export function parseDimensionCsv(text: string): number | null {
  for (const line of text.split("\n")) {
    if (line.startsWith("# dimension=")) {
      const value = Number(line.slice("# dimension=".length));
      return Number.isFinite(value) ? value : null;
    }
  }
  return null;
}

function errorMessage(body: string): string | null {
  try {
    const parsed = JSON.parse(body);
    return typeof parsed.error === "string" ? parsed.error : null;
  } catch {
    return null;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
