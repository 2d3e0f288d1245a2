/** Thin typed client for the /v1 endpoints. The fetch function is injected
 * so tests can run without a network. */

import { FieldError, SamplesPage, WhatIfRequest, WhatIfResponse } from "./types";
import { validTrajectory } from "./scenario";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  status: number;
  fields: FieldError[];

  constructor(status: number, message: string, fields: FieldError[] = []) {
    super(message);
    this.status = status;
    this.fields = fields;
  }
}

export class Client {
  base: string;
  fetchFn: FetchLike;

  constructor(base: string, fetchFn: FetchLike = fetch.bind(globalThis)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  /** Rejects locally when the trajectory violates the request invariants;
   * an invalid scenario can never reach the service. */
  async predict(req: WhatIfRequest): Promise<WhatIfResponse> {
    if (!validTrajectory(req.future_pl)) {
      throw new ApiError(0, "invalid future P-level trajectory");
    }
    const resp = await this.fetchFn(`${this.base}/v1/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!resp.ok) {
      let fields: FieldError[] = [];
      try {
        fields = ((await resp.json()) as { errors?: FieldError[] }).errors ?? [];
      } catch {
        // non-JSON error body: surface the status alone
      }
      throw new ApiError(resp.status, `predict failed (${resp.status})`, fields);
    }
    return (await resp.json()) as WhatIfResponse;
  }

  async samples(page: number, size: number, trend?: string): Promise<SamplesPage> {
    const params = new URLSearchParams({ page: String(page), size: String(size) });
    if (trend) params.set("trend", trend);
    const resp = await this.fetchFn(`${this.base}/v1/samples?${params}`);
    if (!resp.ok) {
      throw new ApiError(resp.status, `samples failed (${resp.status})`);
    }
    return (await resp.json()) as SamplesPage;
  }

  async health(): Promise<{ status: string; model_version: string | null }> {
    const resp = await this.fetchFn(`${this.base}/v1/health`);
    if (!resp.ok) {
      throw new ApiError(resp.status, "service unavailable");
    }
    return (await resp.json()) as { status: string; model_version: string | null };
  }
}
