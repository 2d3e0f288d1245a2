/** Wire types of the /v1 forecast service. All values in physical units. */

export const HORIZON = 90;
export const N_FEATURES = 7;
export const LEVEL_MIN = 1;
export const LEVEL_MAX = 9;

export interface WhatIfRequest {
  context: number[][];      // 90 x 7
  future_pl: number[];      // 90 integers in 1..9
  n_samples?: number;
}

export interface WhatIfResponse {
  mean: number[];
  q10: number[];
  q50: number[];
  q90: number[];
  trend: string;
  model_version: string;
  latency_ms: number;
}

export interface SampleItem {
  id: number;
  trend: string;
  domain: number;
  x: number[][];            // 90 x 7 context window
  last_level: number;
}

export interface SamplesPage {
  page: number;
  pages: number;
  total: number;
  items: SampleItem[];
}

export interface FieldError {
  field: string;
  message: string;
}
