/**
 * Wire types mirroring the assessment service's JSON bodies.
 */

export interface ArgumentCard {
  feature: string;
  value: number | null;
  phi: number;
  human_text: string;
}

export interface AssessmentPayload {
  runway_id: string;
  timestamp: string;
  slippery_probability_raw: number;
  slippery_probability_scaled: number;
  is_slippery: boolean;
  braking_action: number;
  braking_action_label: string;
  predicted_mu: number;
  scenario_warnings: string[];
  arguments: {
    positive: ArgumentCard[];
    negative: ArgumentCard[];
  };
  explanation_source: 'classification' | 'regression';
  model_versions: Record<string, string>;
}

export interface ServiceError {
  code: string;
  message: string;
  detail: string;
}

export interface WhatIfOverrides {
  features?: Record<string, number>;
  feature_deltas?: Record<string, number>;
  weather?: Record<string, number | string>;
}

export interface WhatIfRequest {
  runway: string;
  at: string;
  overrides: WhatIfOverrides;
  threshold?: number;
}

export function isServiceError(body: unknown): body is ServiceError {
  return (
    typeof body === 'object' &&
    body !== null &&
    'code' in body &&
    'message' in body
  );
}
