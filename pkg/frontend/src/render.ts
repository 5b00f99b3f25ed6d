/**
 * Pure HTML renderers for the six dashboard modules:
 * 1 probability gauge, 2 slippery flag, 3 scenario warnings,
 * 4 braking-action dial, 5 positive arguments, 6 negative arguments.
 *
 * Every number displayed comes straight from the payload; the only local
 * computation is the color band and optional threshold re-classification.
 */
import {
  brakingActionLabel,
  escapeHtml,
  formatMu,
  formatPercent,
  formatPhi,
  probabilityBand,
} from './format.js';
import { localIsSlippery } from './state.js';
import type { ArgumentCard, AssessmentPayload, ServiceError } from './types.js';

export const MAX_ARGUMENT_CARDS = 5;

export function renderGauge(payload: AssessmentPayload): string {
  const pct = payload.slippery_probability_scaled;
  const band = probabilityBand(pct, payload.braking_action);
  const width = Math.max(0, Math.min(100, pct));
  return [
    `<section class="module gauge band-${band}" data-module="1">`,
    `<h2>Slippery probability</h2>`,
    `<div class="gauge-track"><div class="gauge-fill" style="width:${width.toFixed(1)}%"></div></div>`,
    `<div class="gauge-value">${formatPercent(pct)}</div>`,
    `<div class="gauge-raw">raw ${payload.slippery_probability_raw.toExponential(3)}</div>`,
    `</section>`,
  ].join('');
}

export function renderFlag(payload: AssessmentPayload, threshold: number | null): string {
  const slippery =
    threshold === null
      ? payload.is_slippery
      : localIsSlippery(payload.slippery_probability_raw, threshold);
  const cls = slippery ? 'slippery' : 'not-slippery';
  const text = slippery ? 'SLIPPERY' : 'Not slippery';
  const note =
    threshold === null ? '' : `<div class="flag-note">threshold ${threshold}</div>`;
  return [
    `<section class="module flag ${cls}" data-module="2">`,
    `<h2>Condition</h2><div class="flag-text">${text}</div>${note}`,
    `</section>`,
  ].join('');
}

export function renderScenarios(payload: AssessmentPayload): string {
  const items = payload.scenario_warnings.length
    ? payload.scenario_warnings
        .map((name) => `<li class="scenario">${escapeHtml(name)}</li>`)
        .join('')
    : `<li class="scenario none">no active scenarios</li>`;
  return [
    `<section class="module scenarios" data-module="3">`,
    `<h2>Scenario warnings</h2><ul>${items}</ul>`,
    `</section>`,
  ].join('');
}

export function renderDial(payload: AssessmentPayload): string {
  const label = brakingActionLabel(payload.braking_action);
  return [
    `<section class="module dial action-${payload.braking_action}" data-module="4">`,
    `<h2>Braking action</h2>`,
    `<div class="dial-value">${payload.braking_action}</div>`,
    `<div class="dial-label">${escapeHtml(label)}</div>`,
    `<div class="dial-mu">predicted &mu; ${formatMu(payload.predicted_mu)}</div>`,
    `</section>`,
  ].join('');
}

function renderCards(cards: ArgumentCard[], kind: 'positive' | 'negative'): string {
  const shown = cards.slice(0, MAX_ARGUMENT_CARDS);
  if (!shown.length) {
    return `<li class="card none">none</li>`;
  }
  return shown
    .map(
      (c) =>
        `<li class="card ${kind}"><span class="card-phi">${formatPhi(c.phi)}</span>` +
        `<span class="card-text">${escapeHtml(c.human_text)}</span></li>`,
    )
    .join('');
}

export function renderArguments(payload: AssessmentPayload): string {
  return [
    `<section class="module arguments positive" data-module="5">`,
    `<h2>Drivers up</h2><ul>${renderCards(payload.arguments.positive, 'positive')}</ul>`,
    `</section>`,
    `<section class="module arguments negative" data-module="6">`,
    `<h2>Drivers down</h2><ul>${renderCards(payload.arguments.negative, 'negative')}</ul>`,
    `</section>`,
  ].join('');
}

export function renderAssessment(
  payload: AssessmentPayload,
  threshold: number | null = null,
): string {
  return [
    `<div class="assessment" data-runway="${escapeHtml(payload.runway_id)}"`,
    ` data-source="${payload.explanation_source}" data-at="${escapeHtml(payload.timestamp)}">`,
    renderGauge(payload),
    renderFlag(payload, threshold),
    renderScenarios(payload),
    renderDial(payload),
    renderArguments(payload),
    `</div>`,
  ].join('');
}

/** Unavailable assessments render an explicit banner, never a blank panel. */
export function renderDegraded(error: ServiceError): string {
  return [
    `<div class="assessment degraded">`,
    `<div class="banner">service degraded: ${escapeHtml(error.message)}`,
    `<span class="banner-code">[${escapeHtml(error.code)}]</span></div>`,
    `<div class="banner-detail">${escapeHtml(error.detail ?? '')}</div>`,
    `</div>`,
  ].join('');
}

export function renderSideBySide(baseline: string, whatIf: string, latencyMs: number): string {
  return [
    `<div class="compare">`,
    `<div class="pane baseline"><h3>Current</h3>${baseline}</div>`,
    `<div class="pane whatif"><h3>What-if</h3>${whatIf}`,
    `<div class="latency">round trip ${latencyMs.toFixed(0)} ms</div></div>`,
    `</div>`,
  ].join('');
}
