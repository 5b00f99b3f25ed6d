/**
 * Browser bootstrap: wires the runway tabs, the timestamp scrub field, the
 * threshold slider, and the what-if form to the renderers. All decisions
 * live in state.ts / render.ts; this file only moves strings around.
 */
import { ApiClient, ApiError } from './api.js';
import {
  renderAssessment,
  renderDegraded,
  renderSideBySide,
} from './render.js';
import {
  applyPayload,
  initialState,
  selectRunway,
  setThreshold,
  setTimestamp,
  type ViewState,
} from './state.js';
import type { WhatIfOverrides } from './types.js';

const api = new ApiClient('');
let state: ViewState = initialState('RW1');

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function currentTimestamp(): string {
  return state.at ?? new Date().toISOString().replace(/\.\d+Z$/, 'Z');
}

async function refresh(): Promise<void> {
  const main = el<HTMLDivElement>('assessment');
  const sequence = api.nextSequence(state.runway);
  try {
    const payload = await api.assessment(
      state.runway,
      currentTimestamp(),
      state.threshold ?? undefined,
    );
    const next = applyPayload(state, payload, sequence);
    if (next === state) return; // a newer response already landed
    state = next;
    main.innerHTML = renderAssessment(payload, state.threshold);
  } catch (err) {
    if (err instanceof ApiError) {
      main.innerHTML = renderDegraded(err.body);
    } else {
      main.innerHTML = renderDegraded({
        code: 'network',
        message: 'service unreachable',
        detail: String(err),
      });
    }
  }
}

function parseOverrides(raw: string): WhatIfOverrides {
  if (!raw.trim()) return {};
  return JSON.parse(raw) as WhatIfOverrides;
}

async function runWhatIf(): Promise<void> {
  const out = el<HTMLDivElement>('whatif-result');
  if (!state.lastPayload) return;
  try {
    const overrides = parseOverrides(el<HTMLTextAreaElement>('overrides').value);
    const result = await api.whatIf({
      runway: state.runway,
      at: state.lastPayload.timestamp,
      overrides,
      threshold: state.threshold ?? undefined,
    });
    out.innerHTML = renderSideBySide(
      renderAssessment(state.lastPayload, state.threshold),
      renderAssessment(result.payload, state.threshold),
      result.latencyMs,
    );
  } catch (err) {
    if (err instanceof ApiError) {
      out.innerHTML = renderDegraded(err.body);
    } else {
      out.innerHTML = renderDegraded({
        code: 'whatif_failed',
        message: 'what-if request failed',
        detail: String(err),
      });
    }
  }
}

export async function boot(): Promise<void> {
  const tabs = el<HTMLDivElement>('runway-tabs');
  const runways = await api.runways();
  tabs.innerHTML = runways
    .map((r) => `<button class="tab" data-runway="${r}">${r}</button>`)
    .join('');
  tabs.addEventListener('click', (ev) => {
    const target = ev.target as HTMLElement;
    const runway = target.dataset['runway'];
    if (runway) {
      state = selectRunway(state, runway);
      el<HTMLTextAreaElement>('overrides').value = '';
      void refresh();
    }
  });
  el<HTMLInputElement>('at').addEventListener('change', (ev) => {
    const value = (ev.target as HTMLInputElement).value;
    state = setTimestamp(state, value ? `${value}:00Z` : null);
    void refresh();
  });
  el<HTMLInputElement>('threshold').addEventListener('input', (ev) => {
    const raw = Number((ev.target as HTMLInputElement).value);
    state = setThreshold(state, raw > 0 && raw < 1 ? raw : null);
    el<HTMLSpanElement>('threshold-value').textContent =
      state.threshold === null ? 'server default' : state.threshold.toFixed(3);
    if (state.lastPayload) {
      el<HTMLDivElement>('assessment').innerHTML = renderAssessment(
        state.lastPayload,
        state.threshold,
      );
    }
    void refresh();
  });
  el<HTMLButtonElement>('run-whatif').addEventListener('click', () => {
    void runWhatIf();
  });
  state = initialState(runways[0] ?? 'RW1');
  await refresh();
}

if (typeof document !== 'undefined' && document.getElementById('assessment')) {
  void boot();
}
