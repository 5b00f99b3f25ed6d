/** Display helpers: colors, labels, number formatting. */

export type ColorBand = 'green' | 'amber' | 'red';

const BRAKING_ACTION_LABELS = [
  'NIL',
  'Poor',
  'Poor-medium',
  'Medium',
  'Medium-good',
  'Good',
] as const;

/**
 * Below the 50% mark the display stays in the green band; above it the
 * braking action decides between amber (medium or better) and red.
 */
export function probabilityBand(scaledPct: number, brakingAction: number): ColorBand {
  if (scaledPct < 50) return 'green';
  return brakingAction >= 3 ? 'amber' : 'red';
}

export function brakingActionLabel(action: number): string {
  const label = BRAKING_ACTION_LABELS[action];
  if (label === undefined) {
    throw new Error(`braking action out of range: ${action}`);
  }
  return label;
}

export function formatPercent(value: number): string {
  return `${value.toFixed(1)}%`;
}

export function formatMu(value: number): string {
  return value.toFixed(3);
}

export function formatPhi(value: number): string {
  const sign = value > 0 ? '+' : '';
  return `${sign}${value.toFixed(4)}`;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}
