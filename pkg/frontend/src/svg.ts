/** Small deterministic SVG helpers: no dates, no randomness, fixed precision. */

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Geometry coordinates always carry two decimals so output is stable. */
export function px(value: number): string {
  return value.toFixed(2);
}

export interface LinearScale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(lo: number, hi: number, rangeLo: number, rangeHi: number): LinearScale {
  const span = hi - lo;
  const scale = ((value: number) =>
    rangeLo + ((value - lo) / span) * (rangeHi - rangeLo)) as LinearScale;
  scale.domain = [lo, hi];
  return scale;
}

/** Pad a data interval; degenerate intervals get a unit-ish margin. */
export function padded(lo: number, hi: number): [number, number] {
  if (lo === hi) {
    const pad = Math.max(1, Math.abs(lo) * 0.1);
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * 0.08;
  return [lo - pad, hi + pad];
}

/** Tick positions at a 1/2/5 step covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  if (span <= 0 || !Number.isFinite(span)) {
    return [lo];
  }
  const rawStep = span / count;
  const power = Math.floor(Math.log10(rawStep));
  const base = Math.pow(10, power);
  let step = base;
  for (const mult of [1, 2, 5, 10]) {
    if (base * mult >= rawStep) {
      step = base * mult;
      break;
    }
  }
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    // snap away float dust so labels stay short
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

export function tickLabel(value: number): string {
  if (Number.isInteger(value)) {
    return String(value);
  }
  return String(Number(value.toPrecision(6)));
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
