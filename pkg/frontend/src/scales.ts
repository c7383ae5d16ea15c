/** Axis scales and tick generation (linear and log10). */

export interface Tick {
  value: number;
  label: string;
}

export interface Scale {
  toPx(v: number): number;
  ticks: Tick[];
  domain: [number, number];
}

function niceStep(span: number, target: number): number {
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= raw) return m * mag;
  }
  return 10 * mag;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(0).replace("e+", "e");
  return String(Math.round(v * 1e6) / 1e6);
}

export function linearScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (hi <= lo) hi = lo + 1;
  const step = niceStep(hi - lo, 5);
  const ticks: Tick[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    ticks.push({ value: v, label: fmt(v) });
  }
  return {
    toPx: (v) => pxLo + ((v - lo) / (hi - lo)) * (pxHi - pxLo),
    ticks,
    domain: [lo, hi],
  };
}

export function logScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (!(lo > 0) || !(hi > 0)) throw new Error("log scale needs positive bounds");
  const llo = Math.floor(Math.log10(lo));
  const lhi = Math.ceil(Math.log10(hi));
  const ticks: Tick[] = [];
  // cap the decade labels so dense axes stay readable
  const every = Math.max(1, Math.ceil((lhi - llo) / 10));
  for (let k = llo; k <= lhi; k += every) {
    ticks.push({ value: Math.pow(10, k), label: k === 0 ? "1" : `1e${k}` });
  }
  const la = Math.log10(lo);
  const lb = Math.log10(hi);
  return {
    toPx: (v) => pxLo + ((Math.log10(v) - la) / (lb - la || 1)) * (pxHi - pxLo),
    ticks,
    domain: [lo, hi],
  };
}
