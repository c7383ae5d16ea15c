/** Turn harness CSVs into a curve plot: one line per group with a mean +- one
 * standard-deviation band, log y-axis by default. Produces a PNG (own
 * rasterizer) and an SVG with identical geometry; both are byte-deterministic. */

import * as fs from "node:fs";
import * as path from "node:path";

import { CsvError, extractSeries, parseHarnessCsv, Series } from "./csv";
import { encodePng } from "./png";
import { Raster, RGB, textWidth } from "./raster";
import { linearScale, logScale, Scale } from "./scales";

export interface PlotSpec {
  inputs: string[];
  groupBy: string;
  y: string;
  x: string;
  logY: boolean;
  out: string; // .png path; the .svg sibling is emitted too
  title?: string;
}

export const DEFAULTS = { groupBy: "lambda", y: "subopt", x: "iteration", logY: true };

const WIDTH = 960;
const HEIGHT = 600;
const M = { left: 84, right: 24, top: 48, bottom: 60 };

const PALETTE: RGB[] = [
  [31, 119, 180], [255, 127, 14], [44, 160, 44], [214, 39, 40], [148, 103, 189],
  [140, 86, 75], [227, 119, 194], [127, 127, 127], [188, 189, 34], [23, 190, 207],
  [64, 32, 160], [0, 0, 0],
];
const DASHES: number[][] = [[], [10, 6], [3, 4], [10, 6, 3, 6]];

interface Curve {
  label: string;
  color: RGB;
  dash: number[];
  series: Series;
}

export interface RenderResult {
  png: Buffer;
  svg: string;
  groups: string[];
  legend: string[];
}

function collectCurves(spec: PlotSpec): Curve[] {
  if (spec.inputs.length === 0) throw new CsvError("at least one input CSV is required");
  const curves: Curve[] = [];
  const multi = spec.inputs.length > 1;
  spec.inputs.forEach((file, fi) => {
    const csv = parseHarnessCsv(fs.readFileSync(file, "utf-8"));
    const stem = path.basename(file).replace(/\.csv$/, "");
    extractSeries(csv, spec.groupBy, spec.y, spec.x).forEach((series, si) => {
      curves.push({
        label: `${spec.groupBy}=${series.group}` + (multi ? ` [${stem}]` : ""),
        color: PALETTE[si % PALETTE.length],
        dash: DASHES[fi % DASHES.length],
        series,
      });
    });
  });
  return curves;
}

function yDomain(curves: Curve[], logY: boolean): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const c of curves) {
    for (let i = 0; i < c.series.mean.length; i++) {
      const m = c.series.mean[i];
      const s = c.series.std[i];
      for (const v of [m, m - s, m + s]) {
        if (logY && !(v > 0)) continue;
        if (Number.isFinite(v)) {
          lo = Math.min(lo, v);
          hi = Math.max(hi, v);
        }
      }
    }
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    throw new CsvError(logY ? "no positive values to plot on a log axis" : "no finite values to plot");
  }
  if (logY) return [lo / 2, hi * 2];
  const pad = 0.05 * (hi - lo || 1);
  return [lo - pad, hi + pad];
}

function xDomain(curves: Curve[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const c of curves) {
    for (const v of c.series.x) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  return [lo, hi];
}

const r2 = (v: number) => Math.round(v * 100) / 100;

export function renderPlot(spec: PlotSpec): RenderResult {
  const curves = collectCurves(spec);
  const [ylo, yhi] = yDomain(curves, spec.logY);
  const [xlo, xhi] = xDomain(curves);
  const sx = linearScale(xlo, xhi, M.left, WIDTH - M.right);
  const sy: Scale = spec.logY
    ? logScale(ylo, yhi, HEIGHT - M.bottom, M.top)
    : linearScale(ylo, yhi, HEIGHT - M.bottom, M.top);
  const valid = (v: number) => Number.isFinite(v) && (!spec.logY || v > 0);
  const clampLo = (v: number) => (spec.logY && v < ylo ? ylo : v);
  const title = spec.title ?? spec.inputs.map((f) => path.basename(f).replace(/\.csv$/, "")).join(" vs ");

  // --- raster backend ---
  const img = new Raster(WIDTH, HEIGHT);
  for (const c of curves) {
    // band: mean +- std, clamped into the domain, drawn column by column
    for (let i = 0; i + 1 < c.series.x.length; i++) {
      const m0 = c.series.mean[i], m1 = c.series.mean[i + 1];
      if (!valid(m0) || !valid(m1)) continue;
      const h0 = m0 + c.series.std[i], h1 = m1 + c.series.std[i + 1];
      const l0 = clampLo(m0 - c.series.std[i]), l1 = clampLo(m1 - c.series.std[i + 1]);
      const x0 = sx.toPx(c.series.x[i]), x1 = sx.toPx(c.series.x[i + 1]);
      const px0 = Math.round(x0), px1 = Math.round(x1);
      for (let px = px0; px <= px1; px++) {
        const t = px1 === px0 ? 0 : (px - px0) / (px1 - px0);
        const hi_ = sy.toPx(interp(h0, h1, t, spec.logY));
        const lo_ = sy.toPx(interp(valid(l0) ? l0 : ylo, valid(l1) ? l1 : ylo, t, spec.logY));
        img.fillColumn(px, hi_, lo_, c.color, 0.18);
      }
    }
  }
  for (const c of curves) {
    const carry = { dist: 0 };
    let prev: [number, number] | null = null;
    for (let i = 0; i < c.series.x.length; i++) {
      const m = c.series.mean[i];
      if (!valid(m)) {
        prev = null;
        continue;
      }
      const pt: [number, number] = [sx.toPx(c.series.x[i]), sy.toPx(m)];
      if (prev) img.line(prev[0], prev[1], pt[0], pt[1], c.color, 2, c.dash, carry);
      prev = pt;
    }
  }
  // frame, ticks, grid
  const black: RGB = [0, 0, 0];
  const grey: RGB = [210, 210, 210];
  for (const t of sy.ticks) {
    const py = Math.round(sy.toPx(t.value));
    img.line(M.left, py, WIDTH - M.right, py, grey, 1);
    img.text(M.left - 8 - textWidth(t.label), py - 3, t.label, black);
  }
  for (const t of sx.ticks) {
    const px = Math.round(sx.toPx(t.value));
    img.line(px, M.top, px, HEIGHT - M.bottom, grey, 1);
    img.text(px - textWidth(t.label) / 2, HEIGHT - M.bottom + 8, t.label, black);
  }
  img.line(M.left, M.top, M.left, HEIGHT - M.bottom, black, 1);
  img.line(M.left, HEIGHT - M.bottom, WIDTH - M.right, HEIGHT - M.bottom, black, 1);
  img.text(M.left, 16, title, black, 2);
  img.text(WIDTH / 2 - textWidth(spec.x) / 2, HEIGHT - 22, spec.x, black);
  img.text(8, M.top - 20, spec.y + (spec.logY ? " (log)" : ""), black);
  // legend, top-right
  const legendX = WIDTH - M.right - 8 - Math.max(...curves.map((c) => textWidth(c.label))) - 26;
  curves.forEach((c, i) => {
    const ly = M.top + 8 + i * 14;
    img.line(legendX, ly + 3, legendX + 18, ly + 3, c.color, 2, c.dash, { dist: 0 });
    img.text(legendX + 26, ly, c.label, black);
  });

  // --- svg backend (same geometry, real text) ---
  const svg: string[] = [];
  svg.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="monospace" font-size="11">`,
  );
  svg.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  for (const c of curves) {
    const hiPts: string[] = [];
    const loPts: string[] = [];
    for (let i = 0; i < c.series.x.length; i++) {
      const m = c.series.mean[i];
      if (!valid(m)) continue;
      const h = m + c.series.std[i];
      const l = clampLo(m - c.series.std[i]);
      hiPts.push(`${r2(sx.toPx(c.series.x[i]))},${r2(sy.toPx(h))}`);
      loPts.push(`${r2(sx.toPx(c.series.x[i]))},${r2(sy.toPx(valid(l) ? l : ylo))}`);
    }
    if (hiPts.length > 1) {
      svg.push(
        `<polygon points="${hiPts.join(" ")} ${loPts.reverse().join(" ")}" ` +
        `fill="${css(c.color)}" fill-opacity="0.18" stroke="none"/>`,
      );
    }
  }
  for (const t of sy.ticks) {
    const py = r2(sy.toPx(t.value));
    svg.push(`<line x1="${M.left}" y1="${py}" x2="${WIDTH - M.right}" y2="${py}" stroke="#d2d2d2"/>`);
    svg.push(`<text x="${M.left - 6}" y="${py + 4}" text-anchor="end">${t.label}</text>`);
  }
  for (const t of sx.ticks) {
    const px = r2(sx.toPx(t.value));
    svg.push(`<line x1="${px}" y1="${M.top}" x2="${px}" y2="${HEIGHT - M.bottom}" stroke="#d2d2d2"/>`);
    svg.push(`<text x="${px}" y="${HEIGHT - M.bottom + 16}" text-anchor="middle">${t.label}</text>`);
  }
  for (const c of curves) {
    const pts: string[] = [];
    const runs: string[][] = [pts];
    for (let i = 0; i < c.series.x.length; i++) {
      const m = c.series.mean[i];
      if (!valid(m)) {
        if (runs[runs.length - 1].length) runs.push([]);
        continue;
      }
      runs[runs.length - 1].push(`${r2(sx.toPx(c.series.x[i]))},${r2(sy.toPx(m))}`);
    }
    const dash = c.dash.length ? ` stroke-dasharray="${c.dash.join(",")}"` : "";
    for (const runPts of runs) {
      if (runPts.length > 1) {
        svg.push(
          `<polyline points="${runPts.join(" ")}" fill="none" stroke="${css(c.color)}" ` +
          `stroke-width="2"${dash}/>`,
        );
      }
    }
  }
  svg.push(
    `<rect x="${M.left}" y="${M.top}" width="${WIDTH - M.left - M.right}" ` +
    `height="${HEIGHT - M.top - M.bottom}" fill="none" stroke="black"/>`,
  );
  svg.push(`<text x="${M.left}" y="24" font-size="16">${escapeXml(title)}</text>`);
  svg.push(`<text x="${WIDTH / 2}" y="${HEIGHT - 16}" text-anchor="middle">${escapeXml(spec.x)}</text>`);
  svg.push(`<text x="8" y="${M.top - 14}">${escapeXml(spec.y + (spec.logY ? " (log)" : ""))}</text>`);
  curves.forEach((c, i) => {
    const ly = M.top + 14 + i * 16;
    const dash = c.dash.length ? ` stroke-dasharray="${c.dash.join(",")}"` : "";
    svg.push(`<line x1="${legendX}" y1="${ly - 4}" x2="${legendX + 18}" y2="${ly - 4}" ` +
      `stroke="${css(c.color)}" stroke-width="2"${dash}/>`);
    svg.push(`<text x="${legendX + 26}" y="${ly}" class="legend">${escapeXml(c.label)}</text>`);
  });
  svg.push("</svg>");

  return {
    png: encodePng(WIDTH, HEIGHT, img.data),
    svg: svg.join("\n") + "\n",
    groups: [...new Set(curves.map((c) => c.series.group))],
    legend: curves.map((c) => c.label),
  };
}

function interp(a: number, b: number, t: number, logY: boolean): number {
  if (logY) return Math.exp(Math.log(a) * (1 - t) + Math.log(b) * t);
  return a * (1 - t) + b * t;
}

function css(c: RGB): string {
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderToFiles(spec: PlotSpec): { pngPath: string; svgPath: string; result: RenderResult } {
  const result = renderPlot(spec);
  const pngPath = spec.out;
  const svgPath = spec.out.replace(/\.png$/, "") + ".svg";
  fs.writeFileSync(pngPath, result.png);
  fs.writeFileSync(svgPath, result.svg);
  return { pngPath, svgPath, result };
}
