/** Minimal software rasterizer: enough for curve plots with bands and text.
 * Everything is integer pixel work on an RGBA buffer, fully deterministic. */

import { FONT, GLYPH_H, GLYPH_W } from "./font";

export type RGB = [number, number, number];

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.data = new Uint8ClampedArray(width * height * 4);
    this.data.fill(255); // white, opaque
  }

  blend(x: number, y: number, color: RGB, alpha: number): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const k = (y * this.width + x) * 4;
    const d = this.data;
    d[k] = d[k] * (1 - alpha) + color[0] * alpha;
    d[k + 1] = d[k + 1] * (1 - alpha) + color[1] * alpha;
    d[k + 2] = d[k + 2] * (1 - alpha) + color[2] * alpha;
    d[k + 3] = 255;
  }

  fillRect(x0: number, y0: number, w: number, h: number, color: RGB, alpha = 1): void {
    for (let y = y0; y < y0 + h; y++) {
      for (let x = x0; x < x0 + w; x++) this.blend(x, y, color, alpha);
    }
  }

  /** Vertical span used for band fills (one pixel column at a time). */
  fillColumn(x: number, yTop: number, yBottom: number, color: RGB, alpha: number): void {
    const a = Math.round(Math.min(yTop, yBottom));
    const b = Math.round(Math.max(yTop, yBottom));
    for (let y = a; y <= b; y++) this.blend(x, y, color, alpha);
  }

  /** Bresenham polyline segment with a square pen and optional dash pattern.
   * `dash` is an on/off length pattern in pixels; state persists via `carry`. */
  line(
    x0: number, y0: number, x1: number, y1: number,
    color: RGB, thickness = 2, dash: number[] = [], carry = { dist: 0 },
  ): void {
    let ix0 = Math.round(x0), iy0 = Math.round(y0);
    const ix1 = Math.round(x1), iy1 = Math.round(y1);
    const dx = Math.abs(ix1 - ix0), dy = -Math.abs(iy1 - iy0);
    const sx = ix0 < ix1 ? 1 : -1, sy = iy0 < iy1 ? 1 : -1;
    let err = dx + dy;
    const period = dash.reduce((a, b) => a + b, 0);
    for (;;) {
      let pen = true;
      if (period > 0) {
        let pos = carry.dist % period;
        let on = true;
        for (const seg of dash) {
          if (pos < seg) { pen = on; break; }
          pos -= seg;
          on = !on;
        }
      }
      if (pen) {
        for (let oy = 0; oy < thickness; oy++) {
          for (let ox = 0; ox < thickness; ox++) {
            this.blend(ix0 + ox - (thickness >> 1), iy0 + oy - (thickness >> 1), color, 1);
          }
        }
      }
      if (ix0 === ix1 && iy0 === iy1) break;
      const e2 = 2 * err;
      if (e2 >= dy) { err += dy; ix0 += sx; carry.dist += 1; }
      if (e2 <= dx) { err += dx; iy0 += sy; carry.dist += 1; }
    }
  }

  text(x: number, y: number, s: string, color: RGB, scale = 1): void {
    let cx = x;
    for (const ch of s.toLowerCase()) {
      const glyph = FONT[ch];
      if (glyph) {
        for (let r = 0; r < GLYPH_H; r++) {
          for (let c = 0; c < GLYPH_W; c++) {
            if (glyph[r] & (1 << (GLYPH_W - 1 - c))) {
              this.fillRect(cx + c * scale, y + r * scale, scale, scale, color);
            }
          }
        }
      }
      cx += (GLYPH_W + 1) * scale;
    }
  }
}

export function textWidth(s: string, scale = 1): number {
  return s.length * (GLYPH_W + 1) * scale;
}
