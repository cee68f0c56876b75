/** Minimal hand-rolled SVG chart primitives: scales, axes, lines, bands. */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 560,
  height: 400,
  margin: { top: 36, right: 20, bottom: 48, left: 64 },
};

export interface Scale {
  (v: number): number;
  ticks: number[];
  domain: [number, number];
}

function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / Math.max(1, n - 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? 10 * mag;
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  if (hi === lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const f = ((v: number) => outLo + ((v - lo) / (hi - lo)) * (outHi - outLo)) as Scale;
  f.ticks = niceTicks(lo, hi);
  f.domain = [lo, hi];
  return f;
}

export function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const lin = linearScale(llo, lhi === llo ? llo + 1 : lhi, outLo, outHi);
  const f = ((v: number) => lin(Math.log10(v))) as Scale;
  const ticks: number[] = [];
  for (let e = Math.floor(llo); e <= Math.ceil(lhi); e++) ticks.push(Math.pow(10, e));
  f.ticks = ticks.filter((t) => t >= lo / 1.001 && t <= hi * 1.001);
  f.domain = [lo, hi];
  return f;
}

const fmt = (v: number): string => {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(6)));
  return v.toExponential(1);
};

export class SvgDoc {
  private parts: string[] = [];

  constructor(readonly frame: Frame) {}

  add(part: string): void {
    this.parts.push(part);
  }

  axes(x: Scale, y: Scale, xLabel: string, yLabel: string, title = ""): void {
    const { width, height, margin } = this.frame;
    const x0 = margin.left;
    const x1 = width - margin.right;
    const y0 = height - margin.bottom;
    const y1 = margin.top;
    for (const t of x.ticks) {
      const px = x(t);
      this.add(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y1}" stroke="#eee"/>`);
      this.add(
        `<text x="${px.toFixed(2)}" y="${y0 + 18}" font-size="11" text-anchor="middle" fill="#444">${fmt(t)}</text>`,
      );
    }
    for (const t of y.ticks) {
      const py = y(t);
      this.add(`<line x1="${x0}" y1="${py.toFixed(2)}" x2="${x1}" y2="${py.toFixed(2)}" stroke="#eee"/>`);
      this.add(
        `<text x="${x0 - 6}" y="${(py + 4).toFixed(2)}" font-size="11" text-anchor="end" fill="#444">${fmt(t)}</text>`,
      );
    }
    this.add(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333"/>`);
    this.add(
      `<text x="${(x0 + x1) / 2}" y="${height - 10}" font-size="13" text-anchor="middle" fill="#111">${xLabel}</text>`,
    );
    this.add(
      `<text x="16" y="${(y0 + y1) / 2}" font-size="13" text-anchor="middle" fill="#111" transform="rotate(-90 16 ${(y0 + y1) / 2})">${yLabel}</text>`,
    );
    if (title) {
      this.add(
        `<text x="${(x0 + x1) / 2}" y="${y1 - 12}" font-size="14" text-anchor="middle" fill="#111">${title}</text>`,
      );
    }
  }

  polyline(xs: number[], ys: number[], color: string, width = 1.8, dash = ""): void {
    const pts = xs.map((x, i) => `${x.toFixed(2)},${ys[i].toFixed(2)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"${dashAttr}/>`);
  }

  band(xs: number[], yLo: number[], yHi: number[], color: string, opacity = 0.18): void {
    const fwd = xs.map((x, i) => `${x.toFixed(2)},${yHi[i].toFixed(2)}`);
    const back = [...xs].reverse().map((x, i) => `${x.toFixed(2)},${[...yLo].reverse()[i].toFixed(2)}`);
    this.add(`<polygon points="${[...fwd, ...back].join(" ")}" fill="${color}" opacity="${opacity}"/>`);
  }

  scatter(xs: number[], ys: number[], color: string, r = 3): void {
    for (let i = 0; i < xs.length; i++) {
      this.add(`<circle cx="${xs[i].toFixed(2)}" cy="${ys[i].toFixed(2)}" r="${r}" fill="${color}"/>`);
    }
  }

  bars(xs: number[], ys: number[], baseline: number, width: number, color: string): void {
    for (let i = 0; i < xs.length; i++) {
      const top = Math.min(ys[i], baseline);
      const h = Math.abs(baseline - ys[i]);
      this.add(
        `<rect x="${(xs[i] - width / 2).toFixed(2)}" y="${top.toFixed(2)}" width="${width.toFixed(2)}" height="${h.toFixed(2)}" fill="${color}"/>`,
      );
    }
  }

  legend(entries: Array<[string, string]>): void {
    const { margin } = this.frame;
    let y = margin.top + 14;
    for (const [label, color] of entries) {
      const x = this.frame.width - margin.right - 150;
      this.add(`<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" stroke="${color}" stroke-width="2.5"/>`);
      this.add(`<text x="${x + 28}" y="${y}" font-size="11" fill="#222">${label}</text>`);
      y += 16;
    }
  }

  render(): string {
    const { width, height } = this.frame;
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}
