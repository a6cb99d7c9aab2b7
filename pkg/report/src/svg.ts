// Hand-rolled SVG chart builder: multi-panel XY plots with optional log
// axes, quartile bands, error bars and a legend box. Every coordinate is
// emitted with fixed precision so identical input gives identical bytes.

export interface Pt {
  x: number;
  y: number;
}

export interface BandPt {
  x: number;
  lo: number;
  hi: number;
}

export interface Series {
  label: string;
  color: string;
  points: Pt[];
  dash?: string;
  width?: number;
  marker?: boolean;
  markerClass?: string;
  cssClass?: string;
  noLine?: boolean;
  band?: BandPt[];
  errorBars?: BandPt[];
}

export interface AxisSpec {
  label: string;
  log?: boolean;
}

export interface PanelSpec {
  title: string;
  subtitle?: string;
  x: AxisSpec;
  y: AxisSpec;
  series: Series[];
}

export const PALETTE = [
  "#4361ee", "#e63946", "#2d6a4f", "#f77f00", "#7209b7",
  "#0096c7", "#d62828", "#588157", "#b5838d", "#003049",
] as const;

const W = 380, H = 300;
const ML = 52, MR = 14, MT = 34, MB = 42;
const PW = W - ML - MR;
const PH = H - MT - MB;

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmtTick(v: number): string {
  if (v === Math.round(v) && Math.abs(v) < 1e6) return String(v);
  return v.toPrecision(3);
}

function linTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 0.01; v += step) {
    // snap away float drift so tick labels stay short
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : Number(v.toPrecision(12)));
  }
  return ticks;
}

function logTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.floor(Math.log10(min)); e <= Math.ceil(Math.log10(max)); e++) {
    for (const m of [1, 2, 5]) {
      const v = m * Math.pow(10, e);
      if (v >= min * 0.999 && v <= max * 1.001) ticks.push(Number(v.toPrecision(12)));
    }
  }
  return ticks.length >= 2 ? ticks : [min, max];
}

interface Scale {
  of: (v: number) => number;
  ticks: number[];
}

function makeScale(axis: AxisSpec, values: number[], lo: number, hi: number): Scale {
  let vmin = Math.min(...values);
  let vmax = Math.max(...values);
  if (axis.log) {
    vmin /= 1.15;
    vmax *= 1.15;
    const [lmin, lmax] = [Math.log(vmin), Math.log(vmax)];
    return {
      of: (v) => lo + ((Math.log(v) - lmin) / (lmax - lmin || 1)) * (hi - lo),
      ticks: logTicks(vmin, vmax),
    };
  }
  const pad = (vmax - vmin || 1) * 0.06;
  vmin -= pad;
  vmax += pad;
  return {
    of: (v) => lo + ((v - vmin) / (vmax - vmin || 1)) * (hi - lo),
    ticks: linTicks(vmin, vmax, 5),
  };
}

function panelBody(spec: PanelSpec): string {
  const xsRaw: number[] = [];
  const ysRaw: number[] = [];
  for (const sr of spec.series) {
    for (const p of sr.points) {
      xsRaw.push(p.x);
      ysRaw.push(p.y);
    }
    for (const b of sr.band ?? []) {
      xsRaw.push(b.x);
      ysRaw.push(b.lo, b.hi);
    }
    for (const b of sr.errorBars ?? []) {
      xsRaw.push(b.x);
      ysRaw.push(b.lo, b.hi);
    }
  }
  // log axes cannot represent zero or negative values
  const xs = spec.x.log ? xsRaw.filter((v) => v > 0) : xsRaw;
  const ys = spec.y.log ? ysRaw.filter((v) => v > 0) : ysRaw;
  const xysane = xs.length > 0 && ys.length > 0;
  const xScale = makeScale(spec.x, xysane ? xs : [1], ML, ML + PW);
  const yScale = makeScale(spec.y, xysane ? ys : [1], MT + PH, MT);
  const X = (v: number) => xScale.of(v).toFixed(1);
  const Y = (v: number) => yScale.of(v).toFixed(1);
  const usable = (p: Pt) =>
    (!spec.x.log || p.x > 0) && (!spec.y.log || p.y > 0);

  let s = "";
  s += `<text x="${ML}" y="14" font-size="10" font-weight="600" fill="#222">${esc(spec.title)}</text>\n`;
  if (spec.subtitle) {
    s += `<text x="${ML}" y="25" font-size="7" fill="#888">${esc(spec.subtitle)}</text>\n`;
  }

  for (const v of yScale.ticks) {
    s += `<line x1="${ML}" y1="${Y(v)}" x2="${ML + PW}" y2="${Y(v)}" stroke="#eee" stroke-width="0.5"/>\n`;
  }

  for (const sr of spec.series) {
    const band = (sr.band ?? []).filter((b) =>
      (!spec.x.log || b.x > 0) && (!spec.y.log || (b.lo > 0 && b.hi > 0)));
    if (band.length > 1) {
      const upper = band.map((b) => `${X(b.x)},${Y(b.hi)}`).join(" ");
      const lower = band.slice().reverse().map((b) => `${X(b.x)},${Y(b.lo)}`).join(" ");
      s += `<polygon class="iqr-band" fill="${sr.color}" opacity="0.12" points="${upper} ${lower}"/>\n`;
    }
  }

  for (const sr of spec.series) {
    const pts = sr.points.filter(usable);
    if (pts.length > 1 && !sr.noLine) {
      const path = pts.map((p) => `${X(p.x)},${Y(p.y)}`).join(" ");
      const cls = sr.cssClass ? ` class="${sr.cssClass}"` : "";
      const dash = sr.dash ? ` stroke-dasharray="${sr.dash}"` : "";
      s += `<polyline${cls} fill="none" stroke="${sr.color}" stroke-width="${sr.width ?? 1.2}"${dash} points="${path}"/>\n`;
    }
    for (const b of sr.errorBars ?? []) {
      s += `<line x1="${X(b.x)}" y1="${Y(b.lo)}" x2="${X(b.x)}" y2="${Y(b.hi)}" stroke="${sr.color}" stroke-width="0.8"/>\n`;
    }
    if (sr.marker) {
      for (const p of pts) {
        const cls = sr.markerClass ? ` class="${sr.markerClass}"` : "";
        s += `<circle${cls} cx="${X(p.x)}" cy="${Y(p.y)}" r="2" fill="${sr.color}"/>\n`;
      }
    }
  }

  s += `<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + PH}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<line x1="${ML}" y1="${MT + PH}" x2="${ML + PW}" y2="${MT + PH}" stroke="#333" stroke-width="0.7"/>\n`;

  for (const v of xScale.ticks) {
    s += `<line x1="${X(v)}" y1="${MT + PH}" x2="${X(v)}" y2="${MT + PH + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${X(v)}" y="${MT + PH + 12}" text-anchor="middle" font-size="6.5" fill="#666">${esc(fmtTick(v))}</text>\n`;
  }
  s += `<text x="${ML + PW / 2}" y="${H - 6}" text-anchor="middle" font-size="8" fill="#444">${esc(spec.x.label)}</text>\n`;

  for (const v of yScale.ticks) {
    s += `<line x1="${ML - 3}" y1="${Y(v)}" x2="${ML}" y2="${Y(v)}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${ML - 5}" y="${(yScale.of(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="6.5" fill="#666">${esc(fmtTick(v))}</text>\n`;
  }
  s += `<text x="12" y="${MT + PH / 2}" text-anchor="middle" font-size="8" fill="#444" transform="rotate(-90,12,${MT + PH / 2})">${esc(spec.y.label)}</text>\n`;

  const labeled = spec.series.filter((sr) => sr.label.length > 0);
  if (labeled.length > 0) {
    const lw = Math.max(...labeled.map((sr) => sr.label.length)) * 4.2 + 26;
    const lh = labeled.length * 10 + 4;
    const lx = ML + PW - lw - 2;
    const ly = MT + 4;
    s += `<rect x="${lx}" y="${ly}" width="${lw}" height="${lh}" rx="2" fill="white" fill-opacity="0.85" stroke="#ddd" stroke-width="0.4"/>\n`;
    labeled.forEach((sr, i) => {
      const yy = ly + 8 + i * 10;
      const dash = sr.dash ? ` stroke-dasharray="${sr.dash}"` : "";
      s += `<line x1="${lx + 4}" y1="${yy}" x2="${lx + 16}" y2="${yy}" stroke="${sr.color}" stroke-width="1.2"${dash}/>\n`;
      s += `<text x="${lx + 20}" y="${yy + 2.5}" font-size="6" fill="#444">${esc(sr.label)}</text>\n`;
    });
  }
  return s;
}

/** One standalone SVG with the panels laid out left to right. */
export function chart(panels: PanelSpec[]): string {
  const total = W * panels.length;
  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${total} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${total}" height="${H}" fill="#fff"/>\n`;
  panels.forEach((p, i) => {
    s += `<g transform="translate(${i * W},0)">\n${panelBody(p)}</g>\n`;
  });
  s += `</svg>\n`;
  return s;
}
