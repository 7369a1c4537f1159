/**
 * Minimal hand-rolled SVG line charts.
 *
 * Every plotted point carries the original CSV field strings in data-series /
 * data-x / data-y attributes, so a chart can be audited against its source
 * without decoding pixel coordinates.
 */

export interface Point {
  x: number;
  y: number;
  rawX: string;
  rawY: string;
  sem?: number;
}

export interface Series {
  name: string;
  label: string;
  color: string;
  points: Point[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog: boolean;
}

const WIDTH = 680;
const HEIGHT = 440;
const MARGIN = { top: 46, right: 24, bottom: 54, left: 70 };

type Scale = (value: number) => number;

function linearScale(min: number, max: number, lo: number, hi: number): Scale {
  const span = max - min || 1;
  return (v) => lo + ((v - min) / span) * (hi - lo);
}

function logScale(min: number, max: number, lo: number, hi: number): Scale {
  const a = Math.log10(min);
  const span = Math.log10(max) - a || 1;
  return (v) => lo + ((Math.log10(v) - a) / span) * (hi - lo);
}

function linearTicks(min: number, max: number, count = 6): number[] {
  const span = max - min || 1;
  const step = 10 ** Math.floor(Math.log10(span / count));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count) ?? 10 * step;
  const start = Math.ceil(min / chosen) * chosen;
  const ticks: number[] = [];
  for (let v = start; v <= max + 1e-12 * span; v += chosen) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function logTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (let d = Math.ceil(Math.log10(min) - 1e-9); 10 ** d <= max * (1 + 1e-9); d++) {
    ticks.push(10 ** d);
  }
  return ticks.length >= 2 ? ticks : [min, max];
}

function fmt(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e4 || abs < 1e-3) return value.toExponential(0);
  return String(Number(value.toPrecision(4)));
}

const esc = (text: string) =>
  text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

export function renderChart(series: Series[], options: ChartOptions): string {
  const points = series.flatMap((s) => s.points);
  if (points.length === 0) {
    throw new Error("nothing to plot");
  }
  const xs = points.map((p) => p.x);
  const ysLow = points.map((p) => p.y - (p.sem ?? 0));
  const ysHigh = points.map((p) => p.y + (p.sem ?? 0));
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  let yMin = Math.min(0, ...ysLow);
  let yMax = Math.max(...ysHigh);
  if (yMax === yMin) yMax = yMin + 1;

  const xScale = (options.xLog ? logScale : linearScale)(
    xMin, xMax, MARGIN.left, WIDTH - MARGIN.right,
  );
  const yScale = linearScale(yMin, yMax, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">${esc(options.title)}</text>`,
  );

  const axisY = HEIGHT - MARGIN.bottom;
  const xTicks = (options.xLog ? logTicks : linearTicks)(xMin, xMax);
  for (const tick of xTicks) {
    const x = xScale(tick);
    parts.push(`<line x1="${x}" y1="${axisY}" x2="${x}" y2="${axisY + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${x}" y="${axisY + 20}" text-anchor="middle">${esc(fmt(tick))}</text>`,
    );
  }
  for (const tick of linearTicks(yMin, yMax)) {
    const y = yScale(tick);
    parts.push(`<line x1="${MARGIN.left - 5}" y1="${y}" x2="${MARGIN.left}" y2="${y}" stroke="black"/>`);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${WIDTH - MARGIN.right}" y2="${y}" stroke="#dddddd"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 9}" y="${y + 4}" text-anchor="end">${esc(fmt(tick))}</text>`,
    );
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${axisY}" x2="${WIDTH - MARGIN.right}" y2="${axisY}" stroke="black"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axisY}" stroke="black"/>`,
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 14}" text-anchor="middle">${esc(options.xLabel)}</text>`,
    `<text x="18" y="${(MARGIN.top + axisY) / 2}" text-anchor="middle" transform="rotate(-90 18 ${(MARGIN.top + axisY) / 2})">${esc(options.yLabel)}</text>`,
  );

  series.forEach((s, index) => {
    const coords = s.points.map((p) => [xScale(p.x), yScale(p.y)] as const);
    if (coords.length > 1) {
      const path = coords.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
      parts.push(
        `<polyline points="${path}" fill="none" stroke="${s.color}" stroke-width="1.8" data-line="${esc(s.name)}"/>`,
      );
    }
    s.points.forEach((p, i) => {
      const [x, y] = coords[i];
      if (p.sem && p.sem > 0) {
        const yLo = yScale(p.y - p.sem);
        const yHi = yScale(p.y + p.sem);
        parts.push(
          `<line x1="${x}" y1="${yLo}" x2="${x}" y2="${yHi}" stroke="${s.color}" stroke-width="1"/>`,
          `<line x1="${x - 3}" y1="${yLo}" x2="${x + 3}" y2="${yLo}" stroke="${s.color}" stroke-width="1"/>`,
          `<line x1="${x - 3}" y1="${yHi}" x2="${x + 3}" y2="${yHi}" stroke="${s.color}" stroke-width="1"/>`,
        );
      }
      parts.push(
        `<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="3.2" fill="${s.color}" ` +
          `data-series="${esc(s.name)}" data-x="${esc(p.rawX)}" data-y="${esc(p.rawY)}"/>`,
      );
    });
    const legendY = MARGIN.top + 8 + 17 * index;
    const legendX = WIDTH - MARGIN.right - 150;
    parts.push(
      `<line x1="${legendX}" y1="${legendY}" x2="${legendX + 22}" y2="${legendY}" stroke="${s.color}" stroke-width="2"/>`,
      `<text x="${legendX + 28}" y="${legendY + 4}">${esc(s.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
