/** Ties the schema, the figure registry, and the SVG backend together. */

import { readFile, writeFile } from "fs/promises";

import { parseSweepCsv, SchemaError, type SweepRow } from "./csv.js";
import { FIGURES, FIGURE_IDS, type FigureSpec } from "./figures.js";
import { renderChart, type Series } from "./svg.js";

export class UnknownFigureError extends Error {}

export function figureSpec(figId: string): FigureSpec {
  const spec = FIGURES[figId];
  if (!spec) {
    throw new UnknownFigureError(
      `unknown figure id ${figId}; expected one of ${FIGURE_IDS.join(", ")}`,
    );
  }
  return spec;
}

export function buildSeries(spec: FigureSpec, rows: SweepRow[]): Series[] {
  return spec.series.map((s) => ({
    name: s.column,
    label: s.label,
    color: s.color,
    points: rows.map((row) => ({
      x: row.values.x_value,
      y: row.values[s.column],
      rawX: row.raw.x_value,
      rawY: row.raw[s.column],
      sem: s.sem ? row.values[s.sem] : undefined,
    })),
  }));
}

export function renderFigure(figId: string, csvText: string): string {
  const spec = figureSpec(figId);
  const rows = parseSweepCsv(csvText);
  if (spec.xLog && rows.some((r) => r.values.x_value <= 0)) {
    throw new SchemaError(`${figId} needs positive x values for its log axis`);
  }
  return renderChart(buildSeries(spec, rows), {
    title: spec.title,
    xLabel: spec.xLabel,
    yLabel: spec.yLabel,
    xLog: spec.xLog,
  });
}

export async function renderFile(figId: string, csvPath: string, outPath: string): Promise<void> {
  const text = await readFile(csvPath, "utf8");
  await writeFile(outPath, renderFigure(figId, text), "utf8");
}

/** Extracts the plotted (series, x, y) triples back out of a rendered SVG. */
export function extractPoints(svg: string): Array<{ series: string; x: string; y: string }> {
  const points: Array<{ series: string; x: string; y: string }> = [];
  const circle = /<circle [^>]*data-series="([^"]*)" data-x="([^"]*)" data-y="([^"]*)"/g;
  for (const match of svg.matchAll(circle)) {
    points.push({ series: match[1], x: match[2], y: match[3] });
  }
  return points;
}
