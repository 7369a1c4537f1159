/**
 * Fixed styling per figure id: which columns become curves, the axis labels,
 * and the x scale. Styling is deliberately not configurable so figures stay
 * comparable across runs.
 */

import type { Column } from "./csv.js";

export interface SeriesSpec {
  column: Column;
  label: string;
  color: string;
  /** Standard-error column rendered as vertical bars, when present. */
  sem?: Column;
}

export interface FigureSpec {
  id: string;
  title: string;
  xLabel: string;
  yLabel: string;
  xLog: boolean;
  series: SeriesSpec[];
}

const RATE_LABEL = "mean achievable rate (bits/s/Hz)";

export const FIGURES: Record<string, FigureSpec> = {
  fig2: {
    id: "fig2",
    title: "Harvest and transmit time vs interference cap",
    xLabel: "interference cap (W)",
    yLabel: "mean slot count",
    xLog: true,
    series: [
      { column: "mean_eh_slots", label: "harvest slots", color: "#1f77b4" },
      { column: "mean_tx_slots", label: "transmit slots", color: "#d62728" },
    ],
  },
  fig3: {
    id: "fig3",
    title: "Achievable rate vs interference cap",
    xLabel: "interference cap (W)",
    yLabel: RATE_LABEL,
    xLog: true,
    series: [
      { column: "mean_rate_opt", label: "optimal policy", color: "#1f77b4", sem: "sem_rate_opt" },
    ],
  },
  fig4: {
    id: "fig4",
    title: "Optimal vs greedy rate as the horizon grows",
    xLabel: "number of slots N",
    yLabel: RATE_LABEL,
    xLog: false,
    series: [
      { column: "mean_rate_opt", label: "optimal policy", color: "#1f77b4", sem: "sem_rate_opt" },
      { column: "mean_rate_greedy", label: "greedy baseline", color: "#d62728", sem: "sem_rate_greedy" },
    ],
  },
  fig5: {
    id: "fig5",
    title: "Achievable rate vs licensed transmit power",
    xLabel: "licensed transmit power (W)",
    yLabel: RATE_LABEL,
    xLog: false,
    series: [
      { column: "mean_rate_opt", label: "optimal policy", color: "#1f77b4", sem: "sem_rate_opt" },
    ],
  },
  fig6: {
    id: "fig6",
    title: "Achievable rate across link-quality profiles",
    xLabel: "channel profile index",
    yLabel: RATE_LABEL,
    xLog: false,
    series: [
      { column: "mean_rate_opt", label: "optimal policy", color: "#1f77b4", sem: "sem_rate_opt" },
    ],
  },
};

export const FIGURE_IDS = Object.keys(FIGURES);
