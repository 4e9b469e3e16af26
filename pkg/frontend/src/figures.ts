/** Figure presets over the sweep report schema. */

export type FigureKind = "fig1" | "fig2";

export interface FigureSpec {
  kind: FigureKind;
  xColumn: string;
  yColumn: string;
  /** Column holding the half-length of the error bars, if any. */
  yErrColumn: string | null;
  groupColumn: string;
  xLabel: string;
  yLabel: string;
  title: string;
}

export const FIGURES: Record<FigureKind, FigureSpec> = {
  // Transmit power needed for the target sum rate, against antenna count.
  // The report carries no spread column for power, so no error bars here.
  fig1: {
    kind: "fig1",
    xColumn: "value",
    yColumn: "ptx_mw_mean",
    yErrColumn: null,
    groupColumn: "scheme",
    xLabel: "BS antennas",
    yLabel: "transmit power (mW)",
    title: "Transmit power at the target sum rate",
  },
  // Energy efficiency against circuit power, with standard-error bars.
  fig2: {
    kind: "fig2",
    xColumn: "value",
    yColumn: "ee_mean",
    yErrColumn: "ee_stderr",
    groupColumn: "scheme",
    xLabel: "circuit power (dBm)",
    yLabel: "energy efficiency (Mbit/J)",
    title: "Energy efficiency vs circuit power",
  },
};

export function figureSpec(kind: string): FigureSpec {
  if (kind !== "fig1" && kind !== "fig2") {
    throw new Error(`unknown figure "${kind}"; expected fig1 or fig2`);
  }
  return FIGURES[kind];
}
