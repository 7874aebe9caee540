/** Figure layout: one panel per input file, log-x curves, threshold line. */

import { CurvesFile } from "./csv";
import { Color, Raster, textWidth } from "./raster";

export interface PlotSpec {
  files: CurvesFile[];
  threshold: number;
  logX: boolean;
  panelWidth: number;
  panelHeight: number;
}

export const DEFAULTS = {
  threshold: 1 / 3,
  logX: true,
  panelWidth: 360,
  panelHeight: 300,
};

const MARGIN = { left: 56, right: 14, top: 26, bottom: 40 };
const CURVE_COLOR: Color = [31, 119, 180, 64]; // translucent blue
const THRESHOLD_COLOR: Color = [214, 39, 40, 255]; // opaque red
const AXIS_COLOR: Color = [0, 0, 0, 255];
const GRID_COLOR: Color = [0, 0, 0, 40];

export function makeSpec(files: CurvesFile[], threshold?: number, logX?: boolean): PlotSpec {
  if (files.length === 0) {
    throw new Error("at least one curves file is required");
  }
  const t = threshold ?? DEFAULTS.threshold;
  if (!(t > 0 && t < 1)) {
    throw new Error(`threshold must lie in (0, 1), got ${t}`);
  }
  return {
    files,
    threshold: t,
    logX: logX ?? DEFAULTS.logX,
    panelWidth: DEFAULTS.panelWidth,
    panelHeight: DEFAULTS.panelHeight,
  };
}

function fmt(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e6) return String(v);
  const exp = Math.floor(Math.log10(Math.abs(v)));
  if (Math.abs(exp) >= 3) {
    const mant = v / 10 ** exp;
    const m = Math.abs(mant - 1) < 1e-9 ? "10" : `${mant.toFixed(1)}.10`;
    return `${m}${exp}`; // compact: mantissa then exponent
  }
  return v.toPrecision(3);
}

export interface PanelGeometry {
  x0: number;
  y0: number;
  plotX: number;
  plotY: number;
  plotW: number;
  plotH: number;
  thresholdY: number;
}

/** Y pixel of a probability value inside a panel (linear scale 0..1). */
function yPixel(p: number, geom: { plotY: number; plotH: number }): number {
  return geom.plotY + (1 - p) * geom.plotH;
}

export function renderFigure(spec: PlotSpec): { raster: Raster; panels: PanelGeometry[] } {
  const n = spec.files.length;
  const width = n * spec.panelWidth;
  const height = spec.panelHeight;
  const raster = new Raster(width, height);
  const panels: PanelGeometry[] = [];
  for (const [i, file] of spec.files.entries()) {
    const x0 = i * spec.panelWidth;
    const plotX = x0 + MARGIN.left;
    const plotY = MARGIN.top;
    const plotW = spec.panelWidth - MARGIN.left - MARGIN.right;
    const plotH = height - MARGIN.top - MARGIN.bottom;

    const allN = file.channels.flatMap((c) => c.points.map((p) => p.N));
    let nMin = Math.min(...allN);
    let nMax = Math.max(...allN);
    if (spec.logX) {
      nMin = Math.log10(Math.max(nMin, 1));
      nMax = Math.log10(Math.max(nMax, 1));
    }
    if (nMax <= nMin) nMax = nMin + 1;
    const xPixel = (N: number) => {
      const v = spec.logX ? Math.log10(Math.max(N, 1)) : N;
      return plotX + ((v - nMin) / (nMax - nMin)) * plotW;
    };

    // frame and grid
    raster.fillRect(plotX, plotY, plotW, 1, AXIS_COLOR);
    raster.fillRect(plotX, plotY + plotH, plotW, 1, AXIS_COLOR);
    raster.fillRect(plotX, plotY, 1, plotH, AXIS_COLOR);
    raster.fillRect(plotX + plotW, plotY, 1, plotH + 1, AXIS_COLOR);
    for (const frac of [0.25, 0.5, 0.75]) {
      raster.fillRect(plotX, yPixel(frac, { plotY, plotH }), plotW, 1, GRID_COLOR);
    }
    // x tick marks each decade when log-scaled
    if (spec.logX) {
      for (let e = Math.ceil(nMin); e <= Math.floor(nMax); e++) {
        const xt = plotX + ((e - nMin) / (nMax - nMin)) * plotW;
        raster.fillRect(xt, plotY + plotH, 1, 4, AXIS_COLOR);
        const label = `10${e}`;
        raster.text(xt - textWidth(label) / 2, plotY + plotH + 7, label, AXIS_COLOR);
      }
    }
    for (const p of [0, 0.5, 1]) {
      const label = p.toFixed(1);
      raster.text(
        plotX - textWidth(label) - 6,
        yPixel(p, { plotY, plotH }) - 3,
        label,
        AXIS_COLOR,
      );
    }

    // one translucent curve per channel
    for (const channel of file.channels) {
      const xs = channel.points.map((p) => xPixel(p.N));
      const ys = channel.points.map((p) => yPixel(p.pError, { plotY, plotH }));
      raster.polyline(xs, ys, CURVE_COLOR);
    }

    // threshold line
    const ty = Math.round(yPixel(spec.threshold, { plotY, plotH }));
    raster.fillRect(plotX, ty, plotW, 1, THRESHOLD_COLOR);

    // labels: panel title carries d and epsilon from the data
    const title = `d=${fmt(file.d)}  eps=${fmt(file.epsilon)}`;
    raster.text(plotX + (plotW - textWidth(title)) / 2, 8, title, AXIS_COLOR);
    const xlab = "queries N";
    raster.text(plotX + (plotW - textWidth(xlab)) / 2, plotY + plotH + 22, xlab, AXIS_COLOR);
    // y label written vertically, one character per line
    const ylab = "P err";
    for (let k = 0; k < ylab.length; k++) {
      raster.text(x0 + 6, plotY + 10 + k * 10, ylab[k], AXIS_COLOR);
    }

    panels.push({ x0, y0: 0, plotX, plotY, plotW, plotH, thresholdY: ty });
  }
  return { raster, panels };
}
