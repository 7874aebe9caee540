/** SVG rendering of the same figure model (vector alternative to PNG). */

import { CurvesFile } from "./csv";
import { PlotSpec } from "./figure";

const MARGIN = { left: 56, right: 14, top: 26, bottom: 40 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderSvg(spec: PlotSpec): string {
  const n = spec.files.length;
  const width = n * spec.panelWidth;
  const height = spec.panelHeight;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
  ];
  spec.files.forEach((file: CurvesFile, i: number) => {
    const x0 = i * spec.panelWidth;
    const plotX = x0 + MARGIN.left;
    const plotY = MARGIN.top;
    const plotW = spec.panelWidth - MARGIN.left - MARGIN.right;
    const plotH = height - MARGIN.top - MARGIN.bottom;
    const allN = file.channels.flatMap((c) => c.points.map((p) => p.N));
    let nMin = Math.log10(Math.max(Math.min(...allN), 1));
    let nMax = Math.log10(Math.max(Math.max(...allN), 1));
    if (!spec.logX) {
      nMin = Math.min(...allN);
      nMax = Math.max(...allN);
    }
    if (nMax <= nMin) nMax = nMin + 1;
    const xPix = (N: number) => {
      const v = spec.logX ? Math.log10(Math.max(N, 1)) : N;
      return plotX + ((v - nMin) / (nMax - nMin)) * plotW;
    };
    const yPix = (p: number) => plotY + (1 - p) * plotH;
    parts.push(
      `<rect x="${plotX}" y="${plotY}" width="${plotW}" height="${plotH}" fill="none" stroke="black"/>`,
    );
    for (const channel of file.channels) {
      const d = channel.points
        .map((p, j) => `${j === 0 ? "M" : "L"}${xPix(p.N).toFixed(2)},${yPix(p.pError).toFixed(2)}`)
        .join(" ");
      parts.push(`<path d="${d}" fill="none" stroke="#1f77b4" stroke-opacity="0.25"/>`);
    }
    parts.push(
      `<line x1="${plotX}" y1="${yPix(spec.threshold).toFixed(2)}" x2="${plotX + plotW}" ` +
        `y2="${yPix(spec.threshold).toFixed(2)}" stroke="#d62728" stroke-width="1.5"/>`,
    );
    parts.push(
      `<text x="${plotX + plotW / 2}" y="16" text-anchor="middle" font-size="12">` +
        `${esc(`d=${file.d}  eps=${file.epsilon}`)}</text>`,
      `<text x="${plotX + plotW / 2}" y="${height - 8}" text-anchor="middle" font-size="11">queries N</text>`,
      `<text x="${x0 + 14}" y="${plotY + plotH / 2}" text-anchor="middle" font-size="11" ` +
        `transform="rotate(-90 ${x0 + 14} ${plotY + plotH / 2})">error probability</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
