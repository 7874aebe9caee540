import { describe, expect, it } from "vitest";

import { CurvesFile } from "../src/csv";
import { makeSpec, renderFigure } from "../src/figure";
import { decodePng, encodePng, PNG_SIGNATURE } from "../src/png";
import { Raster } from "../src/raster";

function syntheticFile(d: number, channels = 3): CurvesFile {
  const out: CurvesFile = { d, epsilon: 0.01, channels: [] };
  for (let k = 0; k < channels; k++) {
    const p = 0.99 + 0.002 * k;
    const points = [];
    for (let e = 2; e <= 7; e += 0.5) {
      const N = 10 ** e;
      points.push({ N, pError: Math.exp(N * Math.log(p)) });
    }
    out.channels.push({ d, epsilon: 0.01, channelIndex: k, traceAbs: d - 0.1, passProb: p, points });
  }
  return out;
}

describe("renderFigure", () => {
  it("lays out one panel per file", () => {
    const spec = makeSpec([syntheticFile(4), syntheticFile(32)]);
    const { raster, panels } = renderFigure(spec);
    expect(panels).toHaveLength(2);
    expect(raster.width).toBe(2 * spec.panelWidth);
    expect(panels[1].x0).toBe(spec.panelWidth);
  });

  it("draws the threshold line in red across each panel", () => {
    const spec = makeSpec([syntheticFile(4)], 1 / 3);
    const { raster, panels } = renderFigure(spec);
    const g = panels[0];
    // threshold row should be dominated by the line colour
    let redRun = 0;
    for (let x = g.plotX + 1; x < g.plotX + g.plotW - 1; x++) {
      const [r, gg, b] = raster.pixel(x, g.thresholdY);
      if (r > 150 && gg < 120 && b < 120) redRun++;
    }
    expect(redRun).toBeGreaterThan(g.plotW * 0.9);
    // the threshold sits at 1/3 from the bottom of the plot box
    const expected = g.plotY + (1 - 1 / 3) * g.plotH;
    expect(Math.abs(g.thresholdY - expected)).toBeLessThanOrEqual(1);
  });

  it("draws curve pixels inside the plot box", () => {
    const spec = makeSpec([syntheticFile(4)]);
    const { raster, panels } = renderFigure(spec);
    const g = panels[0];
    let bluish = 0;
    for (let y = g.plotY; y < g.plotY + g.plotH; y += 2) {
      for (let x = g.plotX; x < g.plotX + g.plotW; x += 2) {
        const [r, , b] = raster.pixel(x, y);
        if (b > r + 20) bluish++;
      }
    }
    expect(bluish).toBeGreaterThan(50);
  });

  it("rejects empty input and bad thresholds", () => {
    expect(() => makeSpec([])).toThrow(/at least one/);
    expect(() => makeSpec([syntheticFile(4)], 1.5)).toThrow(/threshold/);
  });

  it("is deterministic", () => {
    const spec = makeSpec([syntheticFile(4)]);
    const a = renderFigure(spec).raster.data;
    const b = renderFigure(spec).raster.data;
    expect(Buffer.from(a).equals(Buffer.from(b))).toBe(true);
  });
});

describe("png", () => {
  it("round-trips the raster through encode/decode", () => {
    const r = new Raster(40, 30);
    r.fillRect(5, 5, 10, 10, [200, 10, 10, 255]);
    r.line(0, 0, 39, 29, [0, 0, 0, 255]);
    const png = encodePng(r.width, r.height, r.data);
    expect(png.subarray(0, 8).equals(PNG_SIGNATURE)).toBe(true);
    const back = decodePng(png);
    expect(back.width).toBe(40);
    expect(back.height).toBe(30);
    expect(Buffer.from(back.rgba).equals(Buffer.from(r.data))).toBe(true);
  });

  it("validates buffer size", () => {
    expect(() => encodePng(10, 10, new Uint8Array(3))).toThrow(/match/);
  });
});
