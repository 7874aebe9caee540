import { describe, expect, it } from "vitest";

import { CURVES_HEADER, parseCsv, readCurvesFile, SchemaError } from "../src/csv";

const HEADER = CURVES_HEADER.join(",");

function rows(...lines: string[]): string {
  return [HEADER, ...lines].join("\n") + "\n";
}

describe("parseCsv", () => {
  it("splits simple rows", () => {
    expect(parseCsv("a,b\n1,2\n")).toEqual([
      ["a", "b"],
      ["1", "2"],
    ]);
  });

  it("honours quotes and CRLF", () => {
    expect(parseCsv('a,"x,y"\r\n"q""q",2\r\n')).toEqual([
      ["a", "x,y"],
      ['q"q', "2"],
    ]);
  });
});

describe("readCurvesFile", () => {
  it("groups points by channel and sorts them", () => {
    const text = rows(
      "4,0.01,1,3.9,0.99,100,0.5",
      "4,0.01,0,3.8,0.98,200,0.25",
      "4,0.01,0,3.8,0.98,100,0.5",
    );
    const file = readCurvesFile(text, "t.csv");
    expect(file.d).toBe(4);
    expect(file.epsilon).toBe(0.01);
    expect(file.channels.map((c) => c.channelIndex)).toEqual([0, 1]);
    expect(file.channels[0].points.map((p) => p.N)).toEqual([100, 200]);
  });

  it("rejects a wrong header", () => {
    expect(() => readCurvesFile("a,b,c\n1,2,3\n", "t.csv")).toThrow(SchemaError);
  });

  it("rejects a header-only file", () => {
    expect(() => readCurvesFile(HEADER + "\n", "t.csv")).toThrow(/no data rows/);
  });

  it("rejects an empty file", () => {
    expect(() => readCurvesFile("", "t.csv")).toThrow(SchemaError);
  });

  it("rejects non-numeric fields", () => {
    expect(() => readCurvesFile(rows("4,0.01,0,nope,0.9,10,0.5"), "t.csv")).toThrow(/non-numeric/);
  });

  it("rejects short rows", () => {
    expect(() => readCurvesFile(rows("4,0.01,0"), "t.csv")).toThrow(/fields/);
  });

  it("rejects mixed dimensions in one file", () => {
    const text = rows("4,0.01,0,3.8,0.98,100,0.5", "8,0.01,0,3.8,0.98,100,0.5");
    expect(() => readCurvesFile(text, "t.csv")).toThrow(/mixed/);
  });
});
