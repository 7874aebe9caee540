/** Parsing and validation of the simulator's curve CSV files. */

export interface CurvePoint {
  N: number;
  pError: number;
}

export interface ChannelCurve {
  d: number;
  epsilon: number;
  channelIndex: number;
  traceAbs: number;
  passProb: number;
  points: CurvePoint[];
}

export interface CurvesFile {
  d: number;
  epsilon: number;
  channels: ChannelCurve[];
}

export const CURVES_HEADER = [
  "d",
  "epsilon",
  "channel_index",
  "trace_abs",
  "pass_prob",
  "N",
  "p_error",
];

export class SchemaError extends Error {}

/** Minimal RFC-4180 field splitter (quotes honoured, LF or CRLF rows). */
export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let field = "";
  let row: string[] = [];
  let inQuotes = false;
  for (let i = 0; i < text.length; i++) {
    const c = text[i];
    if (inQuotes) {
      if (c === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          inQuotes = false;
        }
      } else {
        field += c;
      }
    } else if (c === '"') {
      inQuotes = true;
    } else if (c === ",") {
      row.push(field);
      field = "";
    } else if (c === "\n") {
      row.push(field.endsWith("\r") ? field.slice(0, -1) : field);
      rows.push(row);
      row = [];
      field = "";
    } else {
      field += c;
    }
  }
  if (field.length > 0 || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  return rows;
}

function num(raw: string, where: string): number {
  const v = Number(raw);
  if (raw.trim() === "" || Number.isNaN(v)) {
    throw new SchemaError(`non-numeric value ${JSON.stringify(raw)} in ${where}`);
  }
  return v;
}

/** Parse one curves CSV, enforcing the exact header and per-file consistency. */
export function readCurvesFile(text: string, name: string): CurvesFile {
  const rows = parseCsv(text).filter((r) => !(r.length === 1 && r[0] === ""));
  if (rows.length === 0) {
    throw new SchemaError(`${name}: empty file`);
  }
  const header = rows[0];
  if (header.length !== CURVES_HEADER.length || header.some((h, i) => h !== CURVES_HEADER[i])) {
    throw new SchemaError(
      `${name}: bad header [${header.join(",")}], expected [${CURVES_HEADER.join(",")}]`,
    );
  }
  const data = rows.slice(1);
  if (data.length === 0) {
    throw new SchemaError(`${name}: no data rows`);
  }
  const byChannel = new Map<number, ChannelCurve>();
  let d: number | null = null;
  let epsilon: number | null = null;
  for (const [j, r] of data.entries()) {
    const where = `${name}:${j + 2}`;
    if (r.length !== CURVES_HEADER.length) {
      throw new SchemaError(`${where}: expected ${CURVES_HEADER.length} fields, got ${r.length}`);
    }
    const rowD = num(r[0], where);
    const rowEps = num(r[1], where);
    const idx = num(r[2], where);
    d = d ?? rowD;
    epsilon = epsilon ?? rowEps;
    if (rowD !== d || rowEps !== epsilon) {
      throw new SchemaError(`${where}: mixed (d, epsilon) within one file`);
    }
    let channel = byChannel.get(idx);
    if (!channel) {
      channel = {
        d: rowD,
        epsilon: rowEps,
        channelIndex: idx,
        traceAbs: num(r[3], where),
        passProb: num(r[4], where),
        points: [],
      };
      byChannel.set(idx, channel);
    }
    channel.points.push({ N: num(r[5], where), pError: num(r[6], where) });
  }
  const channels = [...byChannel.values()].sort((a, b) => a.channelIndex - b.channelIndex);
  for (const c of channels) {
    c.points.sort((a, b) => a.N - b.N);
  }
  return { d: d as number, epsilon: epsilon as number, channels };
}
