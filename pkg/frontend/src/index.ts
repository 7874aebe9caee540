export { parseCsv, readCurvesFile, SchemaError, CurvesFile, ChannelCurve } from "./csv";
export { makeSpec, renderFigure, DEFAULTS, PlotSpec } from "./figure";
export { encodePng, decodePng, crc32, PNG_SIGNATURE } from "./png";
export { renderSvg } from "./svg";
export { Raster, textWidth } from "./raster";
export { run, parseArgs } from "./cli";
