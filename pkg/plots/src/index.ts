export { parseCsv, requireColumns, column, textColumn, SchemaError } from "./csv.js";
export { renderFigure, renderConvergence, renderRatioHist, renderSweep,
         fitSlope, SHARP_SUP } from "./figures.js";
export type { FigureSpec, FigureKind } from "./figures.js";
export { main, parseArgs, UsageError } from "./cli.js";
