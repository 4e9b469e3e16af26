export { parseCsv, requireColumns } from "./csv.js";
export { FIGURES, figureSpec } from "./figures.js";
export { extractEmbeddedData, renderFigure } from "./render.js";
