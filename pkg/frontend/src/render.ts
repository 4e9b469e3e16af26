/**
 * Render one sweep report CSV into a standalone SVG figure.
 *
 * The renderer is a pure function of (csv text, figure kind): it never
 * reads the clock and never reorders the data, so rendering the same CSV
 * twice gives byte-identical output. The exact cell strings that were
 * plotted are embedded twice: as data-* attributes on each marker and as
 * a JSON block inside <metadata id="figure-data">.
 */

import { parseCsv, requireColumns, SweepTable } from "./csv.js";
import { figureSpec, FigureKind, FigureSpec } from "./figures.js";
import {
  escapeXml,
  linearScale,
  niceTicks,
  padded,
  PALETTE,
  px,
  tickLabel,
} from "./svg.js";

const WIDTH = 800;
const HEIGHT = 500;
const MARGIN = { left: 78, right: 170, top: 48, bottom: 58 };

interface Point {
  x: string;
  y: string;
  yerr?: string;
}

interface Group {
  scheme: string;
  points: Point[];
}

function toNumber(raw: string, column: string): number {
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new Error(`column "${column}" holds a non-numeric cell "${raw}"`);
  }
  return value;
}

function collectGroups(table: SweepTable, spec: FigureSpec): Group[] {
  const order: string[] = [];
  const byScheme = new Map<string, Point[]>();
  for (const row of table.rows) {
    const scheme = row[spec.groupColumn];
    if (!byScheme.has(scheme)) {
      byScheme.set(scheme, []);
      order.push(scheme);
    }
    const point: Point = { x: row[spec.xColumn], y: row[spec.yColumn] };
    if (spec.yErrColumn !== null) {
      point.yerr = row[spec.yErrColumn];
    }
    byScheme.get(scheme)!.push(point);
  }
  return order.map((scheme) => ({ scheme, points: byScheme.get(scheme)! }));
}

export function renderFigure(csvText: string, kind: FigureKind | string): string {
  const spec = figureSpec(kind);
  const table = parseCsv(csvText);
  requireColumns(table, [spec.xColumn, spec.yColumn, spec.yErrColumn, spec.groupColumn]);
  const groups = collectGroups(table, spec);

  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const group of groups) {
    for (const point of group.points) {
      const x = toNumber(point.x, spec.xColumn);
      const y = toNumber(point.y, spec.yColumn);
      const err = point.yerr === undefined ? 0 : toNumber(point.yerr, spec.yErrColumn!);
      xLo = Math.min(xLo, x);
      xHi = Math.max(xHi, x);
      yLo = Math.min(yLo, y - err);
      yHi = Math.max(yHi, y + err);
    }
  }
  const [xMin, xMax] = padded(xLo, xHi);
  const [yMin, yMax] = padded(yLo, yHi);
  const sx = linearScale(xMin, xMax, MARGIN.left, WIDTH - MARGIN.right);
  const sy = linearScale(yMin, yMax, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push('<?xml version="1.0" encoding="UTF-8"?>');
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  const embedded = {
    figure: spec.kind,
    xColumn: spec.xColumn,
    yColumn: spec.yColumn,
    yErrColumn: spec.yErrColumn,
    groups,
  };
  parts.push(`<metadata id="figure-data">${escapeXml(JSON.stringify(embedded))}</metadata>`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${px(WIDTH / 2)}" y="26" text-anchor="middle" font-size="17">` +
      `${escapeXml(spec.title)}</text>`,
  );

  // axes, grid, tick labels
  const plotBottom = HEIGHT - MARGIN.bottom;
  const plotRight = WIDTH - MARGIN.right;
  for (const t of niceTicks(xMin, xMax)) {
    const x = px(sx(t));
    parts.push(
      `<line x1="${x}" y1="${px(MARGIN.top)}" x2="${x}" y2="${px(plotBottom)}" ` +
        'stroke="#dddddd" stroke-width="1"/>',
    );
    parts.push(
      `<text x="${x}" y="${px(plotBottom + 20)}" text-anchor="middle" font-size="12">` +
        `${tickLabel(t)}</text>`,
    );
  }
  for (const t of niceTicks(yMin, yMax)) {
    const y = px(sy(t));
    parts.push(
      `<line x1="${px(MARGIN.left)}" y1="${y}" x2="${px(plotRight)}" y2="${y}" ` +
        'stroke="#dddddd" stroke-width="1"/>',
    );
    parts.push(
      `<text x="${px(MARGIN.left - 8)}" y="${y}" text-anchor="end" ` +
        `dominant-baseline="middle" font-size="12">${tickLabel(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${px(MARGIN.left)}" y="${px(MARGIN.top)}" ` +
      `width="${px(plotRight - MARGIN.left)}" height="${px(plotBottom - MARGIN.top)}" ` +
      'fill="none" stroke="#333333" stroke-width="1"/>',
  );
  parts.push(
    `<text x="${px((MARGIN.left + plotRight) / 2)}" y="${px(HEIGHT - 14)}" ` +
      `text-anchor="middle" font-size="14">${escapeXml(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="20" y="${px((MARGIN.top + plotBottom) / 2)}" text-anchor="middle" ` +
      `font-size="14" transform="rotate(-90 20 ${px((MARGIN.top + plotBottom) / 2)})">` +
      `${escapeXml(spec.yLabel)}</text>`,
  );

  // one polyline + markers (+ error bars) per scheme, data order preserved
  groups.forEach((group, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const coords = group.points.map((p) => ({
      cx: sx(toNumber(p.x, spec.xColumn)),
      cy: sy(toNumber(p.y, spec.yColumn)),
      err: p.yerr === undefined ? null : toNumber(p.yerr, spec.yErrColumn!),
      point: p,
    }));
    if (coords.length > 1) {
      const path = coords.map((c) => `${px(c.cx)},${px(c.cy)}`).join(" ");
      parts.push(
        `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="2"/>`,
      );
    }
    for (const c of coords) {
      if (c.err !== null && c.err > 0) {
        const y1 = px(sy(toNumber(c.point.y, spec.yColumn) - c.err));
        const y2 = px(sy(toNumber(c.point.y, spec.yColumn) + c.err));
        parts.push(
          `<line class="errbar" x1="${px(c.cx)}" y1="${y1}" x2="${px(c.cx)}" y2="${y2}" ` +
            `stroke="${color}" stroke-width="1.5"/>`,
        );
        for (const yy of [y1, y2]) {
          parts.push(
            `<line class="errcap" x1="${px(c.cx - 4)}" y1="${yy}" x2="${px(c.cx + 4)}" ` +
              `y2="${yy}" stroke="${color}" stroke-width="1.5"/>`,
          );
        }
      }
      const attrs =
        c.point.yerr === undefined ? "" : ` data-yerr="${escapeXml(c.point.yerr)}"`;
      parts.push(
        `<circle class="marker" cx="${px(c.cx)}" cy="${px(c.cy)}" r="4" fill="${color}" ` +
          `data-scheme="${escapeXml(group.scheme)}" data-x="${escapeXml(c.point.x)}" ` +
          `data-y="${escapeXml(c.point.y)}"${attrs}/>`,
      );
    }
  });

  // legend
  groups.forEach((group, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const y = MARGIN.top + 12 + gi * 22;
    const x = plotRight + 14;
    parts.push(
      `<line x1="${px(x)}" y1="${px(y)}" x2="${px(x + 24)}" y2="${px(y)}" ` +
        `stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(`<circle cx="${px(x + 12)}" cy="${px(y)}" r="4" fill="${color}"/>`);
    parts.push(
      `<text x="${px(x + 32)}" y="${px(y)}" dominant-baseline="middle" font-size="12">` +
        `${escapeXml(group.scheme)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Parse the exact plotted values back out of a rendered figure. */
export function extractEmbeddedData(svgText: string): {
  figure: string;
  xColumn: string;
  yColumn: string;
  yErrColumn: string | null;
  groups: Group[];
} {
  const match = svgText.match(/<metadata id="figure-data">([\s\S]*?)<\/metadata>/);
  if (!match) {
    throw new Error("no embedded figure data found");
  }
  const json = match[1]
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&amp;/g, "&");
  return JSON.parse(json);
}
