// Diamond mapping matrix for attribute-set transfers.
//
// Matrix rows follow the original attributes and columns the target
// attributes. In values mode a hover reads a row: how one original
// value recombines from target values. In factors mode it reads a
// column: how one target factor is assembled from original factors.
// Each cell carries the matching formula in data-tip so the page
// wiring only has to surface it. Rendering returns HTML text.

import { Bundle } from "./bundle.js";
import { attributeLabel, displayNumber, MULTIPLY_SIGN } from "./compute.js";
import { escapeHtml } from "./table.js";

export type MatrixMode = "values" | "factors";

// Cells sharing the hovered cell's row light up in values mode, the
// column in factors mode.
export function highlightSelector(
  mode: MatrixMode,
  row: number,
  col: number,
): string {
  return mode === "values" ? `[data-row="${row}"]` : `[data-col="${col}"]`;
}

function cellText(value: number): string {
  if (value === 0) {
    return "";
  }
  if (value === 1) {
    return `${MULTIPLY_SIGN}1`;
  }
  const shown = displayNumber(value, 2);
  return value < 0 ? `${MULTIPLY_SIGN}(${shown})` : `${MULTIPLY_SIGN}${shown}`;
}

function cellClass(value: number): string {
  if (value === 0) {
    return "cell zero";
  }
  if (value === 1) {
    return "cell muted"; // identity entry, needs no memorization
  }
  return "cell";
}

export function renderMatrix(bundle: Bundle, mode: MatrixMode): string {
  if (bundle.kind !== "attributes") {
    return ""; // only attribute-set transfers have a matrix to show
  }
  const matrix = bundle.transfer.parameters as number[][];
  const formatted = bundle.transfer.formatted;
  const valuesFormulas = formatted.values_formulas ?? [];
  const factorsFormulas = formatted.factors_formulas ?? [];
  const nTarget = bundle.schema_target.length;

  const cells: string[] = [];
  cells.push(`<div class="corner"></div>`);
  bundle.schema_target.forEach((attr, col) => {
    cells.push(
      `<div class="col-label" data-col="${col}">` +
        `<span class="flat">${escapeHtml(attributeLabel(attr))}</span></div>`,
    );
  });
  matrix.forEach((rowValues, row) => {
    const attr = bundle.schema_original[row];
    cells.push(
      `<div class="row-label" data-row="${row}">` +
        `<span class="flat">${escapeHtml(attributeLabel(attr))}</span></div>`,
    );
    rowValues.forEach((value, col) => {
      const tip =
        mode === "values"
          ? valuesFormulas[row] ?? ""
          : factorsFormulas[col] ?? "";
      cells.push(
        `<div class="${cellClass(value)}" data-row="${row}" ` +
          `data-col="${col}" data-tip="${escapeHtml(tip)}">` +
          `<span class="flat">${escapeHtml(cellText(value))}</span></div>`,
      );
    });
  });

  const toggle =
    `<div class="matrix-toggle">` +
    `<button type="button" data-mode="values"` +
    `${mode === "values" ? ' class="active"' : ""}>Values</button>` +
    `<button type="button" data-mode="factors"` +
    `${mode === "factors" ? ' class="active"' : ""}>Factors</button></div>`;

  return (
    `<div class="matrix-block" data-mode="${mode}">` +
    `<h2>Attribute mapping</h2>${toggle}` +
    `<div class="diamond-frame"><div class="diamond" ` +
    `style="grid-template-columns:repeat(${nTarget + 1},var(--cell))">` +
    `${cells.join("")}</div></div>` +
    `<div class="matrix-tooltip" hidden></div></div>`
  );
}
