// Tabular explanation view.
//
// One row per attribute: editable value, a meter placing the value on
// the attribute's display range, the factor, the scale and new factor
// when the transfer rescales a shared attribute set, and the partial
// contribution. Below the table sit the estimate box and, when the
// bundle carries one, the system prediction with a percent badge.
// Rendering returns plain HTML text; the page wiring owns the DOM.

import { Bundle, InstanceDoc } from "./bundle.js";
import { attributeLabel, displayNumber, percentText } from "./compute.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function meterHtml(value: number, min: number, max: number, row: number): string {
  const span = max - min;
  let fraction = span > 0 ? (value - min) / span : 0;
  fraction = Math.min(1, Math.max(0, fraction));
  const width = (fraction * 100).toFixed(1);
  return (
    `<div class="meter">` +
    `<span data-meter="${row}" style="width:${width}%"></span></div>`
  );
}

// The reversal marker gets its own span so "(Opp)" reads in red.
export function scaleHtml(text: string): string {
  const marker = " (Opp)";
  if (text.endsWith(marker)) {
    const head = escapeHtml(text.slice(0, -marker.length));
    return `${head} <span class="opp">(Opp)</span>`;
  }
  return escapeHtml(text);
}

function numberCell(value: number): string {
  return displayNumber(value, 4);
}

export function renderTable(
  bundle: Bundle,
  explanation: InstanceDoc,
  invalid?: ReadonlyMap<number, string>,
): string {
  const target = bundle.explainer_target;
  const original = bundle.explainer_original;
  const withScales = bundle.kind === "task";
  const scales = bundle.transfer.formatted.scales ?? [];
  const n = target.factors.length;

  const head: string[] = ["Attribute", "Value", "Relative Value", "Factor"];
  if (withScales) {
    head.push("Scale", "New Factor");
  }
  head.push("Partial Contribution");

  const rows: string[] = [];
  for (let i = 0; i < n; i += 1) {
    const attr = bundle.schema_target[i];
    const range = bundle.display[i];
    const badText = invalid?.get(i);
    const shown = badText !== undefined ? badText : String(explanation.raw[i]);
    const flagHidden = badText === undefined ? " hidden" : "";
    const cells = [
      `<td class="attr">${escapeHtml(attributeLabel(attr))}</td>`,
      `<td class="value">` +
        `<input class="value-input" data-row="${i}" ` +
        `value="${escapeHtml(shown)}" size="10">` +
        `<span class="invalid-flag" data-flag="${i}"${flagHidden}>` +
        `not a number</span></td>`,
      `<td class="relative">` +
        `<span class="num" data-out="rel-${i}">` +
        `${numberCell(explanation.relative[i])}</span>` +
        `${meterHtml(explanation.raw[i], range.min, range.max, i)}</td>`,
    ];
    if (withScales) {
      // factors column shows the source task, scale column how each
      // one carries over, new factor column the rescaled result
      cells.push(
        `<td class="factor">${numberCell(original.factors[i])}</td>`,
        `<td class="scale">${scaleHtml(scales[i] ?? "")}</td>`,
        `<td class="factor new">${numberCell(target.factors[i])}</td>`,
      );
    } else {
      cells.push(`<td class="factor">${numberCell(target.factors[i])}</td>`);
    }
    cells.push(
      `<td class="partial" data-out="part-${i}">` +
        `${numberCell(explanation.partials[i])}</td>`,
    );
    rows.push(`<tr>${cells.join("")}</tr>`);
  }

  // Average row: the centroid enters the estimate as its base term
  const averageCells = [
    `<td class="attr">Average</td>`,
    `<td class="value"></td>`,
    `<td class="relative"></td>`,
  ];
  if (withScales) {
    averageCells.push(
      `<td class="factor">${numberCell(original.centroid_label)}</td>`,
      `<td class="scale">${scaleHtml(scales[n] ?? "")}</td>`,
      `<td class="factor new">${numberCell(target.centroid_label)}</td>`,
    );
  } else {
    averageCells.push(`<td class="factor"></td>`);
  }
  averageCells.push(
    `<td class="partial">${numberCell(target.centroid_label)}</td>`,
  );
  rows.push(`<tr class="average">${averageCells.join("")}</tr>`);

  const header = head.map((title) => `<th>${title}</th>`).join("");
  const table =
    `<table class="explain-table"><thead><tr>${header}</tr></thead>` +
    `<tbody>${rows.join("")}</tbody></table>`;

  const boxes = [
    `<div class="box estimate"><div class="box-label">Explainer estimate` +
      `</div><div class="box-value" data-out="estimate">` +
      `${numberCell(explanation.estimate)}</div></div>`,
  ];
  if (explanation.system !== null) {
    const percent = explanation.percent_diff ?? 0;
    const tone = percent === 0 ? "same" : percent > 0 ? "higher" : "lower";
    boxes.push(
      `<div class="box system"><div class="box-label">System prediction` +
        `</div><div class="box-value">${numberCell(explanation.system)}` +
        `</div><span class="badge ${tone}" data-out="badge">` +
        `${escapeHtml(percentText(percent))}</span></div>`,
    );
  }

  return `${table}<div class="boxes">${boxes.join("")}</div>`;
}
