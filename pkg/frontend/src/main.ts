// Page wiring: load a bundle, render the views, keep edits live.
//
// All state lives in one place and every change re-derives the display
// from it. Keystrokes update output cells in place so the focused
// input survives; structural changes re-render whole sections.

import { Bundle, BundleError, parseBundle } from "./bundle.js";
import { displayNumber, percentText } from "./compute.js";
import { highlightSelector, MatrixMode, renderMatrix } from "./matrix.js";
import { renderTable } from "./table.js";
import {
  applyEdit,
  newState,
  recompute,
  setInstance,
  WhatIfState,
} from "./whatif.js";

const errorPanel = document.getElementById("error-panel") as HTMLElement;
const tableRoot = document.getElementById("table-root") as HTMLElement;
const matrixRoot = document.getElementById("matrix-root") as HTMLElement;
const instanceSelect = document.getElementById(
  "instance-select",
) as HTMLSelectElement;
const fileInput = document.getElementById("bundle-file") as HTMLInputElement;

let state: WhatIfState | null = null;
let mode: MatrixMode = "values";

function showError(message: string): void {
  errorPanel.textContent = message;
  errorPanel.hidden = false;
}

function renderAll(): void {
  if (!state) {
    return;
  }
  tableRoot.innerHTML = renderTable(state.bundle, recompute(state), state.invalid);
  matrixRoot.innerHTML = renderMatrix(state.bundle, mode);
}

function setOut(name: string, text: string): void {
  const el = tableRoot.querySelector(`[data-out="${name}"]`);
  if (el) {
    el.textContent = text;
  }
}

// Refresh computed cells without touching the inputs.
function updateOutputs(): void {
  if (!state) {
    return;
  }
  const rec = recompute(state);
  const ranges = state.bundle.display;
  rec.partials.forEach((value, i) => {
    setOut(`rel-${i}`, displayNumber(rec.relative[i], 4));
    setOut(`part-${i}`, displayNumber(value, 4));
    const meter = tableRoot.querySelector(
      `[data-meter="${i}"]`,
    ) as HTMLElement | null;
    if (meter) {
      const span = ranges[i].max - ranges[i].min;
      let fraction = span > 0 ? (rec.raw[i] - ranges[i].min) / span : 0;
      fraction = Math.min(1, Math.max(0, fraction));
      meter.style.width = `${(fraction * 100).toFixed(1)}%`;
    }
    const flag = tableRoot.querySelector(
      `[data-flag="${i}"]`,
    ) as HTMLElement | null;
    if (flag) {
      flag.hidden = !state!.invalid.has(i);
    }
  });
  setOut("estimate", displayNumber(rec.estimate, 4));
  if (rec.percent_diff !== null) {
    setOut("badge", percentText(rec.percent_diff));
    const badge = tableRoot.querySelector('[data-out="badge"]');
    if (badge) {
      badge.className = `badge ${
        rec.percent_diff === 0 ? "same" : rec.percent_diff > 0 ? "higher" : "lower"
      }`;
    }
  }
}

function fillInstanceSelect(bundle: Bundle): void {
  instanceSelect.innerHTML = bundle.instances
    .map((_, i) => `<option value="${i}">Instance ${i + 1}</option>`)
    .join("");
  instanceSelect.disabled = bundle.instances.length === 0;
}

function loadBundleText(text: string): void {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    showError("bundle is not valid JSON");
    return;
  }
  try {
    const bundle = parseBundle(doc);
    if (bundle.instances.length === 0) {
      throw new BundleError("bundle has no instances to show");
    }
    state = newState(bundle, 0);
    errorPanel.hidden = true;
    fillInstanceSelect(bundle);
    renderAll();
  } catch (err) {
    showError(err instanceof BundleError ? err.message : String(err));
  }
}

// ---- events ----

tableRoot.addEventListener("input", (event) => {
  const input = event.target as HTMLInputElement;
  if (!state || !input.matches("input[data-row]")) {
    return;
  }
  state = applyEdit(state, Number(input.dataset.row), input.value);
  updateOutputs();
});

instanceSelect.addEventListener("change", () => {
  if (state) {
    state = setInstance(state, Number(instanceSelect.value));
    renderAll();
  }
});

matrixRoot.addEventListener("click", (event) => {
  const button = (event.target as HTMLElement).closest("button[data-mode]");
  if (button) {
    mode = button.getAttribute("data-mode") as MatrixMode;
    matrixRoot.innerHTML = state ? renderMatrix(state.bundle, mode) : "";
  }
});

function clearHighlight(): void {
  matrixRoot.querySelectorAll(".hl").forEach((el) => el.classList.remove("hl"));
  const tooltip = matrixRoot.querySelector(".matrix-tooltip") as HTMLElement | null;
  if (tooltip) {
    tooltip.hidden = true;
  }
}

matrixRoot.addEventListener("mouseover", (event) => {
  const cell = (event.target as HTMLElement).closest(".cell[data-tip]");
  clearHighlight();
  if (!cell) {
    return;
  }
  const row = Number(cell.getAttribute("data-row"));
  const col = Number(cell.getAttribute("data-col"));
  const selector = highlightSelector(mode, row, col);
  matrixRoot
    .querySelectorAll(`.cell${selector}, .row-label${selector}, .col-label${selector}`)
    .forEach((el) => el.classList.add("hl"));
  const tip = cell.getAttribute("data-tip") ?? "";
  const tooltip = matrixRoot.querySelector(".matrix-tooltip") as HTMLElement | null;
  if (tooltip && tip) {
    tooltip.textContent = tip;
    tooltip.hidden = false;
  }
});

matrixRoot.addEventListener("mouseleave", clearHighlight);

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (!file) {
    return;
  }
  file
    .text()
    .then(loadBundleText)
    .catch((err) => showError(String(err)));
});

// ?bundle=demo/task.json fetches a document relative to the page
const requested = new URLSearchParams(window.location.search).get("bundle");
if (requested) {
  fetch(requested)
    .then((response) => {
      if (!response.ok) {
        throw new Error(`could not fetch ${requested}: ${response.status}`);
      }
      return response.text();
    })
    .then(loadBundleText)
    .catch((err) => showError(String(err)));
} else {
  showError("no bundle loaded: pick a file above or pass ?bundle=<path>");
}
