// What-if editing state.
//
// Edits live in a per-row map next to a map of rows whose last entry
// did not parse; a bad entry flags its own row and leaves every other
// edit alone. Recomputation runs the full decomposition on the merged
// values, then puts the bundle's exact numbers back on untouched rows.

import { Bundle, InstanceDoc } from "./bundle.js";
import { explainInstance } from "./compute.js";

export interface WhatIfState {
  bundle: Bundle;
  instanceIndex: number;
  edits: ReadonlyMap<number, number>;
  invalid: ReadonlyMap<number, string>;
}

export function newState(bundle: Bundle, instanceIndex = 0): WhatIfState {
  return { bundle, instanceIndex, edits: new Map(), invalid: new Map() };
}

export function setInstance(state: WhatIfState, index: number): WhatIfState {
  return { ...state, instanceIndex: index, edits: new Map(), invalid: new Map() };
}

// Strict numeric parse: decimal or scientific text, must be finite.
export function parseEdit(text: string): number | null {
  const trimmed = text.trim();
  if (trimmed === "") {
    return null;
  }
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : null;
}

export function applyEdit(
  state: WhatIfState,
  row: number,
  text: string,
): WhatIfState {
  const edits = new Map(state.edits);
  const invalid = new Map(state.invalid);
  if (text.trim() === "") {
    // emptying the box reverts the row to the bundle value
    edits.delete(row);
    invalid.delete(row);
  } else {
    const value = parseEdit(text);
    if (value === null) {
      invalid.set(row, text); // keep the bad text for the inline flag
    } else {
      edits.set(row, value);
      invalid.delete(row);
    }
  }
  return { ...state, edits, invalid };
}

// Base instance values with valid edits overlaid. Rows whose latest
// entry failed to parse stay at their last good value.
export function currentValues(state: WhatIfState): number[] {
  const base = state.bundle.instances[state.instanceIndex];
  return base.raw.map((value, i) => state.edits.get(i) ?? value);
}

export function recompute(state: WhatIfState): InstanceDoc {
  const base = state.bundle.instances[state.instanceIndex];
  const fresh = explainInstance(
    state.bundle.explainer_target,
    currentValues(state),
    base.system,
  );
  // untouched rows keep the bundle's exact numbers
  const relative = fresh.relative.map(
    (value, i) => (state.edits.has(i) ? value : base.relative[i]),
  );
  const partials = fresh.partials.map(
    (value, i) => (state.edits.has(i) ? value : base.partials[i]),
  );
  return { ...fresh, relative, partials };
}
