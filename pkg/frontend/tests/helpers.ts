import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { Bundle, parseBundle } from "../src/bundle.js";

const here = dirname(fileURLToPath(import.meta.url));

export interface WhatIfFixture {
  bases: number[];
  instances: number[][];
  expected: {
    raw: number[];
    relative: number[];
    partials: number[];
    estimate: number;
    system: number | null;
    percent_diff: number | null;
  }[];
  estimate_display: string[];
  badges: (string | null)[];
}

export interface Fixture {
  bundle: Bundle;
  whatif: WhatIfFixture;
}

export function loadJson(name: string): any {
  return JSON.parse(readFileSync(join(here, "fixtures", `${name}.json`), "utf8"));
}

export function loadFixture(name: string): Fixture {
  const doc = loadJson(name);
  return { bundle: parseBundle(doc.bundle), whatif: doc.whatif };
}

export const KINDS = ["subspace", "task", "attributes"] as const;

// Relative closeness with an exact shortcut so zero matches zero.
export function relClose(a: number, b: number, tol = 1e-6): boolean {
  if (a === b) {
    return true;
  }
  return Math.abs(a - b) <= tol * Math.max(Math.abs(a), Math.abs(b));
}
