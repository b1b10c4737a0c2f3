// Numeric display semantics shared with the exporting library.
//
// Bundle numbers are full precision and the UI re-rounds them, so the
// text here has to agree with the exporter character for character.
// The exporter rounds half to even on the exact binary value, while
// toFixed and toPrecision round half away from zero: a naive port
// drifts on ties (0.125 at two significant digits must read "0.12",
// not "0.13"). The helpers below therefore round on the exact decimal
// expansion of the double.

import { ExplainerDoc, InstanceDoc } from "./bundle.js";

export class DisplayError extends Error {}

export const MULTIPLY_SIGN = "×";

// ================================================================
// Exact decimal rounding
// ================================================================

interface Expansion {
  digits: string; // decimal digits with the point removed
  pointIndex: number; // how many of them sit left of the point
}

// Exact decimal digits of a non-negative finite double. toFixed(100)
// is the exact expansion for magnitudes of 2^-48 and above; smaller
// values truncate far below any display rounding position, where the
// dropped tail cannot flip a rounding decision.
function expand(abs: number): Expansion {
  if (abs >= 1e21) {
    // integral by construction; toFixed would switch to exponent form
    const digits = BigInt(abs).toString(10);
    return { digits, pointIndex: digits.length };
  }
  const fixed = abs.toFixed(100);
  const dot = fixed.indexOf(".");
  return {
    digits: fixed.slice(0, dot) + fixed.slice(dot + 1),
    pointIndex: dot,
  };
}

// Round a digit string after `cut` leading digits, half to even. The
// result may come back one digit longer when a carry ripples past the
// front (99.5 at cut 2 becomes "100").
function roundDigits(digits: string, cut: number): string {
  if (cut >= digits.length) {
    return digits + "0".repeat(cut - digits.length);
  }
  const kept = digits.slice(0, Math.max(cut, 0)).split("");
  const decision = cut >= 0 ? digits[cut] : "0";
  let up: boolean;
  if (decision > "5") {
    up = true;
  } else if (decision < "5") {
    up = false;
  } else {
    let restNonzero = false;
    for (let i = cut + 1; i < digits.length; i += 1) {
      if (digits[i] !== "0") {
        restNonzero = true;
        break;
      }
    }
    if (restNonzero) {
      up = true;
    } else {
      // exact tie: round toward the even neighbor
      const last = kept.length ? kept[kept.length - 1].charCodeAt(0) - 48 : 0;
      up = last % 2 === 1;
    }
  }
  if (up) {
    let i = kept.length - 1;
    for (;;) {
      if (i < 0) {
        kept.unshift("1");
        break;
      }
      if (kept[i] === "9") {
        kept[i] = "0";
        i -= 1;
      } else {
        kept[i] = String.fromCharCode(kept[i].charCodeAt(0) + 1);
        break;
      }
    }
  }
  return kept.join("");
}

// Mirror of the exporter's round(value, ndigits): half to even on the
// exact binary value. ndigits may be negative to round inside the
// integer part.
export function pythonRound(value: number, ndigits: number): number {
  if (!Number.isFinite(value) || value === 0) {
    return value;
  }
  const negative = value < 0;
  const { digits, pointIndex } = expand(Math.abs(value));
  const cut = pointIndex + ndigits;
  if (cut >= digits.length) {
    return value; // every digit kept, nothing to round
  }
  const kept = roundDigits(digits, cut) || "0";
  let text: string;
  if (ndigits <= 0) {
    text = kept + "0".repeat(-ndigits);
  } else if (kept.length <= ndigits) {
    text = "0." + "0".repeat(ndigits - kept.length) + kept;
  } else {
    text = kept.slice(0, kept.length - ndigits) + "." + kept.slice(-ndigits);
  }
  const result = parseFloat(text);
  return negative ? -result : result;
}

// Fixed-point text with half-to-even rounding, matching the exporter's
// "%.12f" step. The sign survives even when every kept digit is zero.
export function formatFixed(value: number, places: number): string {
  const negative = value < 0 || Object.is(value, -0);
  const { digits, pointIndex } = expand(Math.abs(value));
  const kept = roundDigits(digits, pointIndex + places);
  const intLength = kept.length - places;
  const intPart = intLength > 0 ? kept.slice(0, intLength) : "0";
  const fracPart =
    places > 0 ? kept.slice(Math.max(intLength, 0)).padStart(places, "0") : "";
  const sign = negative ? "-" : "";
  return places > 0 ? `${sign}${intPart}.${fracPart}` : `${sign}${intPart}`;
}

// ================================================================
// Display text
// ================================================================

export function roundSig(value: number, digits = 2): number {
  if (value === 0 || !Number.isFinite(value)) {
    return value;
  }
  const exponent = Math.floor(Math.log10(Math.abs(value)));
  return pythonRound(value, -exponent + digits - 1);
}

// Plain decimal text at display precision, never exponent notation.
export function displayNumber(value: number, digits = 2): string {
  if (!Number.isFinite(value)) {
    throw new DisplayError(`cannot display non-finite value ${value}`);
  }
  const rounded = roundSig(value, digits);
  if (Number.isInteger(rounded)) {
    return BigInt(rounded).toString(10);
  }
  const text = formatFixed(rounded, 12)
    .replace(/0+$/, "")
    .replace(/\.$/, "");
  if (text === "" || text === "-0" || text === "0") {
    return "0";
  }
  return text;
}

export function percentText(percent: number, digits = 2): string {
  if (percent === 0) {
    return "0% Different";
  }
  const word = percent > 0 ? "Higher" : "Lower";
  return `${displayNumber(Math.abs(percent), digits)}% ${word}`;
}

export function attributeLabel(attr: { name: string; unit: string }): string {
  return attr.unit ? `${attr.name} (${attr.unit})` : attr.name;
}

// ================================================================
// Per-instance decomposition
// ================================================================

// Same arithmetic as the exporter: relative value, factor times
// relative value, centroid plus the sum. Percent difference is against
// the system prediction and stays undefined without one.
export function explainInstance(
  explainer: ExplainerDoc,
  raw: number[],
  system: number | null,
): InstanceDoc {
  const { factors, attribute_means: means, centroid_label: centroid } =
    explainer;
  if (raw.length !== factors.length) {
    throw new DisplayError(
      `instance has ${raw.length} values, explainer has ${factors.length}`,
    );
  }
  const relative = raw.map((value, i) => value - means[i]);
  const partials = relative.map((chi, i) => factors[i] * chi);
  let total = 0;
  for (const partial of partials) {
    total += partial;
  }
  const estimate = centroid + total;
  let percent: number | null = null;
  if (system !== null) {
    if (system === 0) {
      throw new DisplayError(
        "percent difference is undefined for a zero system prediction",
      );
    }
    percent = (100.0 * (estimate - system)) / system;
  }
  return {
    raw: raw.slice(),
    relative,
    partials,
    estimate,
    system,
    percent_diff: percent,
  };
}
