// Types and validation for the exported explanation bundle.
//
// The bundle is the only input this app understands: a single JSON
// document holding both explainers, the fitted transfer with its
// preformatted text, and example instances at full precision.

export interface AttributeInfo {
  name: string;
  unit: string; // empty string when the attribute is unitless
  display_min: number;
  display_max: number;
}

export interface ExplainerDoc {
  format_version: number;
  schema: AttributeInfo[];
  factors: number[];
  centroid_label: number; // prediction at the mean instance
  attribute_means: number[];
}

export interface FormattedTransfer {
  // exactly one family is present, keyed by the transfer kind
  scales?: string[]; // task: n + 1 entries, the last is the Average row
  deltas?: string[]; // subspace: signed shifts, "+" prefixed when positive
  values_formulas?: (string | null)[]; // attributes: one per original row
  factors_formulas?: (string | null)[]; // attributes: one per target column
}

export interface TransferDoc {
  variant: string;
  parameters: number[] | number[][];
  formatted: FormattedTransfer;
  partition?: number[] | null;
}

export interface InstanceDoc {
  raw: number[];
  relative: number[]; // raw minus the attribute means
  partials: number[]; // factor times relative value, per attribute
  estimate: number;
  system: number | null;
  percent_diff: number | null;
}

export interface DisplayRange {
  name: string;
  min: number;
  max: number;
}

export type TransferKind = "subspace" | "task" | "attributes";

export interface Bundle {
  format_version: number;
  kind: TransferKind;
  schema_original: AttributeInfo[];
  schema_target: AttributeInfo[];
  explainer_original: ExplainerDoc;
  explainer_target: ExplainerDoc;
  transfer: TransferDoc;
  instances: InstanceDoc[];
  display: DisplayRange[];
}

export class BundleError extends Error {}

// Presence check that names the first missing field, so the error
// panel can say exactly what the loaded document lacks.
function checkFields(
  value: unknown,
  path: string,
  fields: string[],
): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    const where = path || "document";
    throw new BundleError(`bundle ${where} is not an object`);
  }
  const record = value as Record<string, unknown>;
  for (const field of fields) {
    if (!(field in record)) {
      const where = path ? `${path}.${field}` : field;
      throw new BundleError(`bundle missing field "${where}"`);
    }
  }
  return record;
}

function checkList(value: unknown, path: string): unknown[] {
  if (!Array.isArray(value)) {
    throw new BundleError(`bundle field "${path}" is not a list`);
  }
  return value;
}

export function parseBundle(doc: unknown): Bundle {
  const root = checkFields(doc, "", [
    "format_version",
    "kind",
    "schema_original",
    "schema_target",
    "explainer_original",
    "explainer_target",
    "transfer",
    "instances",
    "display",
  ]);
  if (
    root.kind !== "subspace" &&
    root.kind !== "task" &&
    root.kind !== "attributes"
  ) {
    throw new BundleError(
      `bundle kind ${JSON.stringify(root.kind)} is not one of ` +
        "subspace, task, attributes",
    );
  }
  for (const key of ["schema_original", "schema_target"]) {
    checkList(root[key], key).forEach((attr, i) => {
      checkFields(attr, `${key}[${i}]`, [
        "name",
        "unit",
        "display_min",
        "display_max",
      ]);
    });
  }
  for (const key of ["explainer_original", "explainer_target"]) {
    checkFields(root[key], key, [
      "format_version",
      "schema",
      "factors",
      "centroid_label",
      "attribute_means",
    ]);
  }
  checkFields(root.transfer, "transfer", [
    "variant",
    "parameters",
    "formatted",
  ]);
  checkList(root.instances, "instances").forEach((instance, i) => {
    checkFields(instance, `instances[${i}]`, [
      "raw",
      "relative",
      "partials",
      "estimate",
      "system",
      "percent_diff",
    ]);
  });
  checkList(root.display, "display").forEach((range, i) => {
    checkFields(range, `display[${i}]`, ["name", "min", "max"]);
  });
  return root as unknown as Bundle;
}
