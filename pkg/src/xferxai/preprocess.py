"""Data ingestion, centering into relative values, and domain assignment."""

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jsonio
from .errors import DataFormatError, DimensionMismatchError, NonFiniteError
from .schema import Attribute, AttributeSchema

DATA_DIR_ENV = "XFERXAI_DATA_DIR"

_OPS = {
    "<": lambda v, t: v < t,
    "<=": lambda v, t: v <= t,
    ">": lambda v, t: v > t,
    ">=": lambda v, t: v >= t,
    # unicode aliases accepted on input
    "≤": lambda v, t: v <= t,
    "≥": lambda v, t: v >= t,
}


def compute_means(raw):
    """Column-wise arithmetic mean of a raw value matrix."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise DimensionMismatchError("raw must be a matrix")
    if raw.shape[0] == 0:
        raise DataFormatError("cannot compute means of an empty dataset")
    if not np.all(np.isfinite(raw)):
        raise NonFiniteError("raw values contain non-finite entries")
    return raw.mean(axis=0)


def center(raw, means):
    """Relative values chi = raw - means, row by row."""
    raw = np.asarray(raw, dtype=float)
    means = np.asarray(means, dtype=float)
    if raw.shape[-1] != means.shape[0]:
        raise DimensionMismatchError(
            "means length must match columns", expected=raw.shape[-1],
            got=means.shape[0],
        )
    return raw - means


class CenteredDataset:
    """One domain's view: relative values, means, predictions, tags.

    ``row_indices`` holds the source-file row number of each instance
    (0-based, header excluded) so folds and error messages can refer
    back to the file.
    """

    def __init__(self, relative_values, attribute_means, blackbox_predictions,
                 schema, domain_id=None, raw_labels=None, row_indices=None):
        self.relative_values = np.asarray(relative_values, dtype=float)
        self.attribute_means = np.asarray(attribute_means, dtype=float)
        self.blackbox_predictions = np.asarray(blackbox_predictions, dtype=float)
        self.schema = schema
        m = self.relative_values.shape[0]
        self.domain_id = list(domain_id) if domain_id is not None else ["Original"] * m
        self.raw_labels = (
            np.asarray(raw_labels, dtype=float) if raw_labels is not None else None
        )
        self.row_indices = (
            list(row_indices) if row_indices is not None else list(range(m))
        )
        if self.relative_values.ndim != 2:
            raise DimensionMismatchError("relative_values must be a matrix")
        if self.relative_values.shape[1] != len(schema):
            raise DimensionMismatchError(
                "columns must match schema", expected=len(schema),
                got=self.relative_values.shape[1],
            )
        for name, length in (
            ("blackbox_predictions", self.blackbox_predictions.shape[0]),
            ("domain_id", len(self.domain_id)),
            ("row_indices", len(self.row_indices)),
        ):
            if length != m:
                raise DimensionMismatchError(
                    f"{name} row count mismatch", expected=m, got=length
                )
        if self.raw_labels is not None and self.raw_labels.shape[0] != m:
            raise DimensionMismatchError(
                "raw_labels row count mismatch", expected=m,
                got=self.raw_labels.shape[0],
            )

    @property
    def n_rows(self):
        return self.relative_values.shape[0]

    @property
    def n_attributes(self):
        return self.relative_values.shape[1]

    def raw_values(self):
        return self.relative_values + self.attribute_means

    def subset(self, indices):
        """New dataset over the selected rows; means are kept, not recomputed."""
        indices = np.asarray(indices, dtype=int)
        return CenteredDataset(
            relative_values=self.relative_values[indices],
            attribute_means=self.attribute_means,
            blackbox_predictions=self.blackbox_predictions[indices],
            schema=self.schema,
            domain_id=[self.domain_id[i] for i in indices],
            raw_labels=self.raw_labels[indices] if self.raw_labels is not None else None,
            row_indices=[self.row_indices[i] for i in indices],
        )


@dataclass
class DomainPair:
    """Original and target views of one transfer problem."""

    original: CenteredDataset
    target: CenteredDataset
    kind: str  # subspace | task | attributes


@dataclass
class Manifest:
    """Declares how a CSV maps onto datasets.

    ``predictions`` is either a column name or ``{"predictor": path}``
    pointing at a serialized predictor evaluated over the attribute
    columns. A second domain is declared by exactly one of:

    - ``domain``: column name or threshold rule (subspace kind),
    - ``predictions_target``: a second prediction source over the same
      attributes (task kind),
    - ``attributes_target`` plus ``predictions_target``: a second
      attribute view over the same rows (attributes kind).
    """

    csv: str
    attributes: list
    predictions: object
    label: str = None
    domain: object = None
    domain_names: tuple = ("Original", "Target")
    predictions_target: object = None
    attributes_target: list = None
    base_dir: Path = field(default=None, repr=False)

    @classmethod
    def from_doc(cls, doc, base_dir=None):
        try:
            attributes = list(doc["attributes"])
            csv_path = doc["csv"]
            predictions = doc["predictions"]
        except KeyError as exc:
            raise DataFormatError(f"manifest missing field {exc}") from exc
        domain = doc.get("domain")
        if isinstance(domain, dict):
            missing = {"rule", "op", "threshold"} - set(domain)
            if missing:
                raise DataFormatError(f"domain rule missing {sorted(missing)}")
            if domain["op"] not in _OPS:
                raise DataFormatError(f"unknown domain rule op {domain['op']!r}")
        names = doc.get("domain_names", ["Original", "Target"])
        if len(names) != 2 or names[0] == names[1]:
            raise DataFormatError("domain_names must be two distinct names")
        return cls(
            csv=csv_path,
            attributes=attributes,
            predictions=predictions,
            label=doc.get("label"),
            domain=domain,
            domain_names=tuple(names),
            predictions_target=doc.get("predictions_target"),
            attributes_target=doc.get("attributes_target"),
            base_dir=Path(base_dir) if base_dir else None,
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise DataFormatError(f"manifest not found: {path}")
        return cls.from_doc(jsonio.load(path), base_dir=path.parent)

    def kind(self):
        if self.attributes_target is not None:
            return "attributes"
        if self.predictions_target is not None:
            return "task"
        if self.domain is not None:
            return "subspace"
        return None

    def resolve(self, path):
        """Resolve a data path: absolute as-is, else against XFERXAI_DATA_DIR
        when set, else against the manifest's own directory."""
        path = Path(path)
        if path.is_absolute():
            return path
        data_dir = os.environ.get(DATA_DIR_ENV)
        if data_dir:
            return Path(data_dir) / path
        if self.base_dir is not None:
            return self.base_dir / path
        return path


def _attribute_names(entries):
    return [e["name"] if isinstance(e, dict) else e for e in entries]


def _build_schema(entries, raw):
    """Schema from manifest entries; display ranges default to data extent."""
    attrs = []
    for j, entry in enumerate(entries):
        if isinstance(entry, dict):
            name = entry["name"]
            unit = entry.get("unit", "")
            lo = entry.get("display_min")
            hi = entry.get("display_max")
        else:
            name, unit, lo, hi = entry, "", None, None
        if lo is None or hi is None:
            col = raw[:, j]
            lo = float(col.min()) if lo is None else lo
            hi = float(col.max()) if hi is None else hi
            if lo >= hi:  # constant column: widen so the meter has extent
                lo, hi = lo - 0.5, hi + 0.5
        attrs.append(Attribute(name=name, unit=unit, display_min=float(lo),
                               display_max=float(hi)))
    return AttributeSchema(tuple(attrs))


def _parse_cell(text, row_index, column):
    text = text.strip()
    if not text:
        raise DataFormatError(f"row {row_index}: empty cell in column {column!r}")
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(
            f"row {row_index}: non-numeric value {text!r} in column {column!r}"
        ) from None
    if not np.isfinite(value):
        raise DataFormatError(
            f"row {row_index}: non-finite value {text!r} in column {column!r}"
        )
    return value


def _read_table(path, columns):
    """Read the named columns; returns (matrix, domain column raw strings)."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"data file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        positions = {}
        for name in columns:
            if name not in header:
                raise DataFormatError(f"{path}: missing column {name!r}")
            positions[name] = header.index(name)
        rows = []
        for i, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"row {i}: expected {len(header)} cells, got {len(row)}"
                )
            rows.append((i, [row[positions[name]] for name in columns]))
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return rows


def _predictions_from(source, manifest, numeric_columns, cells_by_column, raw):
    """Prediction vector from a column or a predictor reference."""
    if isinstance(source, str):
        return np.array(cells_by_column[source])
    if isinstance(source, dict) and "predictor" in source:
        from .blackbox import PredictorSpec, predict

        spec = PredictorSpec.load(manifest.resolve(source["predictor"]))
        out = predict(spec, raw)
        task = source.get("task")
        if out.ndim == 2:
            if task is None:
                if out.shape[1] != 1:
                    raise DataFormatError(
                        "multi-task predictor needs a 'task' index in the manifest"
                    )
                task = 0
            out = out[:, int(task)]
        return out
    raise DataFormatError(f"bad predictions source {source!r}")


def ingest_csv(path, manifest):
    """Parse, center, and split a CSV per the manifest.

    Returns a CenteredDataset for a single-domain manifest, or a
    DomainPair when the manifest declares a second domain. Centering
    follows the kind: subspaces center per domain, tasks center once
    over the shared instances, attribute views center independently.
    """
    attr_names = _attribute_names(manifest.attributes)
    columns = list(attr_names)
    attr_t_names = None
    if manifest.attributes_target is not None:
        attr_t_names = _attribute_names(manifest.attributes_target)
        columns += [c for c in attr_t_names if c not in columns]
    if manifest.label:
        columns.append(manifest.label)
    for source in (manifest.predictions, manifest.predictions_target):
        if isinstance(source, str) and source not in columns:
            columns.append(source)
    domain_col = manifest.domain if isinstance(manifest.domain, str) else None
    if domain_col and domain_col not in columns:
        columns.append(domain_col)

    rows = _read_table(path, columns)

    numeric_columns = [c for c in columns if c != domain_col]
    cells_by_column = {c: [] for c in numeric_columns}
    domain_cells = []
    row_indices = []
    for i, cells in rows:
        row_indices.append(i)
        for name, text in zip(columns, cells):
            if name == domain_col:
                domain_cells.append(text.strip())
            else:
                cells_by_column[name].append(_parse_cell(text, i, name))

    raw = np.column_stack([cells_by_column[c] for c in attr_names])
    labels = np.array(cells_by_column[manifest.label]) if manifest.label else None
    preds = _predictions_from(
        manifest.predictions, manifest, numeric_columns, cells_by_column, raw
    )
    schema = _build_schema(manifest.attributes, raw)
    kind = manifest.kind()

    if kind is None:
        means = compute_means(raw)
        return CenteredDataset(
            relative_values=center(raw, means),
            attribute_means=means,
            blackbox_predictions=preds,
            schema=schema,
            domain_id=[manifest.domain_names[0]] * len(row_indices),
            raw_labels=labels,
            row_indices=row_indices,
        )

    if kind == "subspace":
        name_o, name_t = manifest.domain_names
        if domain_col:
            allowed = set(manifest.domain_names)
            bad = [(i, v) for i, v in zip(row_indices, domain_cells)
                   if v not in allowed]
            if bad:
                i, v = bad[0]
                raise DataFormatError(
                    f"row {i}: domain value {v!r} is not one of {sorted(allowed)}"
                )
            in_target = np.array([v == name_t for v in domain_cells])
        else:
            rule = manifest.domain
            j = attr_names.index(rule["rule"]) if rule["rule"] in attr_names else None
            if j is None:
                raise DataFormatError(
                    f"domain rule names unknown attribute {rule['rule']!r}"
                )
            op = _OPS[rule["op"]]
            in_target = np.array(
                [op(v, float(rule["threshold"])) for v in raw[:, j]]
            )
        if not in_target.any() or in_target.all():
            raise DataFormatError("domain split leaves one side empty")
        parts = []
        for mask, tag in ((~in_target, name_o), (in_target, name_t)):
            sub_raw = raw[mask]
            means = compute_means(sub_raw)  # per-subspace means
            parts.append(CenteredDataset(
                relative_values=center(sub_raw, means),
                attribute_means=means,
                blackbox_predictions=preds[mask],
                schema=schema,
                domain_id=[tag] * int(mask.sum()),
                raw_labels=labels[mask] if labels is not None else None,
                row_indices=[r for r, m in zip(row_indices, mask) if m],
            ))
        return DomainPair(original=parts[0], target=parts[1], kind="subspace")

    preds_t = _predictions_from(
        manifest.predictions_target, manifest, numeric_columns, cells_by_column, raw
    )

    if kind == "task":
        means = compute_means(raw)  # same instances, one centering
        chi = center(raw, means)
        common = dict(relative_values=chi, attribute_means=means, schema=schema,
                      raw_labels=labels, row_indices=row_indices)
        return DomainPair(
            original=CenteredDataset(
                blackbox_predictions=preds,
                domain_id=[manifest.domain_names[0]] * len(row_indices), **common),
            target=CenteredDataset(
                blackbox_predictions=preds_t,
                domain_id=[manifest.domain_names[1]] * len(row_indices), **common),
            kind="task",
        )

    # attributes: two views over the same rows, centered independently
    raw_t = np.column_stack([cells_by_column[c] for c in attr_t_names])
    schema_t = _build_schema(manifest.attributes_target, raw_t)
    means_o = compute_means(raw)
    means_t = compute_means(raw_t)
    return DomainPair(
        original=CenteredDataset(
            relative_values=center(raw, means_o), attribute_means=means_o,
            blackbox_predictions=preds, schema=schema,
            domain_id=[manifest.domain_names[0]] * len(row_indices),
            raw_labels=labels, row_indices=row_indices),
        target=CenteredDataset(
            relative_values=center(raw_t, means_t), attribute_means=means_t,
            blackbox_predictions=preds_t, schema=schema_t,
            domain_id=[manifest.domain_names[1]] * len(row_indices),
            raw_labels=labels, row_indices=row_indices),
        kind="attributes",
    )


def write_csv(path, header, columns):
    """Write columns (same length) under the given header names.

    Floats are written with repr, which round-trips doubles exactly.
    """
    lengths = {len(c) for c in columns}
    if len(lengths) > 1:
        raise DimensionMismatchError(f"ragged columns: lengths {sorted(lengths)}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([
                repr(float(v)) if isinstance(v, (int, float, np.floating)) else v
                for v in row
            ])
