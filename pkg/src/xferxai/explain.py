"""Per-instance explanations and display semantics.

Numbers shown to people are rounded to 2 significant digits; every
number in an exported bundle stays full precision so the viewer can
recompute exactly. Scale text follows the bigger/smaller convention:
the displayed ratio is always at least 1, with the direction carried
by the word ("5x Smaller" rather than "0.2x"), and a negated factor
appends " (Opp)".
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .algebra import Mapping, Scaling, Translation
from .errors import (
    DataFormatError,
    DimensionMismatchError,
    UndefinedValueError,
)

MULTIPLY_SIGN = "×"
DEFAULT_SIMILAR_BAND = 0.05


def round_sig(value, digits=2):
    """Round to ``digits`` significant digits."""
    if value == 0 or not math.isfinite(value):
        return value
    exponent = math.floor(math.log10(abs(value)))
    return round(value, -exponent + digits - 1)


def display_number(value, digits=2):
    """Plain decimal text of a value at display precision, no exponent."""
    if not math.isfinite(value):
        raise DataFormatError(f"cannot display non-finite value {value!r}")
    rounded = round_sig(float(value), digits)
    if rounded == int(rounded):
        return str(int(rounded))
    text = format(rounded, ".12f").rstrip("0").rstrip(".")
    if text in ("", "-0", "0"):
        return "0"
    return text


@dataclass
class Explanation:
    """One instance's decomposition under an explainer."""

    instance_raw: np.ndarray
    relative_values: np.ndarray
    factors: np.ndarray
    partial_contributions: np.ndarray
    centroid: float
    explainer_estimate: float
    system_prediction: float = None
    percent_difference: float = None
    scale_annotations: list = None


def explain_instance(explainer, instance_raw, system_prediction=None):
    """Decompose one raw instance: chi, per-attribute partials, estimate.

    percent_difference is 100 * (estimate - system) / system when a
    system prediction is supplied; a zero system prediction leaves the
    percent undefined and is rejected.
    """
    x = np.asarray(instance_raw, dtype=float)
    n = explainer.factors.shape[0]
    if x.shape != (n,):
        raise DimensionMismatchError(
            "instance width must match the explainer", expected=n, got=x.shape
        )
    chi = x - explainer.attribute_means
    partials = explainer.factors * chi
    estimate = explainer.centroid_label + float(partials.sum())
    percent = None
    if system_prediction is not None:
        if system_prediction == 0:
            raise UndefinedValueError(
                "percent difference is undefined for a zero system prediction"
            )
        percent = 100.0 * (estimate - system_prediction) / system_prediction
    return Explanation(
        instance_raw=x,
        relative_values=chi,
        factors=explainer.factors.copy(),
        partial_contributions=partials,
        centroid=explainer.centroid_label,
        explainer_estimate=estimate,
        system_prediction=system_prediction,
        percent_difference=percent,
    )


def percent_text(percent, digits=2):
    """"15% Lower" style badge text."""
    if percent == 0:
        return "0% Different"
    word = "Higher" if percent > 0 else "Lower"
    return f"{display_number(abs(percent), digits)}% {word}"


def format_scale(kappa, precision=2, similar_band=DEFAULT_SIMILAR_BAND):
    """Human scale text for one factor relation.

    A magnitude within the similar band of 1 reads "1x Similar"; above
    it the ratio reads Bigger, below it the reciprocal reads Smaller.
    Negative kappa appends " (Opp)". Zero has no ratio and reads
    "0x (removed)".
    """
    if not math.isfinite(kappa):
        raise DataFormatError("scale must be finite")
    if kappa == 0:
        return f"0{MULTIPLY_SIGN} (removed)"
    magnitude = abs(kappa)
    opp = " (Opp)" if kappa < 0 else ""
    if abs(magnitude - 1.0) <= similar_band:
        return f"1{MULTIPLY_SIGN} Similar{opp}"
    if magnitude > 1.0:
        ratio, word = magnitude, "Bigger"
    else:
        ratio, word = 1.0 / magnitude, "Smaller"
        if not math.isfinite(ratio):  # below 1/DBL_MAX: no printable ratio
            return f"0{MULTIPLY_SIGN} (removed)"
    return f"{display_number(ratio, precision)}{MULTIPLY_SIGN} {word}{opp}"


_SCALE_PATTERN = re.compile(
    rf"^(?P<ratio>[0-9.]+){MULTIPLY_SIGN} (?P<word>Similar|Bigger|Smaller|\(removed\))"
    rf"(?P<opp> \(Opp\))?$"
)


def parse_scale(text):
    """Invert format_scale up to the printed precision."""
    match = _SCALE_PATTERN.match(text.strip())
    if not match:
        raise DataFormatError(f"unparseable scale text {text!r}")
    word = match.group("word")
    ratio = float(match.group("ratio"))
    if word == "(removed)":
        return 0.0
    if word == "Similar":
        magnitude = 1.0
    elif word == "Bigger":
        magnitude = ratio
    else:
        magnitude = 1.0 / ratio
    return -magnitude if match.group("opp") else magnitude


def _coefficient_text(value):
    text = display_number(value)
    return f"({text})" if value < 0 else text


def format_mapping_formula(m_chi, index, schema_original, schema_target, mode):
    """Tooltip formula for one mapping row or column.

    values mode reads row ``index``: how original attribute ``index``
    is rebuilt from target values, "To = From1 x c1 + From2 x c2".
    factors mode reads column ``index``: the expression producing
    target factor ``index`` from original factors,
    "From1's Factor x c1 + ...".
    """
    m = np.asarray(m_chi, dtype=float)
    if mode == "values":
        if not (0 <= index < m.shape[0]):
            raise DimensionMismatchError("row index out of range",
                                         expected=m.shape[0], got=index)
        coefficients = m[index]
        labels = [a.label() for a in schema_target.attributes]
        to_label = schema_original.attributes[index].label()
    elif mode == "factors":
        if not (0 <= index < m.shape[1]):
            raise DimensionMismatchError("column index out of range",
                                         expected=m.shape[1], got=index)
        coefficients = m[:, index]
        labels = [a.label() for a in schema_original.attributes]
        to_label = schema_target.attributes[index].label()
    else:
        raise DataFormatError(f"unknown mode {mode!r}")
    terms = [
        (label, c) for label, c in zip(labels, coefficients) if c != 0
    ]
    if not terms:
        raise UndefinedValueError(
            f"every coefficient is zero in {mode} {'row' if mode == 'values' else 'column'} {index}"
        )
    if mode == "values":
        rhs = " + ".join(
            f"{label} {MULTIPLY_SIGN} {_coefficient_text(c)}" for label, c in terms
        )
        return f"{to_label} = {rhs}"
    return " + ".join(
        f"{label}'s Factor {MULTIPLY_SIGN} {_coefficient_text(c)}"
        for label, c in terms
    )


def _formatted_transfer(fit):
    transfer = fit.transfer
    if isinstance(transfer, Scaling):
        return {"scales": [format_scale(k) for k in transfer.kappa]}
    if isinstance(transfer, Translation):
        deltas = []
        for d in transfer.delta:
            text = display_number(d)
            deltas.append(f"+{text}" if d > 0 else text)
        return {"deltas": deltas}
    values_formulas = []
    for i in range(transfer.m_chi.shape[0]):
        try:
            values_formulas.append(format_mapping_formula(
                transfer.m_chi, i, fit.original.schema,
                fit.derived_target.schema, "values"))
        except UndefinedValueError:
            values_formulas.append(None)
    factors_formulas = []
    for j in range(transfer.m_chi.shape[1]):
        try:
            factors_formulas.append(format_mapping_formula(
                transfer.m_chi, j, fit.original.schema,
                fit.derived_target.schema, "factors"))
        except UndefinedValueError:
            factors_formulas.append(None)
    return {"values_formulas": values_formulas,
            "factors_formulas": factors_formulas}


def export_ui_bundle(fit, instances, system_predictions, kind=None):
    """Self-contained viewer document for a fit plus example instances.

    Instances are raw vectors in the target schema, explained by the
    derived target explainer; system predictions pair with them
    one-to-one. Field names are frozen viewer contract.
    """
    kind = kind or fit.kind
    instances = [np.asarray(row, dtype=float) for row in instances]
    system_predictions = list(system_predictions)
    if len(instances) != len(system_predictions):
        raise DimensionMismatchError(
            "one system prediction per instance",
            expected=len(instances), got=len(system_predictions),
        )
    explainer = fit.derived_target
    rows = []
    for raw, system in zip(instances, system_predictions):
        explanation = explain_instance(explainer, raw, system)
        rows.append({
            "raw": [float(v) for v in explanation.instance_raw],
            "relative": [float(v) for v in explanation.relative_values],
            "partials": [float(v) for v in explanation.partial_contributions],
            "estimate": explanation.explainer_estimate,
            "system": float(system) if system is not None else None,
            "percent_diff": explanation.percent_difference,
        })
    transfer_doc = fit.transfer.to_doc()
    return {
        "format_version": 1,
        "kind": kind,
        "schema_original": fit.original.schema.to_doc(),
        "schema_target": explainer.schema.to_doc(),
        "explainer_original": fit.original.to_doc(),
        "explainer_target": explainer.to_doc(),
        "transfer": {
            "variant": transfer_doc["variant"],
            "parameters": transfer_doc["parameters"],
            "partition": transfer_doc.get("partition"),
            "formatted": _formatted_transfer(fit),
        },
        "instances": rows,
        "display": [
            {"name": a.name, "min": a.display_min, "max": a.display_max}
            for a in explainer.schema.attributes
        ],
    }


def explanation_text(explanation, schema, scale_annotations=None):
    """Fixed-width text table of one explanation, for the terminal."""
    lines = []
    header = f"{'Attribute':<24}{'Value':>12}{'Relative':>12}{'Factor':>12}{'Partial':>12}"
    if scale_annotations:
        header += "  Scale"
    lines.append(header)
    for i, attr in enumerate(schema.attributes):
        row = (
            f"{attr.label():<24}"
            f"{display_number(explanation.instance_raw[i], 4):>12}"
            f"{display_number(explanation.relative_values[i], 4):>12}"
            f"{display_number(explanation.factors[i], 4):>12}"
            f"{display_number(explanation.partial_contributions[i], 4):>12}"
        )
        if scale_annotations:
            row += f"  {scale_annotations[i]}"
        lines.append(row)
    lines.append(f"{'Average':<24}{'':>36}{display_number(explanation.centroid, 4):>12}")
    lines.append(f"Explainer estimate: {display_number(explanation.explainer_estimate, 4)}")
    if explanation.system_prediction is not None:
        lines.append(f"System prediction:  {display_number(explanation.system_prediction, 4)}")
        lines.append(f"Difference:         {percent_text(explanation.percent_difference)}")
    return "\n".join(lines)
