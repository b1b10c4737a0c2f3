"""Display semantics: scale words, formulas, bundles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xferxai import jsonio
from xferxai.algebra import LinearExplainer
from xferxai.datasets import mapping_pair, task_pair
from xferxai.errors import (
    DataFormatError,
    DimensionMismatchError,
    UndefinedValueError,
)
from xferxai.explain import (
    display_number,
    explain_instance,
    explanation_text,
    export_ui_bundle,
    format_mapping_formula,
    format_scale,
    parse_scale,
    percent_text,
    round_sig,
)
from xferxai.schema import Attribute, AttributeSchema, simple_schema
from xferxai.trainer import fit_transfer, snap_sparse


def test_round_sig_two_digits():
    assert round_sig(0.19607, 2) == pytest.approx(0.2)
    assert round_sig(5123.0, 2) == 5100.0
    assert round_sig(-0.0437, 2) == pytest.approx(-0.044)
    assert round_sig(0.0, 2) == 0.0


def test_display_number_never_uses_exponent_notation():
    assert display_number(5.0) == "5"
    assert display_number(0.30000000000000004) == "0.3"
    assert display_number(1e-5) == "0.00001"
    assert display_number(5.1e6) == "5100000"
    assert display_number(-0.25) == "-0.25"
    assert display_number(1.6) == "1.6"


@pytest.mark.parametrize("kappa,text", [
    (0.2, "5× Smaller"),
    (5.0, "5× Bigger"),
    (1.0, "1× Similar"),
    (1.04, "1× Similar"),
    (0.96, "1× Similar"),
    (-0.196, "5.1× Smaller (Opp)"),
    (-1.02, "1× Similar (Opp)"),
    (0.0, "0× (removed)"),
    (1.6, "1.6× Bigger"),
    (2.0, "2× Bigger"),
    (-3.0, "3× Bigger (Opp)"),
])
def test_format_scale_pinned_strings(kappa, text):
    assert format_scale(kappa) == text


def test_format_scale_rejects_non_finite():
    with pytest.raises(DataFormatError):
        format_scale(float("nan"))


def test_format_scale_subnormal_magnitude_reads_removed():
    # 1/kappa overflows past the largest double; there is no printable ratio
    assert format_scale(2e-311) == "0× (removed)"


@settings(max_examples=200, deadline=None)
@given(st.floats(-20.0, 20.0).filter(lambda k: k == 0 or abs(k) > 1e-300))
def test_parse_scale_inverts_format_scale(kappa):
    text = format_scale(kappa)
    recovered = parse_scale(text)
    if kappa == 0:
        assert recovered == 0.0
        return
    # recovery is exact up to the printed 2 significant digits and the band
    magnitude = abs(kappa)
    if abs(magnitude - 1.0) <= 0.05:
        assert abs(recovered) == 1.0
    else:
        shown = magnitude if magnitude > 1 else 1.0 / magnitude
        mag_recovered = abs(recovered)
        ratio_recovered = mag_recovered if mag_recovered > 1 else 1.0 / mag_recovered
        assert abs(ratio_recovered - shown) <= 0.05 * shown + 1e-9
    assert (recovered < 0) == (kappa < 0)


def test_percent_text():
    assert percent_text(-14.96) == "15% Lower"
    assert percent_text(7.5) == "7.5% Higher"
    assert percent_text(0.0) == "0% Different"


def bmi_schema():
    return AttributeSchema((
        Attribute("Weight", "kg", 0.0, 200.0),
        Attribute("Height", "cm", 0.0, 250.0),
    ))


def target_schema_bmi():
    return AttributeSchema((
        Attribute("BMI", "", 0.0, 60.0),
        Attribute("Age", "", 0.0, 120.0),
    ))


def test_mapping_formula_values_mode_pinned():
    # row 0: BMI rebuilt from the target view's attributes
    m = np.array([[0.3, -0.2], [0.0, 1.0]])
    schema_o = AttributeSchema((Attribute("BMI", "", 0.0, 60.0),
                                Attribute("Age", "", 0.0, 120.0)))
    text = format_mapping_formula(m, 0, schema_o, bmi_schema(), "values")
    assert text == "BMI = Weight (kg) × 0.3 + Height (cm) × (-0.2)"


def test_mapping_formula_factors_mode_is_rhs_only():
    m = np.array([[1.0], [0.5]])
    schema_o = AttributeSchema((
        Attribute("Average blood sugar", "%", 0.0, 20.0),
        Attribute("BMI", "", 0.0, 60.0),
    ))
    schema_t = AttributeSchema((Attribute("Glucose", "mg/dL", 0.0, 300.0),))
    text = format_mapping_formula(m, 0, schema_o, schema_t, "factors")
    assert text == "Average blood sugar (%)'s Factor × 1 + BMI's Factor × 0.5"


def test_mapping_formula_drops_zero_terms_and_rejects_empty():
    m = np.array([[0.0, -0.7], [0.0, 0.0]])
    schema_o = AttributeSchema((Attribute("Pressure", "hPa", 0.0, 1100.0),
                                Attribute("Rain", "mm", 0.0, 500.0)))
    schema_t = AttributeSchema((Attribute("Humidity", "%", 0.0, 100.0),
                                Attribute("Temperature", "°C", -40.0, 50.0)))
    text = format_mapping_formula(m, 0, schema_o, schema_t, "values")
    assert text == "Pressure (hPa) = Temperature (°C) × (-0.7)"
    with pytest.raises(UndefinedValueError):
        format_mapping_formula(m, 1, schema_o, schema_t, "values")
    with pytest.raises(DataFormatError):
        format_mapping_formula(m, 0, schema_o, schema_t, "sideways")


def test_explain_instance_additivity():
    explainer = LinearExplainer(
        factors=[2.0, -1.0], centroid_label=10.0, attribute_means=[1.0, 3.0],
        schema=simple_schema(["a", "b"]),
    )
    explanation = explain_instance(explainer, [2.0, 1.0], system_prediction=13.0)
    assert explanation.relative_values.tolist() == [1.0, -2.0]
    assert explanation.partial_contributions.tolist() == [2.0, 2.0]
    assert explanation.explainer_estimate == 14.0
    # partials plus the centroid always reassemble the estimate
    assert explanation.centroid + explanation.partial_contributions.sum() \
        == explanation.explainer_estimate
    assert explanation.percent_difference == pytest.approx(100.0 / 13.0)


def test_explain_instance_zero_system_is_undefined():
    explainer = LinearExplainer(
        factors=[1.0], centroid_label=0.0, attribute_means=[0.0],
        schema=simple_schema(["a"]),
    )
    with pytest.raises(UndefinedValueError):
        explain_instance(explainer, [1.0], system_prediction=0.0)
    with pytest.raises(DimensionMismatchError):
        explain_instance(explainer, [1.0, 2.0])


@pytest.fixture(scope="module")
def task_bundle():
    pair = task_pair([3.0, -4.0], 15.0, [1.0, 2.0, 1.0], n_rows=300, seed=2,
                     noise=0.02, scales=[1.5, 1.2])
    fit = snap_sparse(fit_transfer(pair.original, pair.target, kind="task",
                                   lam=0.1, seed=0))
    instances = pair.target.raw_values()[:3]
    systems = pair.target.blackbox_predictions[:3]
    return fit, export_ui_bundle(fit, instances, systems)


def test_bundle_has_the_frozen_field_names(task_bundle):
    _, bundle = task_bundle
    assert set(bundle) == {
        "format_version", "kind", "schema_original", "schema_target",
        "explainer_original", "explainer_target", "transfer", "instances",
        "display",
    }
    assert set(bundle["transfer"]) == {"variant", "parameters", "partition",
                                       "formatted"}
    row = bundle["instances"][0]
    assert set(row) == {"raw", "relative", "partials", "estimate", "system",
                        "percent_diff"}
    assert [d["name"] for d in bundle["display"]] == ["a0", "a1"]


def test_bundle_rows_recompute_from_the_explainer(task_bundle):
    fit, bundle = task_bundle
    explainer = fit.derived_target
    for row in bundle["instances"]:
        chi = np.asarray(row["raw"]) - explainer.attribute_means
        assert np.allclose(chi, row["relative"], atol=1e-12)
        partials = explainer.factors * chi
        assert np.allclose(partials, row["partials"], atol=1e-12)
        assert row["estimate"] == pytest.approx(
            explainer.centroid_label + partials.sum(), rel=1e-12)
    assert bundle["transfer"]["formatted"]["scales"][1] == "2× Bigger"


def test_bundle_serializes_canonically(task_bundle):
    _, bundle = task_bundle
    assert jsonio.dumps(jsonio.loads(jsonio.dumps(bundle))) == jsonio.dumps(bundle)


def test_bundle_length_mismatch_rejected(task_bundle):
    fit, _ = task_bundle
    with pytest.raises(DimensionMismatchError):
        export_ui_bundle(fit, [[0.0, 0.0]], [])


def test_mapping_bundle_formats_formulas():
    m_star = np.array([[1.0, 0.4, 0.0], [0.0, -0.6, 1.2]])
    pair = mapping_pair(m_star, [2.0, -1.5], 12.0, n_rows=300, seed=6,
                        noise=0.05)
    fit = snap_sparse(fit_transfer(pair.original, pair.target,
                                   kind="attributes", lam=0.01, seed=0))
    bundle = export_ui_bundle(fit, pair.target.raw_values()[:2],
                              pair.target.blackbox_predictions[:2])
    formatted = bundle["transfer"]["formatted"]
    assert len(formatted["values_formulas"]) == 2
    assert len(formatted["factors_formulas"]) == 3
    for text in formatted["factors_formulas"]:
        assert text is None or "'s Factor ×" in text


def test_explanation_text_layout():
    explainer = LinearExplainer(
        factors=[2.0, -1.0], centroid_label=10.0, attribute_means=[1.0, 3.0],
        schema=simple_schema(["a", "b"]),
    )
    explanation = explain_instance(explainer, [2.0, 1.0], system_prediction=13.0)
    text = explanation_text(explanation, explainer.schema,
                            scale_annotations=["1× Similar", "2× Bigger"])
    lines = text.splitlines()
    assert lines[0].startswith("Attribute")
    assert lines[0].rstrip().endswith("Scale")
    assert "Average" in lines[3]
    assert "Explainer estimate: 14" in text
    assert "Difference:" in text and "Higher" in text
