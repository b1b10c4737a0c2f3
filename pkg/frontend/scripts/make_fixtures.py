"""Regenerate the viewer test fixtures.

Builds one bundle per transfer kind plus frozen what-if expectations,
all through the same service endpoints the CLI uses, so the viewer's
recompute parity is checked against the shipping computation and not a
re-derivation. Run from the repository root:

    python3 frontend/scripts/make_fixtures.py
"""

import warnings
from pathlib import Path

import numpy as np

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from xferxai import jsonio
from xferxai.algebra import Mapping, apply_affine, LinearExplainer
from xferxai.explain import display_number, export_ui_bundle, percent_text
from xferxai.preprocess import CenteredDataset, center, compute_means
from xferxai.schema import Attribute, AttributeSchema
from xferxai.service.app import create_app
from xferxai.trainer import (
    TransferFit,
    default_thresholds,
    fit_transfer,
    snap_sparse,
    sparsity_loss,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
DEMO = Path(__file__).resolve().parent.parent / "demo"


def dataset(raw, predictions, schema, means=None):
    means = compute_means(raw) if means is None else np.asarray(means)
    return CenteredDataset(
        relative_values=center(raw, means),
        attribute_means=means,
        blackbox_predictions=predictions,
        schema=schema,
    )


def task_fixture():
    """Two clinical risk tasks over shared patients; one factor reverses."""
    schema = AttributeSchema((
        Attribute("Age", "years", 20.0, 80.0),
        Attribute("BMI", "kg/m2", 15.0, 40.0),
    ))
    rng = np.random.default_rng(21)
    raw = np.column_stack([
        rng.normal(50.0, 12.0, 300),
        rng.normal(27.0, 4.0, 300),
    ])
    factors = np.array([0.8, 2.5])
    kappa = np.array([1.0, -0.4, 1.3])
    means = compute_means(raw)
    chi = center(raw, means)
    y_o = chi @ factors + 50.0 + rng.normal(scale=0.02, size=300)
    y_t = chi @ (kappa[:2] * factors) + 1.3 * 50.0 \
        + rng.normal(scale=0.02, size=300)
    fit = fit_transfer(dataset(raw, y_o, schema, means),
                       dataset(raw, y_t, schema, means),
                       kind="task", lam=0.01, seed=0)
    fit = snap_sparse(fit, default_thresholds(fit))
    instances = [[62.0, 31.0], [45.0, 24.0]]
    systems = [75.0, None]
    return fit, instances, systems


def subspace_fixture():
    """One weather model explained separately in two seasons."""
    schema = AttributeSchema((
        Attribute("Temperature", "C", -10.0, 40.0),
        Attribute("Wind speed", "m/s", 0.0, 15.0),
    ))
    rng = np.random.default_rng(22)
    raw_o = np.column_stack([
        rng.normal(25.0, 5.0, 300),
        rng.normal(3.0, 1.5, 300),
    ])
    raw_t = np.column_stack([
        rng.normal(5.0, 5.0, 300),
        rng.normal(8.0, 2.0, 300),
    ])
    w_o = np.array([1.2, -0.8])
    delta = np.array([0.0, 1.5, -2.0])
    y_o = center(raw_o, compute_means(raw_o)) @ w_o + 30.0 \
        + rng.normal(scale=0.02, size=300)
    y_t = center(raw_t, compute_means(raw_t)) @ (w_o + delta[:2]) \
        + (30.0 + delta[2]) + rng.normal(scale=0.02, size=300)
    fit = fit_transfer(dataset(raw_o, y_o, schema),
                       dataset(raw_t, y_t, schema),
                       kind="subspace", lam=0.01, seed=0)
    fit = snap_sparse(fit, default_thresholds(fit))
    instances = [[8.0, 9.5], [2.0, 6.0]]
    systems = [36.0, None]
    return fit, instances, systems


def attributes_fixture():
    """Hand-built body-metrics mapping with round display coefficients."""
    original_schema = AttributeSchema((
        Attribute("BMI", "", 15.0, 40.0),
        Attribute("Pulse", "bpm", 50.0, 120.0),
    ))
    target_schema = AttributeSchema((
        Attribute("Weight", "kg", 40.0, 150.0),
        Attribute("Height", "cm", 140.0, 210.0),
    ))
    original = LinearExplainer(
        factors=[2.2, -0.5],
        centroid_label=45.0,
        attribute_means=[26.0, 72.0],
        schema=original_schema,
    )
    mapping = Mapping([[0.3, -0.2], [0.0, 1.0]])
    derived = apply_affine(mapping, original, target_schema=target_schema,
                           target_means=[75.0, 172.0])
    fit = TransferFit(
        kind="attributes",
        lam=0.0,
        original=original,
        transfer=mapping,
        derived_target=derived,
        loss_breakdown={"l_original": 0.0, "l_target": 0.0,
                        "l_sparsity": sparsity_loss(mapping)},
        convergence={"converged": True, "iterations": 0,
                     "gradient_norm": 0.0},
        options={"constructed": True},
    )
    instances = [[82.0, 178.0], [65.0, 160.0]]
    systems = [44.2, None]
    return fit, instances, systems


def whatif_cases(fit, instances):
    """Edit vectors with the bundle instance each one starts from: the
    shipped instances untouched, single-attribute edits, and the exact
    attribute means (every partial must vanish there)."""
    means = [float(v) for v in fit.derived_target.attribute_means]
    cases = [(0, list(instances[0])), (1, list(instances[1]))]
    edited = list(instances[0])
    edited[0] = edited[0] + 7.5
    cases.append((0, edited))
    edited = list(instances[1])
    edited[-1] = edited[-1] * 0.5
    cases.append((1, edited))
    cases.append((0, means))
    return cases


def freeze(client, name, fit, instances, systems):
    fit_doc = fit.to_doc()
    bundle = export_ui_bundle(fit, instances, systems)
    cases = whatif_cases(fit, instances)
    # system predictions follow the base instance so the frozen percent
    # badges line up with what the viewer recomputes from the bundle
    response = client.post("/api/simulate", json={
        "fit": fit_doc,
        "instances": [values for _, values in cases],
        "system_predictions": [systems[base] for base, _ in cases],
    })
    response.raise_for_status()
    expected = response.json()["explanations"]
    doc = {
        "bundle": bundle,
        "whatif": {
            "bases": [base for base, _ in cases],
            "instances": [values for _, values in cases],
            "expected": expected,
            "estimate_display": [
                display_number(e["estimate"], 4) for e in expected
            ],
            "badges": [
                percent_text(e["percent_diff"])
                if e["percent_diff"] is not None else None
                for e in expected
            ],
        },
    }
    jsonio.dump(doc, FIXTURES / f"{name}.json")
    jsonio.dump(bundle, DEMO / f"{name}.json")
    print(f"wrote {name}: kind={bundle['kind']}, "
          f"{len(cases)} what-if cases")


def display_fixture():
    """display_number / percent_text outputs across rounding edge cases."""
    values = [
        0.0, 0.25, -0.25, 0.125, -0.125, 2.675, 97.5, 125.0, 0.5, 1.5,
        2.5, 0.00001, 5.1e6, 123456.0, 0.000123456, 3.14159, -2.718,
        15.0, 238.2, 1e-6, 0.999999, 42.0, -0.06, 1.0497, 0.030000000000000002,
    ]
    numbers = [
        {"value": v, "digits": d, "text": display_number(v, d)}
        for v in values for d in (2, 4)
    ]
    percents = [
        {"percent": p, "text": percent_text(p)}
        for p in (0.0, 58.26, -3.2, 0.049, 100.0, -0.0001, 12.5)
    ]
    jsonio.dump({"numbers": numbers, "percents": percents},
                FIXTURES / "display.json")
    print(f"wrote display: {len(numbers)} numbers, {len(percents)} percents")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    DEMO.mkdir(parents=True, exist_ok=True)
    client = TestClient(create_app(), raise_server_exceptions=False)
    for name, build in (("task", task_fixture),
                        ("subspace", subspace_fixture),
                        ("attributes", attributes_fixture)):
        fit, instances, systems = build()
        freeze(client, name, fit, instances, systems)
    display_fixture()


if __name__ == "__main__":
    main()
