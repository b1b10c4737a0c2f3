"""End-to-end acceptance gate.

Each test checks one headline guarantee at its stated tolerance and
prints a single PASS/FAIL line (visible through pytest's capture), so a
full run reads as a checklist. Oracles are independent of the code
under test: data generators, brute-force recomputation, or algebraic
identities.
"""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xferxai.algebra import (
    HomogeneousTransform,
    LinearExplainer,
    Mapping,
    Scaling,
    Translation,
    compose,
    map_factors,
    map_values,
    to_homogeneous,
)
from xferxai.datasets import (
    air_quality_pair,
    linear_data,
    mapping_pair,
    task_pair,
)
from xferxai.explain import format_scale, parse_scale
from xferxai.metrics import (
    evaluate_fit,
    faithfulness_r2,
    log_ape,
    log_unfaithfulness,
    log_woa,
    mse,
    ordinal_error,
    relation_of_factors,
    xai_domain_gap,
    ResponseRecord,
)
from xferxai.schema import simple_schema
from xferxai.trainer import (
    TransferObjective,
    default_thresholds,
    fit_single,
    fit_transfer,
    snap_sparse,
)


def _report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def _fit_grid_best(pair, kind, grid, seed=0):
    """The CLI's selection rule: snap every fit, keep the lowest data loss."""
    best = None
    best_loss = math.inf
    for lam in grid:
        fit = fit_transfer(pair.original, pair.target, kind=kind, lam=lam,
                           seed=seed)
        fit = snap_sparse(fit, default_thresholds(fit))
        loss = fit.loss_breakdown["l_original"] + fit.loss_breakdown["l_target"]
        if loss < best_loss:
            best, best_loss = fit, loss
    return best


def test_exact_recovery_on_linear_blackbox(capsys):
    """Noiseless linear predictions: factors back to 1e-6 rel, R^2 = 1."""
    start = time.perf_counter()
    worst = {"rel": 0.0, "r2": 0.0}

    @settings(max_examples=30, deadline=None, derandomize=True)
    @given(st.integers(0, 10**6), st.integers(1, 6))
    def recovers(seed, n_attrs):
        rng = np.random.default_rng(seed)
        factors = rng.uniform(0.1, 50.0, n_attrs) * rng.choice([-1.0, 1.0],
                                                               n_attrs)
        centroid = float(rng.uniform(-100.0, 100.0))
        rows = n_attrs + 10 + int(rng.integers(0, 40))
        data = linear_data(factors, centroid, n_rows=rows, seed=seed)
        explainer = fit_single(data)
        rel = float(np.max(np.abs(explainer.factors - factors)
                           / np.abs(factors)))
        r2 = faithfulness_r2(
            explainer.predict_relative(data.relative_values),
            data.blackbox_predictions,
        )
        worst["rel"] = max(worst["rel"], rel)
        worst["r2"] = max(worst["r2"], abs(r2 - 1.0))
        assert rel <= 1e-6
        assert abs(r2 - 1.0) <= 1e-9

    recovers()
    elapsed = time.perf_counter() - start
    ok = worst["rel"] <= 1e-6 and worst["r2"] <= 1e-9 and elapsed < 1.0
    _report(capsys, "exact-recovery", ok,
            f"max factor rel err {worst['rel']:.2e} <= 1e-06, "
            f"max |R2-1| {worst['r2']:.2e} <= 1e-09, {elapsed:.2f}s < 1s")
    assert elapsed < 1.0


def test_task_scale_recovery_against_generator(capsys):
    """Two tasks with known per-attribute scales; grid fit recovers them."""
    start = time.perf_counter()
    factors = [3.0, -4.0, 2.5, 5.0]
    kappa_star = np.asarray([1.0, 1.0, 2.0, -0.5, 1.0])
    pair = task_pair(factors, 20.0, kappa_star, n_rows=600, seed=11,
                     noise=0.02, scales=[1.5, 1.2, 1.8, 1.4])
    best = _fit_grid_best(pair, "task", [0.1, 1.0, 10.0])
    kappa = best.transfer.kappa
    rel_err = np.abs(kappa - kappa_star) / np.abs(kappa_star)
    unit_exact = all(kappa[j] == 1.0 for j in (0, 1, 4))
    w_o = best.original.factors
    w_t = best.derived_target.factors
    level_errors = []
    directions_match = True
    for j, w_star in enumerate(factors):
        want_level, want_dir = relation_of_factors(
            w_star, kappa_star[j] * w_star)
        got_level, got_dir = relation_of_factors(w_o[j], w_t[j])
        level_errors.append(ordinal_error(got_level, want_level))
        directions_match = directions_match and got_dir == want_dir
    elapsed = time.perf_counter() - start
    ok = (rel_err.max() <= 0.05 and unit_exact and max(level_errors) == 0
          and directions_match and elapsed < 10.0)
    _report(capsys, "task-scale-recovery", ok,
            f"max kappa rel err {rel_err.max():.4f} <= 0.05, unit entries "
            f"snapped {unit_exact}, ordinal error {max(level_errors)}, "
            f"{elapsed:.1f}s < 10s")
    assert rel_err.max() <= 0.05
    assert unit_exact
    assert max(level_errors) == 0 and directions_match
    assert elapsed < 10.0


def test_mapping_algebra_and_mse_parity(capsys):
    """Transpose identity to 1e-12; fitted mapping within 5% of single MSE."""
    start = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(77)
    for _ in range(20):
        n_o = int(rng.integers(1, 9))
        n_t = int(rng.integers(1, 9))
        m_chi = rng.normal(size=(n_o, n_t))
        w_o = rng.normal(size=n_o)
        chi_t = rng.normal(size=(5, n_t))
        via_values = map_values(m_chi, chi_t) @ w_o
        via_factors = chi_t @ map_factors(m_chi, w_o)
        worst = max(worst, float(np.max(np.abs(via_values - via_factors))))
    assert worst <= 1e-12

    # recombined views: target attributes mix exactly into the original's
    pair = mapping_pair([[1.0, 0.4, 0.0], [0.0, -0.6, 1.2]], [2.0, -1.5],
                        12.0, n_rows=400, seed=3, noise=0.05)
    single = fit_single(pair.target)
    single_mse = mse(single.predict_relative(pair.target.relative_values),
                     pair.target.blackbox_predictions)
    fit = fit_transfer(pair.original, pair.target, kind="attributes",
                       lam=0.01, seed=0)
    fitted_mse = mse(
        fit.derived_target.predict_relative(pair.target.relative_values),
        pair.target.blackbox_predictions,
    )
    ratio = fitted_mse / single_mse
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and ratio <= 1.05 and elapsed < 10.0
    _report(capsys, "mapping-algebra", ok,
            f"transpose identity max err {worst:.2e} <= 1e-12, "
            f"MSE ratio {ratio:.4f} <= 1.05, {elapsed:.1f}s < 10s")
    assert ratio <= 1.05
    assert elapsed < 10.0


def _random_transfer(rng, n):
    pick = rng.integers(0, 3)
    if pick == 0:
        return Translation(rng.normal(scale=2.0, size=n + 1))
    if pick == 1:
        kappa = rng.uniform(0.3, 2.0, size=n + 1)
        kappa *= rng.choice([-1.0, 1.0], size=n + 1)
        return Scaling(kappa)
    return Mapping(rng.normal(size=(n, n)))


def test_composition_matches_sequential(capsys):
    """One matrix product equals step-by-step application, and associates."""
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst_pair = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        first = to_homogeneous(_random_transfer(rng, n))
        second = to_homogeneous(_random_transfer(rng, n))
        composite = compose(second, first)
        for _ in range(3):
            probe = np.append(rng.normal(size=composite.size - 1), 1.0)
            sequential = second.apply(first.apply(probe))
            worst_pair = max(worst_pair, float(np.max(
                np.abs(sequential - composite.apply(probe)))))
    worst_triple = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 7))
        a, b, c = (to_homogeneous(_random_transfer(rng, n)) for _ in range(3))
        left = compose(compose(c, b), a)
        right = compose(c, compose(b, a))
        worst_triple = max(worst_triple, float(np.max(
            np.abs(left.matrix - right.matrix))))
    elapsed = time.perf_counter() - start
    ok = worst_pair <= 1e-12 and worst_triple <= 1e-12 and elapsed < 1.0
    _report(capsys, "composition", ok,
            f"pair max err {worst_pair:.2e} <= 1e-12, associativity max err "
            f"{worst_triple:.2e} <= 1e-12, {elapsed:.2f}s < 1s")
    assert worst_pair <= 1e-12
    assert worst_triple <= 1e-12
    assert elapsed < 1.0


def test_gradient_matches_central_differences(capsys):
    """Analytic gradient of the smoothed joint loss vs finite differences."""
    start = time.perf_counter()
    pairs = {
        "subspace": task_pair([2.0, -1.5], 8.0, [1.3, 0.7, 1.0], n_rows=60,
                              seed=1, noise=0.05),
        "task": task_pair([1.0, 3.0], -4.0, [0.5, 2.0, 1.0], n_rows=60,
                          seed=2, noise=0.05),
        "attributes": mapping_pair([[1.0, 0.5], [0.3, -1.0]], [2.0, 1.0],
                                   5.0, n_rows=60, seed=3, noise=0.05),
    }
    worst = 0.0
    for kind, pair in pairs.items():
        objective = TransferObjective(pair.original, pair.target, kind=kind,
                                      lam=0.7)
        rng = np.random.default_rng(hash(kind) % 2**32)
        for _ in range(20):
            params = rng.normal(size=objective.n_params)
            analytic = objective.gradient(params)
            fd = np.empty_like(params)
            for i in range(params.size):
                h = 1e-5 * max(1.0, abs(params[i]))
                up = params.copy()
                up[i] += h
                down = params.copy()
                down[i] -= h
                fd[i] = (objective.smoothed(up)
                         - objective.smoothed(down)) / (2.0 * h)
            rel = np.abs(analytic - fd) / np.maximum(1.0, np.abs(fd))
            worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 5.0
    _report(capsys, "gradient-check", ok,
            f"max rel err {worst:.2e} <= 1e-05 over 20 points x 3 kinds, "
            f"{elapsed:.1f}s < 5s")
    assert worst <= 1e-5
    assert elapsed < 5.0


def test_faithfulness_parity_on_air_subsample(capsys):
    """Joint fit gives up at most 0.03 R^2 against per-task fits."""
    start = time.perf_counter()
    pair, _spec = air_quality_pair()
    best = _fit_grid_best(pair, "task", [0.1, 1.0, 10.0])
    scores = evaluate_fit(best, pair, folds=5, seed=0)
    gaps = scores["r2_gap"]
    singles = {d: scores["single"][d]["r2_mean"]
               for d in ("original", "target")}
    transferables = {d: scores["transferable"][d]["r2_mean"]
                     for d in ("original", "target")}
    elapsed = time.perf_counter() - start
    ok = (all(gaps[d] <= 0.03 for d in gaps)
          and all(v >= 0.80 for v in singles.values())
          and all(v >= 0.80 for v in transferables.values())
          and elapsed < 120.0)
    _report(capsys, "faithfulness-parity", ok,
            f"R2 single {singles['original']:.3f}/{singles['target']:.3f}, "
            f"transferable {transferables['original']:.3f}/"
            f"{transferables['target']:.3f} (>= 0.80), gap "
            f"{max(gaps.values()):.4f} <= 0.03, {elapsed:.0f}s < 120s")
    for domain in ("original", "target"):
        assert gaps[domain] <= 0.03
        assert singles[domain] >= 0.80
        assert transferables[domain] >= 0.80
    assert elapsed < 120.0


def test_metric_brute_force_oracles(capsys):
    """Log metrics, ordinal error, and gap binning vs naive recomputation."""
    start = time.perf_counter()
    rng = np.random.default_rng(123)
    eps = 1e-6
    exact = True
    antisymmetric = True
    for i in range(1000):
        p = float(rng.uniform(-20, 20))
        a = p if i % 20 == 0 else float(rng.uniform(-20, 20))
        m = float(rng.uniform(-20, 20))
        e = p if i % 20 == 1 else float(rng.uniform(-20, 20))
        record = ResponseRecord(participant_label=p, aligned_xai_label=a,
                                misaligned_xai_label=m, explainer_label=e)
        exact &= log_unfaithfulness(p, e, eps) == math.log(max(abs(p - e),
                                                               eps))
        exact &= log_woa(record, eps) == (
            math.log(max(abs(p - m), eps)) - math.log(max(abs(p - a), eps)))
        swapped = ResponseRecord(participant_label=p, aligned_xai_label=m,
                                 misaligned_xai_label=a, explainer_label=e)
        antisymmetric &= log_woa(swapped, eps) == -log_woa(record, eps)
        true_factor = float(rng.uniform(0.1, 10) * rng.choice([-1, 1]))
        recalled = true_factor if i % 25 == 0 else float(rng.uniform(-10, 10))
        exact &= log_ape(recalled, true_factor, eps) == math.log(
            max(100.0 * abs(recalled - true_factor) / abs(true_factor), eps))
        lvl_a, lvl_b = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
        exact &= ordinal_error(lvl_a, lvl_b) == abs(lvl_a - lvl_b)

    schema = simple_schema(["a", "b", "c"])
    means = rng.normal(size=3)
    first = LinearExplainer(rng.normal(size=3), 5.0, means, schema)
    second = LinearExplainer(rng.normal(size=3), 7.0, means, schema)
    instances = rng.normal(size=(1000, 3)) + means
    gap = xai_domain_gap(first, second, instances)
    naive_gaps = []
    for row in instances:
        y1 = sum(w * (x - mu) for w, x, mu
                 in zip(first.factors, row, means)) + first.centroid_label
        y2 = sum(w * (x - mu) for w, x, mu
                 in zip(second.factors, row, means)) + second.centroid_label
        naive_gaps.append(abs(y2 - y1))
    naive_median = float(np.median(naive_gaps))
    naive_bins = ["close" if g >= naive_median else "far" for g in naive_gaps]
    bins_match = gap["bins"] == naive_bins
    elapsed = time.perf_counter() - start
    ok = exact and antisymmetric and bins_match and elapsed < 1.0
    _report(capsys, "metric-oracles", ok,
            f"1000 records exact {exact}, antisymmetry {antisymmetric}, "
            f"gap bins match {bins_match}, {elapsed:.2f}s < 1s")
    assert exact
    assert antisymmetric
    assert bins_match
    assert abs(gap["median"] - naive_median) <= 1e-12
    assert elapsed < 1.0


def test_scale_display_semantics(capsys):
    """Worked display pair, the reversal label, and parse round-trips."""
    fifth = format_scale(0.2)
    five = format_scale(5.0)
    opp = format_scale(-1.0 / 5.1)
    pinned = (fifth == "5× Smaller" and five == "5× Bigger"
              and opp == "5.1× Smaller (Opp)")
    worst = 0.0
    stable = True
    for kappa in (0.0, 0.0003, 0.02, 0.2, 0.5, 0.9, 0.96, 1.0, 1.04, 1.3,
                  2.0, 5.0, 17.0, 420.0, -0.2, -0.97, -1.0, -3.3, -512.0):
        shown = format_scale(kappa)
        parsed = parse_scale(shown)
        stable &= format_scale(parsed) == shown
        if "Similar" in shown:
            worst = max(worst, abs(parsed - kappa) / 0.05)
        elif kappa != 0.0:
            # two significant digits bound the rounding at about 5 percent
            worst = max(worst, abs(parsed - kappa) / abs(kappa) / 0.06)
        else:
            stable &= parsed == 0.0
    ok = pinned and stable and worst <= 1.0
    _report(capsys, "display-semantics", ok,
            f"0.2 -> {fifth!r}, 5 -> {five!r}, reversal -> {opp!r}, "
            f"round-trip within printed precision (worst {worst:.2f} of "
            "bound)")
    assert pinned
    assert stable
    assert worst <= 1.0
