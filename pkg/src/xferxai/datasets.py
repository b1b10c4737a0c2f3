"""Deterministic synthetic data generators.

These are the oracles behind the test suite: each generator constructs
data from known factors, so recovering those factors is checkable. The
air-quality generator mimics the marginal shapes of an urban pollution
table (SO2, NO2, CO, O3, wind speed and two particulate labels whose
linear parts are related by a per-factor scale) for desk-scale parity
runs against the built-in reference network.
"""

import numpy as np

from .blackbox import train_mlp
from .preprocess import CenteredDataset, DomainPair, compute_means, center
from .schema import simple_schema

AIR_ATTRIBUTES = ("SO2", "NO2", "CO", "O3", "WSPM")
AIR_TASKS = ("pm25", "pm10")


def centered(raw, predictions, schema=None, domain="Original", labels=None):
    """CenteredDataset from raw values, centering on the data's own means."""
    raw = np.asarray(raw, dtype=float)
    schema = schema or simple_schema([f"a{i}" for i in range(raw.shape[1])])
    means = compute_means(raw)
    return CenteredDataset(
        relative_values=center(raw, means),
        attribute_means=means,
        blackbox_predictions=np.asarray(predictions, dtype=float),
        schema=schema,
        domain_id=[domain] * raw.shape[0],
        raw_labels=labels,
    )


def linear_data(factors, centroid, n_rows=200, seed=0, noise=0.0, means=None):
    """One domain whose predictions are exactly w.chi + centroid (+ noise)."""
    factors = np.asarray(factors, dtype=float)
    n = factors.shape[0]
    rng = np.random.default_rng(seed)
    offset = np.zeros(n) if means is None else np.asarray(means, dtype=float)
    raw = rng.normal(size=(n_rows, n)) * rng.uniform(0.5, 2.0, size=n) + offset
    chi = center(raw, compute_means(raw))
    predictions = chi @ factors + centroid
    if noise:
        predictions = predictions + rng.normal(scale=noise, size=n_rows)
    return centered(raw, predictions)


def task_pair(factors, centroid, kappa, n_rows=500, seed=0, noise=0.0,
              scales=None):
    """Two tasks over shared instances; target factors are kappa * original.

    ``kappa`` has length n + 1, the last entry scaling the centroid.
    ``scales`` fixes the per-column spread; default draws it uniformly
    from [0.5, 2).
    """
    factors = np.asarray(factors, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    n = factors.shape[0]
    rng = np.random.default_rng(seed)
    if scales is None:
        scales = rng.uniform(0.5, 2.0, size=n)
    raw = rng.normal(size=(n_rows, n)) * np.asarray(scales, dtype=float)
    schema = simple_schema([f"a{i}" for i in range(n)])
    means = compute_means(raw)
    chi = center(raw, means)
    y_o = chi @ factors + centroid
    y_t = chi @ (kappa[:n] * factors) + kappa[n] * centroid
    if noise:
        y_o = y_o + rng.normal(scale=noise, size=n_rows)
        y_t = y_t + rng.normal(scale=noise, size=n_rows)
    common = dict(relative_values=chi, attribute_means=means, schema=schema)
    return DomainPair(
        original=CenteredDataset(blackbox_predictions=y_o,
                                 domain_id=["Original"] * n_rows, **common),
        target=CenteredDataset(blackbox_predictions=y_t,
                               domain_id=["Target"] * n_rows, **common),
        kind="task",
    )


def subspace_pair(factors, centroid, delta, n_rows=500, seed=0, noise=0.0):
    """Two subspaces; target factors are original + delta (length n + 1)."""
    factors = np.asarray(factors, dtype=float)
    delta = np.asarray(delta, dtype=float)
    n = factors.shape[0]
    rng = np.random.default_rng(seed)
    schema = simple_schema([f"a{i}" for i in range(n)])

    def one(w, c, tag, shift):
        raw = rng.normal(size=(n_rows, n)) + shift
        means = compute_means(raw)
        chi = center(raw, means)
        y = chi @ w + c
        if noise:
            y = y + rng.normal(scale=noise, size=n_rows)
        return CenteredDataset(
            relative_values=chi, attribute_means=means,
            blackbox_predictions=y, schema=schema,
            domain_id=[tag] * n_rows,
        )

    original = one(factors, centroid, "Original", 0.0)
    target = one(factors + delta[:n], centroid + delta[n], "Target", 2.0)
    return DomainPair(original=original, target=target, kind="subspace")


def mapping_pair(m_star, factors_original, centroid, n_rows=500, seed=0,
                 noise=0.0):
    """Paired views where chi_original = m_star . chi_target exactly.

    Predictions are linear in the original view (hence also in the
    target view through the recombination), shared by both datasets.
    """
    m_star = np.asarray(m_star, dtype=float)
    w_o = np.asarray(factors_original, dtype=float)
    n_o, n_t = m_star.shape
    rng = np.random.default_rng(seed)
    raw_t = rng.normal(size=(n_rows, n_t)) * rng.uniform(0.5, 2.0, size=n_t) \
        + rng.normal(size=n_t)
    means_t = compute_means(raw_t)
    chi_t = center(raw_t, means_t)
    chi_o = chi_t @ m_star.T
    means_o = rng.normal(size=n_o)  # any means; centering recovers chi_o
    predictions = chi_o @ w_o + centroid
    if noise:
        predictions = predictions + rng.normal(scale=noise, size=n_rows)
    schema_o = simple_schema([f"o{i}" for i in range(n_o)])
    schema_t = simple_schema([f"t{i}" for i in range(n_t)])
    return DomainPair(
        original=CenteredDataset(
            relative_values=chi_o, attribute_means=means_o,
            blackbox_predictions=predictions, schema=schema_o,
            domain_id=["Original"] * n_rows),
        target=CenteredDataset(
            relative_values=chi_t, attribute_means=means_t,
            blackbox_predictions=predictions, schema=schema_t,
            domain_id=["Target"] * n_rows),
        kind="attributes",
    )


# Generating coefficients of the air table. The two particulate labels
# share the same attributes; the pm10 linear part scales the pm25 one
# per factor, so a task transfer is the right shape for the pair.
AIR_LINEAR_PM25 = np.array([1.1, 0.62, 0.021, -0.23, -9.5])
AIR_KAPPA = np.array([1.35, 1.2, 1.0, 1.0, 1.0, 1.15])
AIR_BIAS_PM25 = 30.0


def air_quality_table(n_rows=20000, seed=42):
    """Raw attribute matrix and the two labels (pm25, pm10).

    A shared pollution latent correlates the gas columns; the labels
    are linear in the attributes with a mild saturating nonlinearity
    and observation noise on top, so a network fits them well but not
    perfectly and a linear surrogate of the network stays faithful.
    """
    rng = np.random.default_rng(seed)
    latent = rng.normal(size=n_rows)
    so2 = np.exp(2.3 + 0.55 * latent + 0.55 * rng.normal(size=n_rows))
    no2 = np.exp(3.7 + 0.40 * latent + 0.35 * rng.normal(size=n_rows))
    co = np.exp(6.8 + 0.60 * latent + 0.45 * rng.normal(size=n_rows))
    o3 = rng.gamma(shape=2.2, scale=26.0, size=n_rows)
    wspm = rng.gamma(shape=2.0, scale=0.9, size=n_rows)
    raw = np.column_stack([so2, no2, co, o3, wspm])

    w = AIR_LINEAR_PM25
    kappa = AIR_KAPPA
    linear_pm25 = raw @ w + AIR_BIAS_PM25
    linear_pm10 = raw @ (kappa[:5] * w) + kappa[5] * AIR_BIAS_PM25
    # mild shared nonlinearity, small against the linear spread
    bend = 12.0 * np.tanh((raw[:, 2] - co.mean()) / (2.0 * co.std()))
    pm25 = linear_pm25 + bend + rng.normal(scale=8.0, size=n_rows)
    pm10 = linear_pm10 + 1.2 * bend + rng.normal(scale=10.0, size=n_rows)
    return raw, np.column_stack([pm25, pm10])


def air_quality_pair(n_rows=20000, seed=42, hidden=14, epochs=900):
    """Task-kind pair over the air table, predictions from the reference net.

    Returns (pair, predictor_spec). The network is trained once on both
    labels; the surrogates are fitted to its predictions, never to the
    raw labels.
    """
    raw, labels = air_quality_table(n_rows=n_rows, seed=seed)
    spec = train_mlp(raw, labels, hidden=hidden, epochs=epochs, step=0.5,
                     seed=seed)
    from .blackbox import predict

    preds = predict(spec, raw)
    schema = simple_schema(list(AIR_ATTRIBUTES))
    means = compute_means(raw)
    chi = center(raw, means)
    common = dict(relative_values=chi, attribute_means=means, schema=schema)
    pair = DomainPair(
        original=CenteredDataset(blackbox_predictions=preds[:, 0],
                                 domain_id=[AIR_TASKS[0]] * n_rows, **common),
        target=CenteredDataset(blackbox_predictions=preds[:, 1],
                               domain_id=[AIR_TASKS[1]] * n_rows, **common),
        kind="task",
    )
    return pair, spec
