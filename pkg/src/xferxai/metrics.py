"""Faithfulness metrics and calculators for human-response measures.

The log metrics clamp their argument at epsilon (default 1e-6) before
taking the natural log, since an exact match would otherwise send the
value to negative infinity; callers that aggregate should count clamps
via the batch helpers.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataFormatError,
    DimensionMismatchError,
    UndefinedValueError,
)

DEFAULT_EPSILON = 1e-6
LEVEL_RANGE = (-2, 2)


def faithfulness_r2(xai_labels, ai_labels):
    """R^2 of explainer outputs against system outputs, 1 - SSres/SStot."""
    xai = np.asarray(xai_labels, dtype=float)
    ai = np.asarray(ai_labels, dtype=float)
    if xai.shape != ai.shape or xai.ndim != 1:
        raise DimensionMismatchError(
            "label vectors must have the same length",
            expected=ai.shape, got=xai.shape,
        )
    if xai.shape[0] == 0:
        raise DataFormatError("empty label vectors")
    ss_tot = float(np.sum((ai - ai.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedValueError("ai_labels have zero variance")
    ss_res = float(np.sum((xai - ai) ** 2))
    return 1.0 - ss_res / ss_tot


def mse(xai_labels, ai_labels):
    xai = np.asarray(xai_labels, dtype=float)
    ai = np.asarray(ai_labels, dtype=float)
    if xai.shape != ai.shape:
        raise DimensionMismatchError(
            "label vectors must have the same length",
            expected=ai.shape, got=xai.shape,
        )
    return float(np.mean((xai - ai) ** 2))


def _clamped_log(value, epsilon):
    if epsilon <= 0:
        raise DataFormatError("epsilon must be > 0")
    return math.log(max(value, epsilon))


def log_unfaithfulness(participant, explainer, epsilon=DEFAULT_EPSILON):
    """ln |participant - explainer|, clamped at epsilon."""
    return _clamped_log(abs(participant - explainer), epsilon)


@dataclass(frozen=True)
class ResponseRecord:
    """One forward-simulation response and the labels it is judged against."""

    participant_label: float
    aligned_xai_label: float
    misaligned_xai_label: float
    explainer_label: float = math.nan
    system_label: float = math.nan


def log_woa(record, epsilon=DEFAULT_EPSILON):
    """Log weight-of-advice ratio, positive when the response sits closer
    to the aligned domain's label: ln|r - mis| - ln|r - ali|."""
    r = record.participant_label
    far = abs(r - record.misaligned_xai_label)
    near = abs(r - record.aligned_xai_label)
    return _clamped_log(far, epsilon) - _clamped_log(near, epsilon)


def log_ape(recalled, true_factor, epsilon=DEFAULT_EPSILON):
    """ln of the absolute percentage error of a recalled factor."""
    if true_factor == 0:
        raise UndefinedValueError("APE is undefined for a zero true factor")
    ape = 100.0 * abs(recalled - true_factor) / abs(true_factor)
    return _clamped_log(ape, epsilon)


def relation_of_factors(w_o, w_t, similar_band=0.1):
    """Five-level magnitude relation and direction of a factor pair.

    Level +2 when the target factor is more than 1.5x the original in
    magnitude, -2 when below 1/1.5x, 0 inside the similar band around
    1x, and +1/-1 between. Direction is -1 when the factors point in
    opposite directions; a zero target factor counts as not opposed.
    """
    if w_o == 0:
        raise UndefinedValueError("relation is unidentifiable for w_o = 0")
    if similar_band <= 0 or 1.0 + similar_band >= 1.5:
        raise DataFormatError("similar_band must be in (0, 0.5)")
    ratio = abs(w_t / w_o)
    hi = 1.0 + similar_band
    if ratio > 1.5:
        level = 2
    elif ratio > hi:
        level = 1
    elif ratio >= 1.0 / hi:
        level = 0
    elif ratio >= 1.0 / 1.5:
        level = -1
    else:
        level = -2
    direction = -1 if w_t * w_o < 0 else 1
    return level, direction


def ordinal_error(response_level, true_level, level_range=LEVEL_RANGE):
    """Distance in levels, counting consecutive levels as 1 apart."""
    lo, hi = level_range
    for name, value in (("response", response_level), ("truth", true_level)):
        if not (lo <= value <= hi):
            raise DataFormatError(
                f"{name} level {value} outside the declared range [{lo}, {hi}]"
            )
    return abs(int(response_level) - int(true_level))


def correlation_levels(m_chi, strong_threshold=0.8, weak_threshold=0.1):
    """Bucket each mapping entry into five ordinal correlation levels."""
    if not (0 < weak_threshold < strong_threshold):
        raise DataFormatError("need 0 < weak_threshold < strong_threshold")
    m = np.asarray(m_chi, dtype=float)
    levels = np.zeros(m.shape, dtype=int)
    levels[m >= strong_threshold] = 2
    levels[(m >= weak_threshold) & (m < strong_threshold)] = 1
    levels[m <= -strong_threshold] = -2
    levels[(m <= -weak_threshold) & (m > -strong_threshold)] = -1
    return levels


def xai_domain_gap(explainer_original, explainer_target, instances):
    """Per-instance |target estimate - original estimate|, binarized at the
    median: close where the gap is at least the median, far below it."""
    instances = np.atleast_2d(np.asarray(instances, dtype=float))
    if instances.shape[0] == 0:
        raise DataFormatError("empty instance set")
    y_o = explainer_original.predict_raw(instances)
    y_t = explainer_target.predict_raw(instances)
    gaps = np.abs(y_t - y_o)
    median = float(np.median(gaps))
    bins = ["close" if g >= median else "far" for g in gaps]
    return {"gaps": gaps, "median": median, "bins": bins}


@dataclass
class MetricsReport:
    """Aggregate of per-record metrics plus fit-quality numbers."""

    r2: float = math.nan
    mse: float = math.nan
    per_record: dict = field(default_factory=dict)
    epsilon_clamp_count: int = 0
    epsilon: float = DEFAULT_EPSILON

    def to_doc(self):
        doc = {"format_version": 1}
        # fit-quality numbers are absent for pure response-record reports
        if math.isfinite(self.r2):
            doc["r2"] = self.r2
        if math.isfinite(self.mse):
            doc["mse"] = self.mse
        doc["epsilon"] = self.epsilon
        doc["epsilon_clamp_count"] = self.epsilon_clamp_count
        doc["per_record"] = {
            key: [float(v) for v in values]
            for key, values in self.per_record.items()
        }
        return doc


def response_metrics(records, epsilon=DEFAULT_EPSILON):
    """Per-record log metrics over ResponseRecords, with clamp counting."""
    unf, woa = [], []
    clamps = 0
    for rec in records:
        diff = abs(rec.participant_label - rec.explainer_label)
        if diff < epsilon:
            clamps += 1
        unf.append(log_unfaithfulness(
            rec.participant_label, rec.explainer_label, epsilon))
        near = abs(rec.participant_label - rec.aligned_xai_label)
        far = abs(rec.participant_label - rec.misaligned_xai_label)
        clamps += int(near < epsilon) + int(far < epsilon)
        woa.append(log_woa(rec, epsilon))
    report = MetricsReport(
        per_record={"log_unfaithfulness": unf, "log_woa": woa},
        epsilon_clamp_count=clamps,
        epsilon=epsilon,
    )
    return report


def kfold_indices(n, folds=5, seed=0):
    """Seeded shuffle split into contiguous folds; returns (train, test) pairs."""
    if folds < 2 or folds > n:
        raise DataFormatError(f"folds must be in [2, {n}], got {folds}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    bounds = np.linspace(0, n, folds + 1).astype(int)
    out = []
    for k in range(folds):
        test = order[bounds[k]:bounds[k + 1]]
        train = np.concatenate([order[:bounds[k]], order[bounds[k + 1]:]])
        out.append((np.sort(train), np.sort(test)))
    return out


def _score(explainer, dataset, indices):
    chi = dataset.relative_values[indices]
    y = dataset.blackbox_predictions[indices]
    est = chi @ explainer.factors + explainer.centroid_label
    return faithfulness_r2(est, y), mse(est, y)


def evaluate_fit(fit, pair, folds=5, seed=0):
    """K-fold faithfulness of single vs transferable explainers.

    Surrogates are refit on each fold's training rows with the fit's
    own configuration; the system predictions are fixed inputs. Scores
    are R^2 and MSE of explainer vs system outputs on the held-out
    rows, reported per domain as mean and standard deviation, plus the
    absolute R^2 gap between single and transferable explainers.
    """
    from .trainer import fit_single, fit_transfer

    scores = {
        "single": {"original": [], "target": []},
        "transferable": {"original": [], "target": []},
    }
    # task/attribute pairs share rows, so one fold split serves both
    # domains; subspace domains get independent splits of the same seed
    shared_rows = pair.kind in ("task", "attributes")
    folds_o = kfold_indices(pair.original.n_rows, folds, seed)
    folds_t = folds_o if shared_rows and pair.target.n_rows == pair.original.n_rows \
        else kfold_indices(pair.target.n_rows, folds, seed)
    options = dict(fit.options)
    for (train_o, test_o), (train_t, test_t) in zip(folds_o, folds_t):
        sub_o = pair.original.subset(train_o)
        sub_t = pair.target.subset(train_t)
        single_o = fit_single(sub_o)
        single_t = fit_single(sub_t)
        refit = fit_transfer(
            sub_o, sub_t, kind=fit.kind, lam=fit.lam,
            seed=fit.convergence.get("seed", seed),
            penalize_intercept=options.get("penalize_intercept", True),
            init_std=options.get("init_std", 0.1),
            epsilon=options.get("epsilon", 1e-4),
            max_iter=options.get("max_iter", 1000),
            grad_tolerance=options.get("grad_tolerance", 1e-8),
        )
        if fit.thresholds is not None:
            from .trainer import snap_sparse

            refit = snap_sparse(refit, fit.thresholds)
        scores["single"]["original"].append(_score(single_o, pair.original, test_o))
        scores["single"]["target"].append(_score(single_t, pair.target, test_t))
        scores["transferable"]["original"].append(
            _score(refit.original, pair.original, test_o))
        scores["transferable"]["target"].append(
            _score(refit.derived_target, pair.target, test_t))

    def summarize(pairs):
        r2s = np.array([p[0] for p in pairs])
        mses = np.array([p[1] for p in pairs])
        return {
            "r2_mean": float(r2s.mean()), "r2_std": float(r2s.std()),
            "mse_mean": float(mses.mean()), "mse_std": float(mses.std()),
            "r2_folds": [float(v) for v in r2s],
        }

    doc = {
        "format_version": 1,
        "folds": int(folds),
        "seed": int(seed),
        "kind": fit.kind,
        "lambda": fit.lam,
    }
    for model in ("single", "transferable"):
        doc[model] = {domain: summarize(scores[model][domain])
                      for domain in ("original", "target")}
    doc["r2_gap"] = {
        domain: abs(doc["single"][domain]["r2_mean"]
                    - doc["transferable"][domain]["r2_mean"])
        for domain in ("original", "target")
    }
    return doc
