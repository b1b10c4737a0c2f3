"""Joint training of explainers and transfers.

The objective is L_O + L_T + lambda * L_s: faithfulness of the original
explainer, faithfulness of the transferred explainer, and an L1 pull of
the transfer parameters toward identity. The optimizer sees a
pseudo-Huber smoothing of the L1 terms (sqrt(x^2 + eps^2) - eps); every
reported loss uses the exact L1. Parameters of the fit are packed as

    [w_O (n_O entries), centroid_O, theta]

where theta is the transfer parameterization: delta (n+1) for subspace
translation, kappa (n+1) for task scaling, or M_chi flattened row-major
(n_O x n_T) for attribute mapping. Mapping ties centroid_T = centroid_O
(the relative-value intercepts cancel); translation and scaling carry
the centroid in their last entry.
"""

import warnings

import numpy as np

from .algebra import (
    LinearExplainer,
    Mapping,
    MappingPartition,
    Scaling,
    Translation,
    apply_affine,
)
from .errors import (
    DataFormatError,
    DimensionMismatchError,
    NonFiniteError,
    XferXaiError,
)
from .optimize import minimize
from .schema import AttributeSchema

KINDS = ("subspace", "task", "attributes")

DEFAULT_SCALE_EPS = 0.05
DEFAULT_MAP_EPS = 0.02
SMOOTHING_EPSILON = 1e-4
UNIDENTIFIABLE_TOLERANCE = 1e-6


class RankDeficiencyWarning(UserWarning):
    """Design matrix is rank deficient; the minimum-norm solution is used."""


def fit_single(data):
    """Least-squares explainer for one domain: minimize MSE of w.chi + c vs y_hat."""
    chi = data.relative_values
    y = data.blackbox_predictions
    m, n = chi.shape
    if m < n + 1:
        raise DataFormatError(f"need at least {n + 1} rows, got {m}")
    if not (np.all(np.isfinite(chi)) and np.all(np.isfinite(y))):
        raise NonFiniteError("data contains non-finite entries")
    design = np.column_stack([chi, np.ones(m)])
    solution, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < n + 1:
        warnings.warn(
            f"design matrix rank {rank} < {n + 1}; minimum-norm solution",
            RankDeficiencyWarning,
        )
    return LinearExplainer(
        factors=solution[:n],
        centroid_label=solution[n],
        attribute_means=data.attribute_means,
        schema=data.schema,
    )


def _identity_target(partition):
    """Matrix the mapping is pulled toward: 1 on aligned shared pairs, else 0."""
    target = np.zeros((partition.n_original, partition.n_target))
    for i, j in zip(partition.shared_original, partition.shared_target):
        target[i, j] = 1.0
    return target


def sparsity_loss(transfer, include_intercept=True):
    """Exact L1 distance of the transfer from identity.

    Translation: |delta| summed. Scaling: |kappa - 1| summed. Mapping:
    the four-block sum |M_shared - I| + |M_unshared| + both cross
    blocks, which equals an entrywise |M - T| with T the aligned
    identity pattern.
    """
    if isinstance(transfer, Translation):
        values = transfer.delta if include_intercept else transfer.delta[:-1]
        return float(np.sum(np.abs(values)))
    if isinstance(transfer, Scaling):
        values = transfer.kappa if include_intercept else transfer.kappa[:-1]
        return float(np.sum(np.abs(values - 1.0)))
    if isinstance(transfer, Mapping):
        target = _identity_target(transfer.partition)
        return float(np.sum(np.abs(transfer.m_chi - target)))
    raise DataFormatError(f"unknown transfer type {type(transfer).__name__}")


def _smooth_abs(x, eps):
    return np.sqrt(x * x + eps * eps) - eps


def _smooth_abs_grad(x, eps):
    return x / np.sqrt(x * x + eps * eps)


class TransferObjective:
    """Joint loss over packed parameters, exact and smoothed forms."""

    def __init__(self, data_original, data_target, kind, lam,
                 partition=None, penalize_intercept=True,
                 epsilon=SMOOTHING_EPSILON):
        if kind not in KINDS:
            raise DataFormatError(f"unknown transfer kind {kind!r}")
        if lam < 0:
            raise DataFormatError(f"lambda must be >= 0, got {lam}")
        self.data_o = data_original
        self.data_t = data_target
        self.kind = kind
        self.lam = float(lam)
        self.penalize_intercept = bool(penalize_intercept)
        self.epsilon = float(epsilon)
        self.n_o = data_original.n_attributes
        self.n_t = data_target.n_attributes
        if kind in ("subspace", "task"):
            if data_original.schema != data_target.schema:
                raise DimensionMismatchError(
                    f"{kind} transfer needs the same schema in both domains"
                )
            self.n_theta = self.n_o + 1
            self.partition = None
        else:
            self.partition = partition or MappingPartition.from_schemas(
                data_original.schema, data_target.schema
            )
            self._target_pattern = _identity_target(self.partition)
            self.n_theta = self.n_o * self.n_t
        self.n_params = self.n_o + 1 + self.n_theta

    def _check(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape[0] != self.n_params:
            raise DimensionMismatchError(
                "parameter vector length", expected=self.n_params,
                got=params.shape[0],
            )
        if not np.all(np.isfinite(params)):
            index = int(np.flatnonzero(~np.isfinite(params))[0])
            raise NonFiniteError(f"non-finite parameter at index {index}")
        return params

    def unpack(self, params):
        params = self._check(params)
        n = self.n_o
        return params[:n], params[n], params[n + 1:]

    def transfer_of(self, params):
        _, _, theta = self.unpack(params)
        if self.kind == "subspace":
            return Translation(theta)
        if self.kind == "task":
            return Scaling(theta)
        return Mapping(theta.reshape(self.n_o, self.n_t), partition=self.partition)

    def _derived(self, w_o, c_o, theta):
        n = self.n_o
        if self.kind == "subspace":
            return w_o + theta[:n], c_o + theta[n]
        if self.kind == "task":
            return theta[:n] * w_o, theta[n] * c_o
        m = theta.reshape(self.n_o, self.n_t)
        return m.T @ w_o, c_o

    def _halves(self, params):
        w_o, c_o, theta = self.unpack(params)
        w_t, c_t = self._derived(w_o, c_o, theta)
        r_o = self.data_o.relative_values @ w_o + c_o - self.data_o.blackbox_predictions
        r_t = self.data_t.relative_values @ w_t + c_t - self.data_t.blackbox_predictions
        l_o = float(r_o @ r_o) / r_o.shape[0]
        l_t = float(r_t @ r_t) / r_t.shape[0]
        return w_o, c_o, theta, r_o, r_t, l_o, l_t

    def _sparsity_residual(self, theta):
        """Per-entry distance from the identity, before taking |.| or smoothing."""
        n = self.n_o
        if self.kind == "subspace":
            values = theta if self.penalize_intercept else theta[:n]
            return values
        if self.kind == "task":
            values = theta - 1.0
            return values if self.penalize_intercept else values[:n]
        return theta - self._target_pattern.ravel()

    def exact_breakdown(self, params):
        """(l_original, l_target, l_sparsity) with the exact L1 term."""
        _, _, theta, _, _, l_o, l_t = self._halves(params)
        l_s = float(np.sum(np.abs(self._sparsity_residual(theta))))
        return l_o, l_t, l_s

    def exact(self, params):
        l_o, l_t, l_s = self.exact_breakdown(params)
        return l_o + l_t + self.lam * l_s

    def smoothed(self, params):
        """Objective the optimizer descends: exact data terms, smoothed L1."""
        _, _, theta, _, _, l_o, l_t = self._halves(params)
        l_s = float(np.sum(_smooth_abs(self._sparsity_residual(theta), self.epsilon)))
        value = l_o + l_t + self.lam * l_s
        if not np.isfinite(value):
            raise NonFiniteError("loss is non-finite at these parameters")
        return value

    def gradient(self, params):
        """Analytic gradient of the smoothed objective."""
        w_o, c_o, theta, r_o, r_t, _, _ = self._halves(params)
        n = self.n_o
        m_o = r_o.shape[0]
        m_t = r_t.shape[0]
        g_w_o = (2.0 / m_o) * (self.data_o.relative_values.T @ r_o)
        g_c_o = (2.0 / m_o) * float(r_o.sum())
        # target-half gradient w.r.t. the derived (w_T, c_T)
        g_w_t = (2.0 / m_t) * (self.data_t.relative_values.T @ r_t)
        g_c_t = (2.0 / m_t) * float(r_t.sum())

        grad = np.zeros(self.n_params)
        if self.kind == "subspace":
            grad[:n] = g_w_o + g_w_t
            grad[n] = g_c_o + g_c_t
            grad[n + 1:n + 1 + n] = g_w_t
            grad[n + 1 + n] = g_c_t
        elif self.kind == "task":
            kappa = theta
            grad[:n] = g_w_o + kappa[:n] * g_w_t
            grad[n] = g_c_o + kappa[n] * g_c_t
            grad[n + 1:n + 1 + n] = w_o * g_w_t
            grad[n + 1 + n] = c_o * g_c_t
        else:
            m = theta.reshape(self.n_o, self.n_t)
            grad[:n] = g_w_o + m @ g_w_t
            grad[n] = g_c_o + g_c_t
            grad[n + 1:] = np.outer(w_o, g_w_t).ravel()

        if self.lam > 0:
            residual = self._sparsity_residual(theta)
            s_grad = self.lam * _smooth_abs_grad(residual, self.epsilon)
            if self.kind in ("subspace", "task") and not self.penalize_intercept:
                grad[n + 1:n + 1 + n] += s_grad
            else:
                grad[n + 1:] += s_grad
        return grad

    def initial_params(self, seed, std=0.1):
        rng = np.random.default_rng(seed)
        return rng.normal(loc=0.0, scale=std, size=self.n_params)


def loss_total(params, data_original, data_target, kind, lam,
               partition=None, penalize_intercept=True):
    """L_O + L_T + lambda * L_s at the given packed parameters (exact L1)."""
    objective = TransferObjective(
        data_original, data_target, kind, lam,
        partition=partition, penalize_intercept=penalize_intercept,
    )
    return objective.exact(params)


def gradient(params, data_original, data_target, kind, lam,
             partition=None, penalize_intercept=True,
             epsilon=SMOOTHING_EPSILON):
    """Analytic gradient of the smoothed objective at the packed parameters."""
    objective = TransferObjective(
        data_original, data_target, kind, lam,
        partition=partition, penalize_intercept=penalize_intercept,
        epsilon=epsilon,
    )
    return objective.gradient(params)


class TransferFit:
    """A trained transfer: original explainer, transfer, derived target."""

    def __init__(self, kind, lam, original, transfer, derived_target,
                 loss_breakdown, convergence, options,
                 unidentifiable_scales=(), thresholds=None,
                 data_original=None, data_target=None):
        self.kind = kind
        self.lam = float(lam)
        self.original = original
        self.transfer = transfer
        self.derived_target = derived_target
        self.loss_breakdown = dict(loss_breakdown)
        self.convergence = dict(convergence)
        self.options = dict(options)
        self.unidentifiable_scales = list(unidentifiable_scales)
        self.thresholds = dict(thresholds) if thresholds else None
        # non-serialized; lets snap_sparse recompute the data halves
        self._data_original = data_original
        self._data_target = data_target

    @property
    def total_loss(self):
        b = self.loss_breakdown
        return b["l_original"] + b["l_target"] + self.lam * b["l_sparsity"]

    def to_doc(self):
        doc = {
            "format_version": 1,
            "kind": self.kind,
            "lambda": self.lam,
            "original": self.original.to_doc(),
            "derived_target": self.derived_target.to_doc(),
            "transfer": self.transfer.to_doc(),
            "loss_breakdown": {
                "l_original": self.loss_breakdown["l_original"],
                "l_target": self.loss_breakdown["l_target"],
                "l_sparsity": self.loss_breakdown["l_sparsity"],
            },
            "convergence": self.convergence,
            "options": self.options,
            "unidentifiable_scales": self.unidentifiable_scales,
        }
        if self.thresholds is not None:
            doc["thresholds"] = self.thresholds
        return doc

    @classmethod
    def from_doc(cls, doc):
        from .algebra import AffineTransfer

        try:
            return cls(
                kind=doc["kind"],
                lam=doc["lambda"],
                original=LinearExplainer.from_doc(doc["original"]),
                transfer=AffineTransfer.from_doc(doc["transfer"]),
                derived_target=LinearExplainer.from_doc(doc["derived_target"]),
                loss_breakdown=doc["loss_breakdown"],
                convergence=doc["convergence"],
                options=doc.get("options", {}),
                unidentifiable_scales=doc.get("unidentifiable_scales", []),
                thresholds=doc.get("thresholds"),
            )
        except KeyError as exc:
            raise DataFormatError(f"fit document missing field {exc}") from exc


def fit_transfer(data_original, data_target, kind, lam, seed,
                 penalize_intercept=True, init_std=0.1,
                 epsilon=SMOOTHING_EPSILON, max_iter=1000,
                 grad_tolerance=1e-8, partition=None):
    """Jointly fit (w_O, transfer) by BFGS on the smoothed objective.

    Parameters are initialized from seeded N(0, init_std^2) draws. The
    returned fit is unsnapped; apply snap_sparse for display-level
    sparsity. Failure to reach the gradient tolerance is recorded in
    the convergence report, not raised.
    """
    objective = TransferObjective(
        data_original, data_target, kind, lam,
        partition=partition, penalize_intercept=penalize_intercept,
        epsilon=epsilon,
    )
    x0 = objective.initial_params(seed, std=init_std)
    result = minimize(
        objective.smoothed, x0, gradient=objective.gradient,
        max_iter=max_iter, grad_tolerance=grad_tolerance, seed=seed,
    )
    w_o, c_o, _ = objective.unpack(result.solution)
    transfer = objective.transfer_of(result.solution)
    original = LinearExplainer(
        factors=w_o,
        centroid_label=c_o,
        attribute_means=data_original.attribute_means,
        schema=data_original.schema,
    )
    derived_target = apply_affine(
        transfer, original,
        target_schema=data_target.schema,
        target_means=data_target.attribute_means,
    )
    l_o, l_t, l_s = objective.exact_breakdown(result.solution)
    unidentifiable = []
    if kind == "task":
        # kappa_j moves the loss only through w_O[j] * chi_j; when that
        # product is negligible the fitted scale is the penalty's choice,
        # not the data's, and must not be read as meaning
        spread = data_target.relative_values.std(axis=0)
        contribution = np.abs(w_o) * spread
        floor = UNIDENTIFIABLE_TOLERANCE * max(1.0, float(contribution.max()))
        unidentifiable = [int(i) for i in np.flatnonzero(contribution <= floor)]
    return TransferFit(
        kind=kind,
        lam=lam,
        original=original,
        transfer=transfer,
        derived_target=derived_target,
        loss_breakdown={"l_original": l_o, "l_target": l_t, "l_sparsity": l_s},
        convergence={
            "iterations": result.iterations,
            "final_gradient_norm": result.final_gradient_norm,
            "seed": int(seed),
            "converged": result.converged,
            "line_search_failed": result.line_search_failed,
            "message": result.message,
        },
        options={
            "penalize_intercept": penalize_intercept,
            "init_std": init_std,
            "epsilon": epsilon,
            "max_iter": max_iter,
            "grad_tolerance": grad_tolerance,
        },
        unidentifiable_scales=unidentifiable,
        data_original=data_original,
        data_target=data_target,
    )


def default_thresholds(fit):
    """delta_eps scales with the fitted factors; the others are fixed bands."""
    w = np.abs(fit.original.factors)
    median = float(np.median(w)) if w.size else 0.0
    return {
        "delta_eps": 0.01 * median,
        "scale_eps": DEFAULT_SCALE_EPS,
        "map_eps": DEFAULT_MAP_EPS,
    }


def snap_sparse(fit, thresholds=None):
    """Round near-identity transfer entries to exact identity.

    Translation entries inside |delta| <= delta_eps drop to 0, scaling
    entries inside |kappa - 1| <= scale_eps become 1, mapping entries
    inside map_eps of their identity-pattern value snap to it. The
    derived target and the loss breakdown are recomputed, which needs
    the fit's attached training data.
    """
    thresholds = dict(thresholds) if thresholds else default_thresholds(fit)
    for key in ("delta_eps", "scale_eps", "map_eps"):
        if thresholds.get(key, 0.0) < 0:
            raise DataFormatError(f"threshold {key} must be >= 0")
    transfer = fit.transfer
    if isinstance(transfer, Translation):
        eps = thresholds["delta_eps"]
        delta = np.where(np.abs(transfer.delta) <= eps, 0.0, transfer.delta)
        snapped = Translation(delta)
    elif isinstance(transfer, Scaling):
        eps = thresholds["scale_eps"]
        kappa = np.where(np.abs(transfer.kappa - 1.0) <= eps, 1.0, transfer.kappa)
        snapped = Scaling(kappa)
    elif isinstance(transfer, Mapping):
        eps = thresholds["map_eps"]
        target = _identity_target(transfer.partition)
        m = np.where(np.abs(transfer.m_chi - target) <= eps, target,
                     transfer.m_chi)
        snapped = Mapping(m, partition=transfer.partition)
    else:
        raise DataFormatError(f"unknown transfer type {type(transfer).__name__}")

    if fit._data_original is None or fit._data_target is None:
        raise XferXaiError(
            "fit has no attached training data; snap at fit time, before "
            "serialization"
        )
    derived = apply_affine(
        snapped, fit.original,
        target_schema=fit._data_target.schema,
        target_means=fit._data_target.attribute_means,
    )
    chi_t = fit._data_target.relative_values
    r_t = chi_t @ derived.factors + derived.centroid_label \
        - fit._data_target.blackbox_predictions
    l_t = float(r_t @ r_t) / r_t.shape[0]
    l_s = sparsity_loss(
        snapped, include_intercept=fit.options.get("penalize_intercept", True)
    )
    breakdown = {
        "l_original": fit.loss_breakdown["l_original"],
        "l_target": l_t,
        "l_sparsity": l_s,
    }
    return TransferFit(
        kind=fit.kind,
        lam=fit.lam,
        original=fit.original,
        transfer=snapped,
        derived_target=derived,
        loss_breakdown=breakdown,
        convergence=fit.convergence,
        options=fit.options,
        unidentifiable_scales=fit.unidentifiable_scales,
        thresholds=thresholds,
        data_original=fit._data_original,
        data_target=fit._data_target,
    )
