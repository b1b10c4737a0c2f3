"""Explainer and transfer algebra.

A linear explainer predicts over relative attribute values, y = w . chi
+ centroid, where chi = x - means. An affine transfer relates the
factors of two explainers, w_T = A w_O + b, in one of three shapes:

- Translation: A = I, b = delta (subspace transfer),
- Scaling: A = diag(kappa), b = 0 (task transfer),
- Mapping: A = M_chi^T, b = 0 (attribute transfer).

Translation and Scaling carry one extra entry for the centroid, so
their parameter vectors have length n + 1. Mapping leaves the centroid
unchanged: the chi on both sides are zero-mean, so the intercepts
cancel when the target values are mapped back onto the original view.

All operations are pure and exact in double precision. Rounding is a
display concern and lives elsewhere.
"""

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError, DataFormatError
from .schema import AttributeSchema


def _check_finite(name, array):
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"{name} contains non-finite entries")


class LinearExplainer:
    """Factors per attribute plus the centroid label.

    Parameters
    ----------
    factors : array-like, shape (n,)
        Weight per attribute, in label units per attribute unit.
    centroid_label : float
        Prediction at the mean instance (the "Average" row).
    attribute_means : array-like, shape (n,)
        Per-attribute means used to form relative values.
    schema : AttributeSchema
    """

    def __init__(self, factors, centroid_label, attribute_means, schema):
        self.factors = np.asarray(factors, dtype=float)
        self.centroid_label = float(centroid_label)
        self.attribute_means = np.asarray(attribute_means, dtype=float)
        self.schema = schema
        if self.factors.ndim != 1 or self.attribute_means.ndim != 1:
            raise DimensionMismatchError("factors and means must be vectors")
        n = len(schema)
        if self.factors.shape[0] != n or self.attribute_means.shape[0] != n:
            raise DimensionMismatchError(
                "explainer size does not match schema",
                expected=n,
                got=(self.factors.shape[0], self.attribute_means.shape[0]),
            )
        _check_finite("factors", self.factors)
        _check_finite("attribute_means", self.attribute_means)
        if not np.isfinite(self.centroid_label):
            raise NonFiniteError("centroid_label is non-finite")

    def predict_relative(self, chi):
        """Predict from relative values: w . chi + centroid."""
        chi = np.asarray(chi, dtype=float)
        return chi @ self.factors + self.centroid_label

    def predict_raw(self, x):
        """Predict from raw values by centering first."""
        x = np.asarray(x, dtype=float)
        return (x - self.attribute_means) @ self.factors + self.centroid_label

    def to_doc(self):
        return {
            "format_version": 1,
            "schema": self.schema.to_doc(),
            "factors": [float(v) for v in self.factors],
            "centroid_label": self.centroid_label,
            "attribute_means": [float(v) for v in self.attribute_means],
        }

    @classmethod
    def from_doc(cls, doc):
        try:
            return cls(
                factors=doc["factors"],
                centroid_label=doc["centroid_label"],
                attribute_means=doc["attribute_means"],
                schema=AttributeSchema.from_doc(doc["schema"]),
            )
        except KeyError as exc:
            raise DataFormatError(f"explainer document missing field {exc}") from exc

    def __eq__(self, other):
        if not isinstance(other, LinearExplainer):
            return NotImplemented
        return (
            np.array_equal(self.factors, other.factors)
            and self.centroid_label == other.centroid_label
            and np.array_equal(self.attribute_means, other.attribute_means)
            and self.schema == other.schema
        )

    def __repr__(self):
        return (
            f"LinearExplainer(factors={self.factors.tolist()}, "
            f"centroid_label={self.centroid_label})"
        )


def recover_bias(explainer):
    """Raw-value intercept w0 = centroid - w . means.

    With it, w . x + w0 equals the relative-value prediction for every
    raw instance x.
    """
    return explainer.centroid_label - float(
        explainer.factors @ explainer.attribute_means
    )


class MappingPartition:
    """Shared/unshared block structure of an attribute mapping.

    ``shared_original[k]`` and ``shared_target[k]`` index the same
    attribute name in the two schemas; unshared indices are the
    complements. The four blocks (shared-shared, unshared-unshared and
    the two cross blocks) tile the matrix exactly.
    """

    def __init__(self, n_original, n_target, shared_original, shared_target):
        self.n_original = int(n_original)
        self.n_target = int(n_target)
        self.shared_original = list(int(i) for i in shared_original)
        self.shared_target = list(int(i) for i in shared_target)
        if len(self.shared_original) != len(self.shared_target):
            raise DimensionMismatchError(
                "shared index lists must pair up",
                expected=len(self.shared_original),
                got=len(self.shared_target),
            )
        for idx, bound, side in (
            (self.shared_original, self.n_original, "original"),
            (self.shared_target, self.n_target, "target"),
        ):
            if len(set(idx)) != len(idx):
                raise DataFormatError(f"duplicate shared indices on {side} side")
            if any(i < 0 or i >= bound for i in idx):
                raise DataFormatError(f"shared index out of range on {side} side")
        self.unshared_original = [
            i for i in range(self.n_original) if i not in set(self.shared_original)
        ]
        self.unshared_target = [
            i for i in range(self.n_target) if i not in set(self.shared_target)
        ]

    @classmethod
    def aligned(cls, n):
        """All attributes shared, in place; block structure is just the diagonal."""
        return cls(n, n, list(range(n)), list(range(n)))

    @classmethod
    def disjoint(cls, n_original, n_target):
        """No shared attributes; the whole matrix is penalized toward zero."""
        return cls(n_original, n_target, [], [])

    @classmethod
    def from_schemas(cls, schema_original, schema_target):
        """Match attributes by name; shared order follows the original schema."""
        target_index = {name: i for i, name in enumerate(schema_target.names)}
        shared_o, shared_t = [], []
        for i, name in enumerate(schema_original.names):
            if name in target_index:
                shared_o.append(i)
                shared_t.append(target_index[name])
        return cls(len(schema_original), len(schema_target), shared_o, shared_t)

    def to_doc(self):
        return {
            "n_original": self.n_original,
            "n_target": self.n_target,
            "shared_original": self.shared_original,
            "shared_target": self.shared_target,
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(
            doc["n_original"],
            doc["n_target"],
            doc["shared_original"],
            doc["shared_target"],
        )

    def __eq__(self, other):
        if not isinstance(other, MappingPartition):
            return NotImplemented
        return self.to_doc() == other.to_doc()


class AffineTransfer:
    """Tagged transfer variant. Use the subclass constructors."""

    variant = None

    def to_doc(self):
        raise NotImplementedError

    @staticmethod
    def from_doc(doc):
        try:
            variant = doc["variant"]
        except KeyError as exc:
            raise DataFormatError("transfer document missing 'variant'") from exc
        if variant == "translation":
            return Translation(doc["parameters"])
        if variant == "scaling":
            return Scaling(doc["parameters"])
        if variant == "mapping":
            partition = doc.get("partition")
            return Mapping(
                np.asarray(doc["parameters"], dtype=float),
                partition=MappingPartition.from_doc(partition) if partition else None,
            )
        raise DataFormatError(f"unknown transfer variant {variant!r}")


class Translation(AffineTransfer):
    """w_T = w_O + delta[:n], centroid_T = centroid_O + delta[n]."""

    variant = "translation"

    def __init__(self, delta):
        self.delta = np.asarray(delta, dtype=float)
        if self.delta.ndim != 1:
            raise DimensionMismatchError("delta must be a vector")
        _check_finite("delta", self.delta)

    def to_doc(self):
        return {
            "format_version": 1,
            "variant": self.variant,
            "parameters": [float(v) for v in self.delta],
        }


class Scaling(AffineTransfer):
    """w_T = kappa[:n] * w_O elementwise, centroid_T = kappa[n] * centroid_O."""

    variant = "scaling"

    def __init__(self, kappa):
        self.kappa = np.asarray(kappa, dtype=float)
        if self.kappa.ndim != 1:
            raise DimensionMismatchError("kappa must be a vector")
        _check_finite("kappa", self.kappa)

    def to_doc(self):
        return {
            "format_version": 1,
            "variant": self.variant,
            "parameters": [float(v) for v in self.kappa],
        }


class Mapping(AffineTransfer):
    """Attribute mapping chi_O = M_chi . chi_T, hence w_T = M_chi^T . w_O.

    ``m_chi`` has one row per original attribute and one column per
    target attribute. The centroid passes through unchanged.
    """

    variant = "mapping"

    def __init__(self, m_chi, partition=None):
        self.m_chi = np.asarray(m_chi, dtype=float)
        if self.m_chi.ndim != 2:
            raise DimensionMismatchError("m_chi must be a matrix")
        _check_finite("m_chi", self.m_chi)
        n_o, n_t = self.m_chi.shape
        if partition is None:
            if n_o == n_t:
                partition = MappingPartition.aligned(n_o)
            else:
                partition = MappingPartition.disjoint(n_o, n_t)
        if (partition.n_original, partition.n_target) != (n_o, n_t):
            raise DimensionMismatchError(
                "partition does not tile m_chi",
                expected=(n_o, n_t),
                got=(partition.n_original, partition.n_target),
            )
        self.partition = partition

    def to_doc(self):
        return {
            "format_version": 1,
            "variant": self.variant,
            "parameters": [[float(v) for v in row] for row in self.m_chi],
            "partition": self.partition.to_doc(),
        }


def map_values(m_chi, chi_target):
    """chi_O = M_chi . chi_T: express target values on the original attributes."""
    m_chi = np.asarray(m_chi, dtype=float)
    chi_target = np.asarray(chi_target, dtype=float)
    if m_chi.shape[1] != chi_target.shape[-1]:
        raise DimensionMismatchError(
            "m_chi columns must match chi_target length",
            expected=m_chi.shape[1],
            got=chi_target.shape[-1],
        )
    return chi_target @ m_chi.T


def map_factors(m_chi, w_original):
    """w_T = M_chi^T . w_O: the transposed reading over factors."""
    m_chi = np.asarray(m_chi, dtype=float)
    w_original = np.asarray(w_original, dtype=float)
    if m_chi.shape[0] != w_original.shape[0]:
        raise DimensionMismatchError(
            "m_chi rows must match w_original length",
            expected=m_chi.shape[0],
            got=w_original.shape[0],
        )
    return m_chi.T @ w_original


def apply_affine(transfer, source, target_schema=None, target_means=None):
    """Apply a transfer to a source explainer, producing the target explainer.

    Translation and Scaling keep the source schema; their attribute
    means default to the source's but can be overridden for subspace
    transfers, where the target subspace has its own means. Mapping
    requires ``target_schema`` (the result lives on different
    attributes); ``target_means`` default to zeros there.
    """
    n = source.factors.shape[0]
    if isinstance(transfer, Translation):
        if transfer.delta.shape[0] != n + 1:
            raise DimensionMismatchError(
                "delta length must be source size + 1",
                expected=n + 1,
                got=transfer.delta.shape[0],
            )
        means = source.attribute_means if target_means is None else target_means
        return LinearExplainer(
            factors=source.factors + transfer.delta[:n],
            centroid_label=source.centroid_label + transfer.delta[n],
            attribute_means=means,
            schema=source.schema if target_schema is None else target_schema,
        )
    if isinstance(transfer, Scaling):
        if transfer.kappa.shape[0] != n + 1:
            raise DimensionMismatchError(
                "kappa length must be source size + 1",
                expected=n + 1,
                got=transfer.kappa.shape[0],
            )
        means = source.attribute_means if target_means is None else target_means
        return LinearExplainer(
            factors=transfer.kappa[:n] * source.factors,
            centroid_label=transfer.kappa[n] * source.centroid_label,
            attribute_means=means,
            schema=source.schema if target_schema is None else target_schema,
        )
    if isinstance(transfer, Mapping):
        if transfer.m_chi.shape[0] != n:
            raise DimensionMismatchError(
                "m_chi rows must match source size",
                expected=n,
                got=transfer.m_chi.shape[0],
            )
        if target_schema is None:
            raise DimensionMismatchError(
                "mapping application needs the target schema"
            )
        n_t = transfer.m_chi.shape[1]
        if len(target_schema) != n_t:
            raise DimensionMismatchError(
                "target schema size must match m_chi columns",
                expected=n_t,
                got=len(target_schema),
            )
        means = np.zeros(n_t) if target_means is None else target_means
        return LinearExplainer(
            factors=map_factors(transfer.m_chi, source.factors),
            centroid_label=source.centroid_label,
            attribute_means=means,
            schema=target_schema,
        )
    raise DataFormatError(f"unknown transfer type {type(transfer).__name__}")


class HomogeneousTransform:
    """(m+1) x (m+1) matrix with last row (0, ..., 0, 1)."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise DimensionMismatchError("homogeneous matrix must be square")
        _check_finite("matrix", self.matrix)
        m = self.matrix.shape[0] - 1
        last = np.zeros(m + 1)
        last[m] = 1.0
        if not np.array_equal(self.matrix[m], last):
            raise DataFormatError("last row must be exactly (0, ..., 0, 1)")

    @property
    def size(self):
        """Length of the factor-plus-centroid vector this acts on."""
        return self.matrix.shape[0] - 1

    def apply(self, vector):
        """Apply to a parameter vector (factors..., centroid) of length size."""
        vector = np.asarray(vector, dtype=float)
        if vector.shape[0] != self.size:
            raise DimensionMismatchError(
                "vector length must match transform size",
                expected=self.size,
                got=vector.shape[0],
            )
        lifted = np.append(vector, 1.0)
        return (self.matrix @ lifted)[: self.size]

    def to_doc(self):
        return {
            "format_version": 1,
            "matrix": [[float(v) for v in row] for row in self.matrix],
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(np.asarray(doc["matrix"], dtype=float))

    @classmethod
    def identity(cls, size):
        return cls(np.eye(size + 1))


def to_homogeneous(transfer):
    """Embed a transfer as ((A, b), (0, 1)).

    Translation: A = I, b = delta. Scaling: A = diag(kappa), b = 0.
    Mapping: A = M_chi^T zero-padded to the max(n_O, n_T) + 1 square,
    with the extra slot passing the centroid through; b = 0.

    The transform acts on (factors..., centroid) stacked as one vector,
    zero-padded to the transform size for mappings between different
    attribute counts.
    """
    if isinstance(transfer, Translation):
        m = transfer.delta.shape[0]
        matrix = np.eye(m + 1)
        matrix[:m, m] = transfer.delta
        return HomogeneousTransform(matrix)
    if isinstance(transfer, Scaling):
        m = transfer.kappa.shape[0]
        matrix = np.eye(m + 1)
        matrix[:m, :m] = np.diag(transfer.kappa)
        return HomogeneousTransform(matrix)
    if isinstance(transfer, Mapping):
        n_o, n_t = transfer.m_chi.shape
        s = max(n_o, n_t) + 1
        matrix = np.zeros((s + 1, s + 1))
        matrix[:n_t, :n_o] = transfer.m_chi.T
        matrix[s - 1, s - 1] = 1.0  # centroid slot passes through
        matrix[s, s] = 1.0
        return HomogeneousTransform(matrix)
    raise DataFormatError(f"unknown transfer type {type(transfer).__name__}")


def homogeneous_vector(explainer, size=None):
    """(factors..., centroid) zero-padded to ``size`` for mapping transforms."""
    n = explainer.factors.shape[0]
    size = n + 1 if size is None else size
    if size < n + 1:
        raise DimensionMismatchError(
            "size too small for explainer", expected=n + 1, got=size
        )
    vector = np.zeros(size)
    vector[:n] = explainer.factors
    vector[size - 1] = explainer.centroid_label
    return vector


def compose(second, first):
    """Matrix product second . first; applying it equals first then second.

    Caller supplies index alignment: both transforms must already act
    on the same homogeneous size.
    """
    if second.size != first.size:
        raise DimensionMismatchError(
            "cannot compose transforms of different sizes; align attribute "
            "indices and pad to a common size first",
            expected=first.size,
            got=second.size,
        )
    return HomogeneousTransform(second.matrix @ first.matrix)
