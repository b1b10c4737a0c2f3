"""Request and response schemas of the HTTP service.

Heavy documents (explainers, fits, bundles) travel as plain JSON
objects whose shapes are owned by the core modules; the models here
validate the envelope around them.
"""

from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

Kind = Literal["subspace", "task", "attributes"]


class HealthResponse(BaseModel):
    status: str
    version: str


class SnapThresholds(BaseModel):
    delta_eps: Optional[float] = Field(default=None, ge=0)
    scale_eps: Optional[float] = Field(default=None, ge=0)
    map_eps: Optional[float] = Field(default=None, ge=0)


class FitRequest(BaseModel):
    """Fit a single-domain explainer from a manifest."""

    manifest_path: Optional[str] = None
    manifest: Optional[dict] = None
    domain: Literal["original", "target"] = "original"
    folds: int = Field(default=5, ge=2)
    seed: int = 0

    @model_validator(mode="after")
    def _one_source(self):
        if (self.manifest_path is None) == (self.manifest is None):
            raise ValueError("provide exactly one of manifest_path, manifest")
        return self


class FitResponse(BaseModel):
    explainer: dict
    report: dict


class TransferRequest(BaseModel):
    manifest_path: Optional[str] = None
    manifest: Optional[dict] = None
    kind: Optional[Kind] = None
    lambda_: Optional[float] = Field(default=None, alias="lambda", ge=0)
    lambda_grid: Optional[list[float]] = None
    seed: int = 0
    snap: bool = True
    thresholds: Optional[SnapThresholds] = None
    penalize_intercept: bool = True
    init_std: float = Field(default=0.1, gt=0)
    max_iter: int = Field(default=1000, ge=1)
    grad_tolerance: float = Field(default=1e-8, gt=0)

    model_config = {"populate_by_name": True}

    @model_validator(mode="after")
    def _check(self):
        if (self.manifest_path is None) == (self.manifest is None):
            raise ValueError("provide exactly one of manifest_path, manifest")
        if (self.lambda_ is None) == (self.lambda_grid is None):
            raise ValueError("provide exactly one of lambda, lambda_grid")
        if self.lambda_grid is not None:
            if not self.lambda_grid:
                raise ValueError("lambda_grid must be non-empty")
            if any(v < 0 for v in self.lambda_grid):
                raise ValueError("lambda values must be >= 0")
        return self


class TransferResponse(BaseModel):
    fit: dict
    best_lambda: float
    grid: Optional[list[dict]] = None


class ComposeRequest(BaseModel):
    """Compose transfer files in listed order (first listed applied first)."""

    paths: Optional[list[str]] = None
    documents: Optional[list[dict]] = None

    @model_validator(mode="after")
    def _check(self):
        if (self.paths is None) == (self.documents is None):
            raise ValueError("provide exactly one of paths, documents")
        items = self.paths if self.paths is not None else self.documents
        if len(items) < 2:
            raise ValueError("need at least two transfers to compose")
        return self


class ComposeResponse(BaseModel):
    transform: dict
    verification: dict


class EvaluateRequest(BaseModel):
    fit_path: Optional[str] = None
    fit: Optional[dict] = None
    manifest_path: Optional[str] = None
    manifest: Optional[dict] = None
    folds: int = Field(default=5, ge=2)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if (self.fit_path is None) == (self.fit is None):
            raise ValueError("provide exactly one of fit_path, fit")
        if (self.manifest_path is None) == (self.manifest is None):
            raise ValueError("provide exactly one of manifest_path, manifest")
        return self


class SimulateRequest(BaseModel):
    fit_path: Optional[str] = None
    fit: Optional[dict] = None
    instances: list[list[float]]
    system_predictions: Optional[list[Optional[float]]] = None

    @model_validator(mode="after")
    def _check(self):
        if (self.fit_path is None) == (self.fit is None):
            raise ValueError("provide exactly one of fit_path, fit")
        if self.system_predictions is not None and (
            len(self.system_predictions) != len(self.instances)
        ):
            raise ValueError("one system prediction per instance")
        return self


class SimulateResponse(BaseModel):
    explanations: list[dict]
    text: str


class BundleRequest(BaseModel):
    fit_path: Optional[str] = None
    fit: Optional[dict] = None
    instances: list[list[float]] = Field(default_factory=list)
    system_predictions: list[Optional[float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self):
        if (self.fit_path is None) == (self.fit is None):
            raise ValueError("provide exactly one of fit_path, fit")
        return self


class ResponseRecordModel(BaseModel):
    participant_label: float
    aligned_xai_label: float
    misaligned_xai_label: float
    explainer_label: float
    system_label: Optional[float] = None


class RecordsRequest(BaseModel):
    records: list[ResponseRecordModel]
    epsilon: float = Field(default=1e-6, gt=0)


class RecordsResponse(BaseModel):
    summary: dict
    table: str
