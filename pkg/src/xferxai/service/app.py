"""HTTP service exposing the fitting, transfer, and rendering operations.

Stateless: every endpoint is a pure computation over its request plus
files it names. The CLI talks to this app in-process by default; run
``xferxai serve`` (or uvicorn) to expose it over a socket. When the
viewer is built (frontend/dist), its static files are served at /ui.
"""

import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, jsonio
from ..algebra import (
    AffineTransfer,
    HomogeneousTransform,
    compose,
    homogeneous_vector,
    to_homogeneous,
)
from ..errors import (
    DataFormatError,
    DimensionMismatchError,
    DivergenceError,
    NonFiniteError,
    UndefinedValueError,
    XferXaiError,
)
from ..explain import (
    Explanation,
    explain_instance,
    explanation_text,
    export_ui_bundle,
    format_scale,
)
from ..metrics import (
    MetricsReport,
    ResponseRecord,
    evaluate_fit,
    kfold_indices,
    log_unfaithfulness,
    log_woa,
    faithfulness_r2,
    mse,
)
from ..preprocess import DomainPair, Manifest, ingest_csv
from ..trainer import TransferFit, fit_single, fit_transfer, snap_sparse
from ..algebra import Scaling
from . import models

USAGE_ERRORS = (DataFormatError, DimensionMismatchError, UndefinedValueError)
NUMERIC_ERRORS = (NonFiniteError, DivergenceError)


def _load_manifest(request):
    if request.manifest_path is not None:
        return Manifest.load(request.manifest_path)
    return Manifest.from_doc(request.manifest)


def _ingest(manifest):
    return ingest_csv(manifest.resolve(manifest.csv), manifest)


def _require_pair(data, where):
    if not isinstance(data, DomainPair):
        raise DataFormatError(
            f"{where} needs a manifest that declares both domains"
        )
    return data


def _load_fit(request):
    if request.fit_path is not None:
        path = Path(request.fit_path)
        if not path.exists():
            raise DataFormatError(f"fit file not found: {path}")
        return TransferFit.from_doc(jsonio.load(path))
    return TransferFit.from_doc(request.fit)


def _fit_report(data, folds, seed):
    """Hold-out faithfulness of a single-domain explainer."""
    r2s, mses = [], []
    for train_idx, test_idx in kfold_indices(data.n_rows, folds, seed):
        explainer = fit_single(data.subset(train_idx))
        chi = data.relative_values[test_idx]
        estimates = chi @ explainer.factors + explainer.centroid_label
        truth = data.blackbox_predictions[test_idx]
        r2s.append(faithfulness_r2(estimates, truth))
        mses.append(mse(estimates, truth))
    return {
        "folds": folds,
        "seed": seed,
        "r2_mean": float(np.mean(r2s)),
        "r2_std": float(np.std(r2s)),
        "mse_mean": float(np.mean(mses)),
        "mse_std": float(np.std(mses)),
        "r2_folds": [float(v) for v in r2s],
    }


def create_app():
    app = FastAPI(title="xferxai", version=__version__)

    @app.exception_handler(XferXaiError)
    async def _xferxai_error(request: Request, exc: XferXaiError):
        if isinstance(exc, NUMERIC_ERRORS):
            status = 500
            category = "numeric"
        else:
            status = 400
            category = "usage"
        return JSONResponse(
            status_code=status,
            content={"detail": str(exc), "category": category,
                     "error": type(exc).__name__},
        )

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/api/fit", response_model=models.FitResponse)
    def fit(request: models.FitRequest):
        manifest = _load_manifest(request)
        data = _ingest(manifest)
        if isinstance(data, DomainPair):
            data = data.original if request.domain == "original" else data.target
        explainer = fit_single(data)
        report = _fit_report(data, request.folds, request.seed)
        return models.FitResponse(explainer=explainer.to_doc(), report=report)

    @app.post("/api/transfer", response_model=models.TransferResponse)
    def transfer(request: models.TransferRequest):
        manifest = _load_manifest(request)
        pair = _require_pair(_ingest(manifest), "transfer")
        kind = request.kind or pair.kind
        if kind != pair.kind:
            raise DataFormatError(
                f"manifest declares a {pair.kind} pair, not {kind}"
            )
        grid = request.lambda_grid if request.lambda_grid is not None \
            else [request.lambda_]
        thresholds = None
        if request.thresholds is not None:
            thresholds = {
                k: v for k, v in request.thresholds.model_dump().items()
                if v is not None
            }
        rows = []
        fits = []
        for lam in grid:
            fit_result = fit_transfer(
                pair.original, pair.target, kind=kind, lam=lam,
                seed=request.seed,
                penalize_intercept=request.penalize_intercept,
                init_std=request.init_std, max_iter=request.max_iter,
                grad_tolerance=request.grad_tolerance,
            )
            if request.snap:
                from ..trainer import default_thresholds

                full = dict(default_thresholds(fit_result))
                if thresholds:
                    full.update(thresholds)
                fit_result = snap_sparse(fit_result, full)
            breakdown = fit_result.loss_breakdown
            rows.append({
                "lambda": lam,
                "l_original": breakdown["l_original"],
                "l_target": breakdown["l_target"],
                "l_sparsity": breakdown["l_sparsity"],
                "total": fit_result.total_loss,
                "data_loss": breakdown["l_original"] + breakdown["l_target"],
                "converged": fit_result.convergence["converged"],
            })
            fits.append(fit_result)
        best_index = min(range(len(fits)),
                         key=lambda i: rows[i]["data_loss"])
        response = models.TransferResponse(
            fit=fits[best_index].to_doc(),
            best_lambda=grid[best_index],
            grid=rows if len(grid) > 1 else None,
        )
        return response

    @app.post("/api/compose", response_model=models.ComposeResponse)
    def compose_transfers(request: models.ComposeRequest):
        if request.paths is not None:
            documents = []
            for p in request.paths:
                path = Path(p)
                if not path.exists():
                    raise DataFormatError(f"transfer file not found: {path}")
                documents.append(jsonio.load(path))
        else:
            documents = request.documents

        transforms = []
        first_vector = None
        for doc in documents:
            if "matrix" in doc:
                transforms.append(HomogeneousTransform.from_doc(doc))
            elif "transfer" in doc:  # a TransferFit document
                fit = TransferFit.from_doc(doc)
                transforms.append(to_homogeneous(fit.transfer))
                if first_vector is None:
                    size = transforms[-1].size
                    first_vector = homogeneous_vector(fit.original, size)
            elif "variant" in doc:
                transforms.append(to_homogeneous(AffineTransfer.from_doc(doc)))
            else:
                raise DataFormatError(
                    "document is not a transfer, fit, or homogeneous transform"
                )
        sizes = {t.size for t in transforms}
        if len(sizes) > 1:
            raise DimensionMismatchError(
                "cannot compose transforms of different sizes "
                f"{sorted(sizes)}; attribute index alignment across schemas "
                "is the caller's job: pad or reorder to a common size first"
            )
        composite = transforms[0]
        for t in transforms[1:]:
            composite = compose(t, composite)  # listed order: first applied first
        probe = first_vector if first_vector is not None \
            else np.ones(composite.size)
        sequential = probe.copy()
        for t in transforms:
            sequential = t.apply(sequential)
        via_composite = composite.apply(probe)
        verification = {
            "probe": [float(v) for v in probe],
            "sequential": [float(v) for v in sequential],
            "composite": [float(v) for v in via_composite],
            "max_abs_difference": float(
                np.max(np.abs(sequential - via_composite))
            ),
        }
        doc = composite.to_doc()
        doc["verification"] = verification
        return models.ComposeResponse(transform=doc, verification=verification)

    @app.post("/api/evaluate")
    def evaluate(request: models.EvaluateRequest):
        fit = _load_fit(request)
        manifest = _load_manifest(request)
        pair = _require_pair(_ingest(manifest), "evaluate")
        return evaluate_fit(fit, pair, folds=request.folds, seed=request.seed)

    @app.post("/api/simulate", response_model=models.SimulateResponse)
    def simulate(request: models.SimulateRequest):
        fit = _load_fit(request)
        explainer = fit.derived_target
        annotations = None
        if isinstance(fit.transfer, Scaling):
            annotations = [format_scale(k) for k in fit.transfer.kappa[:-1]]
        blocks = []
        docs = []
        systems = request.system_predictions or [None] * len(request.instances)
        for raw, system in zip(request.instances, systems):
            explanation = explain_instance(explainer, raw, system)
            docs.append({
                "raw": [float(v) for v in explanation.instance_raw],
                "relative": [float(v) for v in explanation.relative_values],
                "partials": [float(v) for v in explanation.partial_contributions],
                "estimate": explanation.explainer_estimate,
                "system": explanation.system_prediction,
                "percent_diff": explanation.percent_difference,
            })
            blocks.append(explanation_text(
                explanation, explainer.schema, scale_annotations=annotations))
        return models.SimulateResponse(
            explanations=docs, text="\n\n".join(blocks))

    @app.post("/api/bundle")
    def bundle(request: models.BundleRequest):
        fit = _load_fit(request)
        return export_ui_bundle(
            fit, request.instances, request.system_predictions)

    @app.post("/api/records", response_model=models.RecordsResponse)
    def records(request: models.RecordsRequest):
        eps = request.epsilon
        rows = ["index\tparticipant\taligned\tmisaligned\texplainer"
                "\tlog_unfaithfulness\tlog_woa"]
        unf_values, woa_values = [], []
        clamps = 0
        for i, rec in enumerate(request.records):
            record = ResponseRecord(
                participant_label=rec.participant_label,
                aligned_xai_label=rec.aligned_xai_label,
                misaligned_xai_label=rec.misaligned_xai_label,
                explainer_label=rec.explainer_label,
            )
            unf = log_unfaithfulness(
                record.participant_label, record.explainer_label, eps)
            woa = log_woa(record, eps)
            clamps += int(abs(record.participant_label
                              - record.explainer_label) < eps)
            clamps += int(abs(record.participant_label
                              - record.aligned_xai_label) < eps)
            clamps += int(abs(record.participant_label
                              - record.misaligned_xai_label) < eps)
            unf_values.append(unf)
            woa_values.append(woa)
            rows.append(
                f"{i}\t{rec.participant_label!r}\t{rec.aligned_xai_label!r}"
                f"\t{rec.misaligned_xai_label!r}\t{rec.explainer_label!r}"
                f"\t{unf!r}\t{woa!r}"
            )
        summary = MetricsReport(
            r2=math.nan, mse=math.nan,
            per_record={"log_unfaithfulness": unf_values, "log_woa": woa_values},
            epsilon_clamp_count=clamps, epsilon=eps,
        ).to_doc()
        summary["count"] = len(request.records)
        if unf_values:
            summary["log_unfaithfulness_mean"] = float(np.mean(unf_values))
            summary["log_woa_mean"] = float(np.mean(woa_values))
        return models.RecordsResponse(summary=summary, table="\n".join(rows) + "\n")

    _mount_viewer(app)
    return app


def _mount_viewer(app):
    import os

    override = os.environ.get("XFERXAI_VIEWER_DIR")
    dist = Path(override) if override \
        else Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(dist), html=True),
                  name="viewer")


app = create_app()
