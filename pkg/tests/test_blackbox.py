"""Prediction sources: file, linear, and the reference network."""

import numpy as np
import pytest

from xferxai.blackbox import PredictorSpec, predict, train_mlp
from xferxai.errors import DataFormatError, DimensionMismatchError


def test_linear_predictor():
    spec = PredictorSpec.linear([2.0, -1.0], 5.0)
    out = predict(spec, [[1.0, 1.0], [3.0, 0.0]])
    assert out.tolist() == [6.0, 11.0]


def test_file_predictor_reads_sidecar(tmp_path):
    (tmp_path / "preds.csv").write_text("y\n1.5\n2.5\n")
    spec = PredictorSpec("file", {"path": str(tmp_path / "preds.csv")})
    out = predict(spec, np.zeros((2, 3)))
    assert out.tolist() == [1.5, 2.5]


def test_file_predictor_row_count_must_match(tmp_path):
    (tmp_path / "preds.csv").write_text("y\n1.5\n")
    spec = PredictorSpec("file", {"path": str(tmp_path / "preds.csv")})
    with pytest.raises(DimensionMismatchError):
        predict(spec, np.zeros((2, 3)))


def test_spec_round_trip(tmp_path):
    spec = PredictorSpec.linear([0.25], -1.0)
    spec.save(tmp_path / "model.json")
    again = PredictorSpec.load(tmp_path / "model.json")
    assert again.kind == "linear"
    assert predict(again, [[4.0]]).tolist() == [0.0]


def test_unknown_kind_rejected():
    with pytest.raises(DataFormatError):
        PredictorSpec("forest", {})


def fixture_regression(n=400, seed=5):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3)) * [2.0, 0.5, 1.0] + [1.0, -3.0, 0.0]
    y = 1.5 * x[:, 0] - 2.0 * x[:, 1] + 0.3 * np.tanh(x[:, 2]) + 4.0
    return x, y


def test_train_mlp_fits_a_smooth_function():
    x, y = fixture_regression()
    spec = train_mlp(x, y, hidden=8, epochs=400, seed=0)
    out = predict(spec, x)
    residual = out - y
    assert float(np.mean(residual ** 2)) < 0.01 * float(np.var(y))
    assert spec.params["final_loss"] < 0.01


def test_train_mlp_is_deterministic():
    x, y = fixture_regression()
    a = train_mlp(x, y, hidden=6, epochs=50, seed=3)
    b = train_mlp(x, y, hidden=6, epochs=50, seed=3)
    assert a.to_doc() == b.to_doc()


def test_train_mlp_loss_never_increases_under_huge_step():
    # backtracking must absorb a hopeless initial step
    x, y = fixture_regression(n=60)
    spec = train_mlp(x, y, hidden=4, epochs=30, step=1e6, seed=1)
    base = train_mlp(x, y, hidden=4, epochs=0, seed=1)
    assert spec.params["final_loss"] <= base.params["final_loss"]


def test_train_mlp_multi_task_labels():
    x, y = fixture_regression()
    labels = np.column_stack([y, 2.0 * y + 1.0])
    spec = train_mlp(x, labels, hidden=8, epochs=300, seed=0)
    out = predict(spec, x)
    assert out.shape == (x.shape[0], 2)
    assert float(np.mean((out[:, 1] - labels[:, 1]) ** 2)) < 0.01 * float(np.var(labels[:, 1]))


def test_train_mlp_needs_ten_rows():
    with pytest.raises(DataFormatError):
        train_mlp(np.zeros((5, 2)), np.zeros(5))


def test_predict_width_must_match_network():
    x, y = fixture_regression(n=50)
    spec = train_mlp(x, y, hidden=4, epochs=5, seed=0)
    with pytest.raises(DimensionMismatchError):
        predict(spec, np.zeros((2, 7)))
