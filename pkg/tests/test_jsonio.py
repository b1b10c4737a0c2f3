"""Canonical JSON writer: stable bytes, exact float round-trips."""

import math

import pytest
from hypothesis import given, strategies as st

from xferxai import jsonio
from xferxai.errors import DataFormatError, NonFiniteError


def test_floats_keep_seventeen_digits():
    text = jsonio.dumps({"x": 0.1 + 0.2})
    assert "0.30000000000000004" in text


def test_integral_floats_keep_a_decimal_point():
    assert '"x": 2.0' in jsonio.dumps({"x": 2.0})
    assert '"n": 2' in jsonio.dumps({"n": 2})


def test_dict_order_is_preserved():
    text = jsonio.dumps({"b": 1, "a": 2})
    assert text.index('"b"') < text.index('"a"')


def test_output_ends_with_newline():
    assert jsonio.dumps({}).endswith("\n")


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        jsonio.dumps({"x": float("nan")})
    with pytest.raises(NonFiniteError):
        jsonio.dumps({"x": float("inf")})


def test_bad_json_raises_data_format_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(DataFormatError):
        jsonio.load(path)


def test_file_round_trip_is_byte_identical(tmp_path):
    doc = {"factors": [1.5, -0.25, 1e-17], "name": "x", "nested": {"k": [True, None]}}
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    jsonio.dump(doc, p1)
    jsonio.dump(jsonio.load(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_every_double_round_trips_exactly(value):
    again = jsonio.loads(jsonio.dumps({"v": value}))["v"]
    assert again == value or (value == 0 and again == 0)
    assert math.copysign(1.0, again) == math.copysign(1.0, value)
