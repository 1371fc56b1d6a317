import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from cyldrift.io import CsvTable, PROFILE_COLUMNS, decay_table, dumps, emit_csv, emit_json, format_float, load_json, loads, profile_table


def test_empty_profile_is_header_only(tmp_path):
    emit_csv(profile_table([], [], []), tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text() == "x1,cross_index,value\n"


def test_decay_columns(tmp_path):
    emit_csv(decay_table([(0, 1.0), (1, 0.5)]), tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines() == ["n,window_norm", "0,1.0", "1,0.5"]


@given(st.lists(st.floats(allow_nan=True, allow_infinity=True), max_size=20))
def test_json_round_trip_bit_exact(values):
    data = {"values": values, "nested": {"x": values[:1]}}
    back = loads(dumps(data))
    for a, b in zip(values, back["values"]):
        assert (math.isnan(a) and math.isnan(b)) or (a == b and math.copysign(1, a) == math.copysign(1, b))
        assert isinstance(b, float)


def test_seventeen_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(2.0) == "2.0"
    assert format_float(-math.inf) == "-inf"


def test_emit_json_file(tmp_path):
    emit_json({"a": np.float64(1.5), "b": np.arange(3), "c": None, "d": True}, tmp_path / "x.json")
    assert load_json(tmp_path / "x.json") == {"a": 1.5, "b": [0, 1, 2], "c": None, "d": True}
    json.loads((tmp_path / "x.json").read_text())  # plain JSON, sentinels are strings


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    x, v = rng.standard_normal((2, 10))
    emit_csv(profile_table(x, np.arange(10), v), tmp_path / "p.csv")
    arr = np.loadtxt(tmp_path / "p.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(arr[:, 0], x)
    np.testing.assert_array_equal(arr[:, 2], v)
    assert CsvTable(PROFILE_COLUMNS).render().count("\n") == 1


def test_io_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    try:
        emit_csv(decay_table([]), blocker / "sub" / "d.csv")
    except OSError as exc:
        assert "file" in str(exc)
    else:
        raise AssertionError("expected OSError")
