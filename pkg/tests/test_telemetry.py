import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swarmsim.telemetry import (analysis_hash, canonical_line, export_csv,
                                file_hash, read_jsonl, write_jsonl)


def rec(t, kind="telemetry", **payload):
    return {"t": t, "source": "p0", "kind": kind, "payload": payload}


def test_canonical_line_is_key_order_independent():
    a = {"b": 1, "a": 2, "payload": {"y": 0.5, "x": [1, 2]}}
    b = {"payload": {"x": [1, 2], "y": 0.5}, "a": 2, "b": 1}
    assert canonical_line(a) == canonical_line(b)
    assert canonical_line(a) == '{"a":2,"b":1,"payload":{"x":[1,2],"y":0.5}}'


def test_canonical_line_uses_shortest_float_repr():
    assert canonical_line({"v": 0.1}) == '{"v":0.1}'
    assert canonical_line({"v": 1 / 3}) == '{"v":0.3333333333333333}'


def test_canonical_line_rejects_nan_and_inf():
    with pytest.raises(ValueError):
        canonical_line({"v": math.nan})
    with pytest.raises(ValueError):
        canonical_line({"v": math.inf})


def test_canonical_line_rejects_foreign_integers():
    # np.float64 subclasses float and serializes; np.int64 does not,
    # and the TypeError is the guard against schema drift
    assert canonical_line({"v": np.float64(1.5)}) == '{"v":1.5}'
    with pytest.raises(TypeError):
        canonical_line({"v": np.int64(3)})


def test_jsonl_round_trip_is_byte_identical(tmp_path):
    records = [rec(0, resting=1024, transient=2048),
               rec(10 ** 9, kind="gnss", fix=True, pos=[1.5, -2.25, 0.125]),
               rec(2 * 10 ** 9, note="text", nested={"a": [1, {"b": 2}]})]
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert write_jsonl(records, p1) == 3
    parsed = read_jsonl(p1)
    write_jsonl(parsed, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert parsed == records


json_scalars = st.one_of(
    st.none(), st.booleans(), st.integers(-2 ** 53, 2 ** 53),
    st.floats(allow_nan=False, allow_infinity=False), st.text(max_size=20))
json_values = st.recursive(
    json_scalars,
    lambda children: st.one_of(
        st.lists(children, max_size=4),
        st.dictionaries(st.text(max_size=8), children, max_size=4)),
    max_leaves=20)


@given(st.lists(st.dictionaries(st.text(max_size=8), json_values,
                                max_size=5), max_size=8))
def test_reserialization_fixed_point(records):
    # parse(serialize(x)) serializes to the same bytes, for any records
    lines = [canonical_line(r) for r in records]
    again = [canonical_line(json.loads(s)) for s in lines]
    assert lines == again


def test_analysis_hash_matches_file_bytes(tmp_path):
    records = [rec(i * 10 ** 9, i=i, x=i * 0.1) for i in range(50)]
    path = tmp_path / "t.jsonl"
    write_jsonl(records, path)
    assert analysis_hash(records) == file_hash(path)


def test_analysis_hash_sensitivity():
    records = [rec(0, v=1), rec(1, v=2)]
    h = analysis_hash(records)
    assert analysis_hash([rec(0, v=1), rec(1, v=3)]) != h
    assert analysis_hash(records[::-1]) != h
    assert analysis_hash(records) == h


def test_export_csv(tmp_path):
    records = [rec(0, a=1, b=2.5), rec(1, b=0.5, c=[1, 2]),
               rec(2, kind="other", z=9)]
    path = tmp_path / "out.csv"
    n = export_csv(records, path, kind="telemetry")
    assert n == 2
    lines = path.read_text().strip().split("\n")
    assert lines[0].rstrip("\r") == "t,source,kind,a,b,c"
    assert lines[1].rstrip("\r") == "0,p0,telemetry,1,2.5,"
    assert lines[2].rstrip("\r") == '1,p0,telemetry,,0.5,"[1,2]"'
    assert export_csv(records, tmp_path / "all.csv") == 3
