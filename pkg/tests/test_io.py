import json

import numpy as np
import pytest

from latorbit.errors import DegenerateInputError
from latorbit.io import fmt, read_matrix, write_csv, write_json


def test_read_matrix(tmp_path):
    np.testing.assert_array_equal(read_matrix("id", 3), np.eye(3))
    p = tmp_path / "g.txt"
    p.write_text("# comment\n2, 1\n1 1\n")
    np.testing.assert_array_equal(read_matrix(str(p), 2), [[2, 1], [1, 1]])
    with pytest.raises(DegenerateInputError):
        read_matrix(str(p), 3)
    with pytest.raises(DegenerateInputError):
        read_matrix(str(tmp_path / "missing"), 2)


def test_fmt_round_trips():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(np.int64(3)) == "3"
    assert fmt(True) == "true"


def test_csv_and_json(tmp_path):
    p = tmp_path / "a.csv"
    write_csv(p, ["a", "b"], [(1, 0.5), (2, 1 / 3)], {"k": 1})
    lines = p.read_bytes().split(b"\r\n")
    head = [l for l in p.read_text().splitlines() if l.startswith("#")]
    assert head[0].startswith("# latorbit") and head[-1].startswith("# timestamp")
    assert b"a,b" in lines
    q = tmp_path / "a.json"
    write_json(q, {"v": np.float64(1.5), "arr": np.arange(3), "inf": float("inf")}, {"k": 1})
    doc = json.loads(q.read_text())
    assert doc["result"] == {"v": 1.5, "arr": [0, 1, 2], "inf": "inf"}
    assert doc["header"]["config"] == {"k": 1}
