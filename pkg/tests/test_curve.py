import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wilsonrmt import __version__
from wilsonrmt.curve import DensityCurve


def test_meta_defaults():
    c = DensityCurve([0.0, 1.0], [0.5, 0.25])
    assert c.meta["tool_version"] == __version__ and "generated" in c.meta


def test_shape_validation():
    with pytest.raises(ValueError):
        DensityCurve([0.0, 1.0], [1.0])


def test_clipping():
    c = DensityCurve([0.0, 1.0, 2.0], [-1e-12, 0.5, 0.0])
    np.testing.assert_array_equal(c.clipped(), [0.0, 0.5, 0.0])
    with pytest.raises(ValueError):
        DensityCurve([0.0], [-1e-6]).clipped()


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=20),
       st.integers(0, 2 ** 32 - 1))
def test_csv_roundtrip_exact(xs, seed):
    ys = np.random.default_rng(seed).random(len(xs))
    c = DensityCurve(xs, ys)
    back = DensityCurve.from_csv(c.to_csv())
    assert back.grid.tobytes() == c.grid.tobytes()
    assert back.values.tobytes() == c.values.tobytes()


def test_csv_byte_stable():
    a = DensityCurve([0.1, 0.2], [1 / 3, 2 / 3], {"generated": "t1"})
    b = DensityCurve([0.1, 0.2], [1 / 3, 2 / 3], {"generated": "t2"})
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "x,rho"


def test_json_roundtrip(tmp_path):
    c = DensityCurve([0.0, 1.0], [0.5, 0.25], {"params": {"n": np.int64(2)}, "arr": np.arange(3)})
    doc = json.loads(c.to_json({"extra": np.float64(1.5)}))
    assert doc["meta"]["params"]["n"] == 2 and doc["meta"]["arr"] == [0, 1, 2] and doc["extra"] == 1.5
    back = DensityCurve.from_json(c.to_json())
    np.testing.assert_array_equal(back.values, c.values)
    c.write(tmp_path / "c.json", "json")
    c.write(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text() == c.to_csv()
    assert json.loads((tmp_path / "c.json").read_text())["values"] == [0.5, 0.25]


def test_from_csv_rejects_header():
    with pytest.raises(ValueError):
        DensityCurve.from_csv("a,b\n1,2\n")
