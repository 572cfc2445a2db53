import numpy as np
import pytest

from mellin_deconv.errors import IoError
from mellin_deconv.io import (ensure_dir, read_estimate, read_samples, read_table, write_estimate,
                              write_samples, write_table)
from mellin_deconv.mellin import SampleSet
from mellin_deconv.sse import SseConfig, estimate_sse


def test_samples_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(1)
    s = SampleSet(rng.standard_normal(100) * 1e-7 + rng.gamma(2, size=100), seed=42, model_tag="x|y")
    path = write_samples(str(tmp_path / "s.csv"), s, {"extra": 1})
    back = read_samples(path)
    assert np.array_equal(back.values, s.values)
    assert back.seed == 42 and back.model_tag == "x|y"
    assert read_table(path)[0]["extra"] == 1


def test_estimate_roundtrip(tmp_path):
    s = SampleSet(np.random.default_rng(2).standard_normal(500))
    est = estimate_sse(s, SseConfig(), 0.9, np.linspace(0.1, 5, 30))
    meta, x, v = read_estimate(write_estimate(str(tmp_path / "e.csv"), est))
    assert np.array_equal(x, est.x_grid) and np.array_equal(v, est.values)
    assert meta["config"]["gamma_line"] == 0.8
    assert meta["cutoffs"]["h"] == 0.9


def test_table_without_meta(tmp_path):
    path = write_table(str(tmp_path / "t.csv"), ["a", "b"], [(1, 2.5), ("u", 0.1)])
    meta, header, rows = read_table(path)
    assert meta == {} and header == ["a", "b"] and rows == [["1", "2.5"], ["u", "0.1"]]


def test_io_errors(tmp_path):
    with pytest.raises(IoError):
        read_table(str(tmp_path / "none.csv"))
    bad = tmp_path / "bad.csv"
    bad.write_text("# {not json\nvalue\n1\n")
    with pytest.raises(IoError):
        read_table(str(bad))
    bad.write_text("value\nabc\n")
    with pytest.raises(IoError):
        read_samples(str(bad))
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(IoError):
        read_estimate(str(bad))
    with pytest.raises(IoError):
        read_samples(str(bad))
    with pytest.raises(IoError):
        ensure_dir(str(tmp_path / "nope"))
    assert ensure_dir(str(tmp_path / "new" / "deep"), create=True)
    with pytest.raises(IoError):
        write_table(str(tmp_path / "nope" / "f.csv"), ["a"], [])
