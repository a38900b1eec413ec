import os

import numpy as np
import pytest

from blip4os.datasets import CSVData, cached_moments, censor, read_data
from blip4os.moments import ParentModel

LEAD_CSV = os.path.join(os.path.dirname(__file__), "..", "example", "lead.csv")


def test_censor():
    sample = censor([3.0, 1.0, 2.0, 5.0], 2)
    assert (sample.n, sample.r) == (4, 2)
    assert list(sample.x) == [1.0, 2.0]
    sample = censor([2.0, 1.0], 2, n=6)
    assert (sample.n, sample.r) == (6, 2)
    logged = censor([np.e, 1.0], 2, log=True)
    assert logged.transform == "log"
    assert np.allclose(logged.x, [0.0, 1.0])
    with pytest.raises(ValueError):
        censor([0.0, 1.0], 2, log=True)
    with pytest.raises(ValueError):
        censor([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        censor([1.0, 2.0, 3.0], 2, n=2)


def test_read_data(tmp_path):
    path = tmp_path / "sample.csv"
    path.write_text("# two values\n2.5\n\n1.5\n")
    assert list(read_data(str(path))) == [2.5, 1.5]
    path.write_text("value\n3\n")
    assert list(read_data(str(path))) == [3.0]
    path.write_text("1\nmany\n")
    with pytest.raises(ValueError):
        read_data(str(path))
    with pytest.raises(OSError):
        read_data(str(tmp_path / "missing.csv"))


def test_lead_file():
    sample = CSVData(LEAD_CSV).load(9, log=True)
    assert (sample.n, sample.r) == (15, 9)
    assert abs(sample.x[-1] - np.log(16)) <= 1e-12


def test_cached_moments(tmp_path):
    model = ParentModel("exponential", "closed")
    first = cached_moments(model, 4, cache_dir=str(tmp_path))
    assert os.listdir(str(tmp_path)) == ["exponential-closed-n4.json"]
    second = cached_moments(model, 4, cache_dir=str(tmp_path))
    assert second.digest == first.digest
    (tmp_path / "exponential-closed-n4.json").write_text("garbage")
    assert cached_moments(model, 4, cache_dir=str(tmp_path)).digest == first.digest
    custom = ParentModel("custom", quantile=lambda u: u)
    cached_moments(custom, 3, cache_dir=str(tmp_path / "custom"))
    assert not os.path.exists(str(tmp_path / "custom"))
