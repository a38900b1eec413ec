import doctest

import numpy as np
import pytest

import blip4os.utils
from blip4os.exceptions import SingularSystemError
from blip4os.utils import check_targets, chol, parse_grid, parse_targets, solve


def test_doctests():
    failures, __ = doctest.testmod(blip4os.utils)
    assert failures == 0


def test_parse_targets():
    assert parse_targets("10,15") == [10, 15]
    assert parse_targets("10, 11,") == [10, 11]
    assert parse_targets((5,)) == [5]


def test_parse_grid():
    grid = parse_grid("0.01:10:0.01")
    assert len(grid) == 1000
    assert grid[0] == pytest.approx(0.01)
    assert grid[-1] == pytest.approx(10.0)
    with pytest.raises(ValueError):
        parse_grid("1:2")
    with pytest.raises(ValueError):
        parse_grid("1:2:0")


def test_check_targets():
    assert check_targets([10, 15], 9, 15) == (10, 15)
    with pytest.raises(ValueError):
        check_targets([16], 9, 15)
    with pytest.raises(ValueError):
        check_targets([10, 10], 9, 15)
    with pytest.raises(ValueError):
        check_targets([12, 11], 9, 15)
    with pytest.raises(ValueError):
        check_targets([10], 0, 15)


def test_chol_solve():
    A = np.array([[4.0, 1.0], [1.0, 3.0]])
    b = np.array([1.0, 2.0])
    assert np.allclose(A @ solve(chol(A), b), b)
    with pytest.raises(SingularSystemError):
        chol(np.array([[1.0, 2.0], [2.0, 1.0]]))
    # numerical failures are ArithmeticErrors
    with pytest.raises(ArithmeticError):
        chol(np.zeros((2, 2)))
