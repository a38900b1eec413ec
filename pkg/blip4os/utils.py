#!/usr/bin/env python3
# coding: utf-8
import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

try:
    from .exceptions import SingularSystemError
except (SystemError, ImportError):
    from exceptions import SingularSystemError


def parse_targets(text):
    """
    Parses a comma separated list of future indices.
    >>> parse_targets("10,15")
    [10, 15]
    >>> parse_targets(" 14 ")
    [14]
    >>> parse_targets([11, 12])
    [11, 12]
    """
    if isinstance(text, str):
        return [int(tok) for tok in text.split(",") if tok.strip()]
    return [int(tok) for tok in text]


def parse_grid(text):
    """
    Parses a `start:stop:step` grid, both ends included.
    >>> parse_grid("0.5:2:0.5")
    array([0.5, 1. , 1.5, 2. ])
    >>> parse_grid("1")
    array([1.])
    """
    parts = [float(p) for p in str(text).split(":")]
    if len(parts) == 1:
        return np.asarray(parts)
    if len(parts) != 3 or parts[2] <= 0:
        raise ValueError("grid must be start:stop:step with step > 0")
    start, stop, step = parts
    num = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(num)


def check_targets(targets, r, n):
    """
    Validates future indices against the censoring index r and sample size n.
    >>> check_targets([10, 15], 9, 15)
    (10, 15)
    >>> check_targets([9], 9, 15)
    Traceback (most recent call last):
    ...
    ValueError: target indices must lie in (r, n] = (9, 15], got [9]
    """
    targets = [int(s) for s in targets]
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n, got r={}, n={}".format(r, n))
    if any(s <= r or s > n for s in targets):
        raise ValueError("target indices must lie in (r, n] = ({}, {}], got {}"
                         .format(r, n, targets))
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate target indices {}".format(targets))
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise ValueError("target indices must be strictly increasing, got {}"
                         .format(targets))
    return tuple(targets)


def round_sig(x, digits=12):
    """
    Rounds to significant digits, used for cache keys.
    >>> round_sig(1.3280000000000001)
    1.328
    >>> round_sig(0.0)
    0.0
    """
    return float("{:.{}g}".format(x, digits))


def log_grid(lo, hi, num=512):
    """
    Log-spaced grid on [lo, hi], lo > 0.
    >>> log_grid(1, 100, 3)[[0, -1]]
    array([  1., 100.])
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi, got ({}, {})".format(lo, hi))
    return np.geomspace(lo, hi, num)


def is_psd(M, tol=1e-10):
    """
    >>> is_psd(np.eye(2))
    True
    >>> is_psd(np.array([[1., 2.], [2., 1.]]))
    False
    """
    M = np.asarray(M)
    return bool(np.all(np.linalg.eigvalsh((M + M.T) / 2) >= -tol))


def chol(A, what="matrix"):
    """ Cholesky factor of a positive definite matrix, suitable for `solve` """
    try:
        return cho_factor(np.asarray(A, dtype=float), lower=True)
    except LinAlgError as err:
        raise SingularSystemError("{} is not positive definite ({})"
                                  .format(what, err))


def solve(factor, b):
    return cho_solve(factor, b)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
