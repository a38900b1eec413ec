#!/usr/bin/env python3
# coding: utf-8
"""
File: estimation.py
Description: Best linear unbiased estimation of location and scale from a
Type-II right censored sample.
"""
import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (DegenerateScaleError, InvariantViolation,
                         PluginDeltaWarning, SingularSystemError)
from .utils import chol, solve

TRANSFORMS = ("none", "log")

# Generalized least squares quantities of an observed block. inv_one and
# inv_alpha are Sigma^-1 1 and Sigma^-1 alpha.
GLSScalars = namedtuple("GLSScalars", ["factor", "inv_one", "inv_alpha",
                                       "v1", "v2", "v3", "big_delta"])


@dataclass(frozen=True, eq=False)
class CensoredSample:
    """The first r order statistics of a sample of size n.

    :n: sample size
    :r: number of observed order statistics
    :x: observed values x_1 <= ... <= x_r, after the transform
    :transform: 'none' or 'log', the transform applied to the raw data
    """
    n: int
    r: int
    x: np.ndarray
    transform: str = "none"

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if self.transform not in TRANSFORMS:
            raise ValueError("transform must be one of {}, got {!r}"
                             .format(TRANSFORMS, self.transform))
        if not 1 <= self.r <= self.n:
            raise InvariantViolation("need 1 <= r <= n, got r={}, n={}"
                                     .format(self.r, self.n))
        if len(x) != self.r:
            raise InvariantViolation("expected {} observed values, got {}"
                                     .format(self.r, len(x)))
        if not np.all(np.isfinite(x)):
            raise InvariantViolation("observed values must be finite")
        if np.any(np.diff(x) < 0):
            raise InvariantViolation("observed values must be non-decreasing")


@dataclass(frozen=True, eq=False)
class BlueResult:
    """BLUEs of (mu, sigma). Variances are in units of sigma^2."""
    mu_star: float
    sigma_star: float
    var_mu: float
    var_sigma: float
    cov_mu_sigma: float
    big_delta: float
    v1: float
    v2: float
    v3: float
    mu_weights: np.ndarray = field(repr=False, default=None)
    sigma_weights: np.ndarray = field(repr=False, default=None)

    @property
    def delta_unstable(self):
        """ True when sigma* is negligible against mu* """
        return abs(self.sigma_star) < 1e-8 * abs(self.mu_star)

    @property
    def information(self):
        """ [[V1, V3], [V3, V2]], whose determinant is big_delta """
        return np.array([[self.v1, self.v3], [self.v3, self.v2]])

    def to_dict(self):
        return {"mu_star": self.mu_star, "sigma_star": self.sigma_star,
                "var_mu": self.var_mu, "var_sigma": self.var_sigma,
                "cov_mu_sigma": self.cov_mu_sigma,
                "big_delta": self.big_delta,
                "v1": self.v1, "v2": self.v2, "v3": self.v3}


@dataclass(frozen=True, eq=False)
class ScaleBlueResult:
    """BLUE of sigma in the scale family, variance in units of sigma^2."""
    sigma_star: float
    var_sigma: float
    v2: float
    sigma_weights: np.ndarray = field(repr=False, default=None)


def gls_scalars(slice_):
    """ V1 = 1'S^-1 1, V2 = a'S^-1 a, V3 = 1'S^-1 a and Delta = V1 V2 - V3^2
    of the observed block, via one Cholesky factorization """
    factor = chol(slice_.sigma_obs, "sigma_obs")
    ones = np.ones(slice_.r)
    inv_one = solve(factor, ones)
    inv_alpha = solve(factor, slice_.alpha_obs)
    v1 = float(ones @ inv_one)
    v2 = float(slice_.alpha_obs @ inv_alpha)
    v3 = float(ones @ inv_alpha)
    return GLSScalars(factor, inv_one, inv_alpha, v1, v2, v3, v1 * v2 - v3 * v3)


def check_information(g):
    """ Raise SingularSystemError unless V1 V2 - V3^2 is positive relative to
    V1 V2. With r = 1 the determinant is zero up to rounding. """
    if not g.big_delta > 1e-12 * g.v1 * g.v2:
        raise SingularSystemError("[[V1, V3], [V3, V2]] is singular "
                                  "(V1 V2 - V3^2 = {:g})".format(g.big_delta))


def _check_match(sample, slice_):
    if (sample.n, sample.r) != (slice_.n, slice_.r):
        raise ValueError("sample (n={}, r={}) does not match moments (n={}, r={})"
                         .format(sample.n, sample.r, slice_.n, slice_.r))


def blue(sample, slice_):
    """ Generalized least squares estimates of location and scale.

    >>> from blip4os.moments import ParentModel, compute_moments, slice_moments
    >>> ms = compute_moments(ParentModel("exponential", "closed"), 2)
    >>> b = blue(CensoredSample(2, 2, [1.0, 2.0]), slice_moments(ms, 2, []))
    >>> round(b.mu_star, 12), round(b.sigma_star, 12)
    (0.5, 1.0)
    """
    _check_match(sample, slice_)
    if sample.r < 2:
        raise ValueError("sigma is not identifiable from r={} observation"
                         .format(sample.r))
    g = gls_scalars(slice_)
    check_information(g)
    mu_weights = (g.v2 * g.inv_one - g.v3 * g.inv_alpha) / g.big_delta
    sigma_weights = (g.v1 * g.inv_alpha - g.v3 * g.inv_one) / g.big_delta
    mu_weights.setflags(write=False)
    sigma_weights.setflags(write=False)
    return BlueResult(mu_star=float(mu_weights @ sample.x),
                      sigma_star=float(sigma_weights @ sample.x),
                      var_mu=g.v2 / g.big_delta,
                      var_sigma=g.v1 / g.big_delta,
                      cov_mu_sigma=-g.v3 / g.big_delta,
                      big_delta=g.big_delta,
                      v1=g.v1, v2=g.v2, v3=g.v3,
                      mu_weights=mu_weights,
                      sigma_weights=sigma_weights)


def delta_hat(b):
    """ Plug-in location to scale ratio mu*/sigma*

    >>> delta_hat(BlueResult(0.0, 2.0, 1, 1, 0, 1, 1, 1, 0))
    0.0
    """
    if b.sigma_star == 0:
        raise DegenerateScaleError("sigma* is zero, delta = mu*/sigma* is undefined")
    if b.delta_unstable:
        warnings.warn("|sigma*| = {:.3g} is negligible against |mu*| = {:.3g}, "
                      "the plug-in delta is unstable"
                      .format(abs(b.sigma_star), abs(b.mu_star)),
                      PluginDeltaWarning)
    return b.mu_star / b.sigma_star


def scale_blue(sample, slice_):
    """ BLUE of sigma when the location is known to be zero """
    _check_match(sample, slice_)
    g = gls_scalars(slice_)
    weights = g.inv_alpha / g.v2
    weights.setflags(write=False)
    return ScaleBlueResult(sigma_star=float(weights @ sample.x),
                           var_sigma=1.0 / g.v2, v2=g.v2,
                           sigma_weights=weights)
