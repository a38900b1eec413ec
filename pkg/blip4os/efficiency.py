#!/usr/bin/env python3
# coding: utf-8
"""
File: efficiency.py
Description: Efficiency of the BLIP against the BLUP as a function of
delta = mu/sigma.

    re1    MSPE(BLIP) / MSPE(BLUP) of one target
    d      det W(BLIP) / det W(BLUP) of a pair of targets
    trace  tr W(BLIP) / tr W(BLUP) of a pair of targets

Values below one favour the BLIP. Every operation accepts either an
EfficiencySpec or any callable delta -> efficiency.
"""
import sys
from dataclasses import dataclass
from math import sqrt

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import trapezoid
from scipy.optimize import bisect

from .exceptions import BoundaryMaximumError, NumericalError
from .moments import ParentModel, compute_moments, slice_moments
from .prediction import (blip, blup, blup_mspe, mspe_matrix, scale_blip,
                         scale_blup_mspe, scale_mspe)
from .utils import check_targets, log_grid

KINDS = ("re1", "d", "trace")
MODES = ("matched", "plugin")
PHI_RATIO = 2 / (1 + sqrt(5))


@dataclass(frozen=True)
class EfficiencySpec:
    kind: str
    n: int
    r: int
    targets: tuple
    model: ParentModel = None

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in KINDS:
            raise ValueError("efficiency kind must be one of {}, got {!r}"
                             .format(KINDS, self.kind))
        object.__setattr__(self, "kind", kind)
        targets = check_targets(self.targets, self.r, self.n)
        object.__setattr__(self, "targets", targets)
        wanted = 1 if kind == "re1" else 2
        if len(targets) != wanted:
            raise ValueError("{} efficiency needs exactly {} target(s), got {}"
                             .format(kind, wanted, list(targets)))

    @property
    def label(self):
        return ",".join(str(s) for s in self.targets)


def _functional(kind, w):
    if kind == "re1":
        return w[0, 0]
    if kind == "d":
        return w[0, 0] * w[1, 1] - w[0, 1] ** 2
    return w[0, 0] + w[1, 1]


class EfficiencyFunction(object):

    """delta -> efficiency of the BLIP against the BLUP.

    :spec: EfficiencySpec
    :moments: full sample MomentSet, computed from spec.model if None
    :mode: 'matched' builds and evaluates the BLIP at the same delta,
           'plugin' builds it once at `build_delta` and evaluates at delta
    :debug_blup: replace the BLIP by the BLUP, efficiency is then one
    :n_jobs: joblib workers used by `values`
    """

    def __init__(self, spec, moments=None, mode="matched", build_delta=None,
                 debug_blup=False, n_jobs=1, verbose=0):
        if mode not in MODES:
            raise ValueError("mode must be one of {}, got {!r}".format(MODES, mode))
        if mode == "plugin" and (build_delta is None or not np.isfinite(build_delta)):
            raise ValueError("plugin mode needs a finite build_delta")
        if moments is None:
            if spec.model is None:
                raise ValueError("either moments or spec.model is required")
            moments = compute_moments(spec.model, spec.n, verbose=verbose)
        if moments.n != spec.n:
            raise ValueError("moments are for n={}, spec has n={}"
                             .format(moments.n, spec.n))
        self.spec = spec
        self.mode = mode
        self.build_delta = build_delta
        self.debug_blup = debug_blup
        self.n_jobs = n_jobs
        self.verbose = verbose
        self.slice_ = slice_moments(moments, spec.r, spec.targets)
        self.reference_ = _functional(spec.kind, blup_mspe(self.slice_).w)
        if not self.reference_ > 0:
            raise NumericalError("degenerate BLUP MSPE functional {:g}"
                                 .format(self.reference_))
        self._fixed = None
        if debug_blup:
            self._fixed = blup(self.slice_).coeffs
        elif mode == "plugin":
            self._fixed = blip(self.slice_, build_delta).coeffs

    def __call__(self, delta):
        delta = float(delta)
        if not np.isfinite(delta):
            raise ValueError("delta must be finite, got {}".format(delta))
        if delta == 0 and self.spec.kind == "re1":
            raise ValueError("RE1 is defined for delta != 0")
        coeffs = self._fixed
        if coeffs is None:
            coeffs = blip(self.slice_, delta).coeffs
        w = mspe_matrix(coeffs, self.slice_, delta).w
        return float(_functional(self.spec.kind, w) / self.reference_)

    def values(self, grid):
        """ Efficiencies on a grid, in grid order """
        grid = np.asarray(grid, dtype=float)
        if self.n_jobs == 1:
            return np.array([self(d) for d in grid])
        return np.array(Parallel(n_jobs=self.n_jobs)(delayed(self)(d) for d in grid))


def _as_function(spec, **kwargs):
    if isinstance(spec, EfficiencySpec):
        return EfficiencyFunction(spec, **kwargs)
    if callable(spec):
        return spec
    raise TypeError("expected an EfficiencySpec or a callable, got {!r}".format(spec))


def _values(fn, grid):
    if isinstance(fn, EfficiencyFunction):
        return fn.values(grid)
    return np.array([float(fn(d)) for d in grid])


def efficiency_at(spec, delta, **kwargs):
    """ Efficiency at a single delta """
    return float(_as_function(spec, **kwargs)(delta))


def _golden_max(f, lo, hi, tol=1e-10, max_iterations=200):
    """ Golden section search for the maximum of a unimodal f on [lo, hi] """
    x1 = hi - PHI_RATIO * (hi - lo)
    x2 = lo + PHI_RATIO * (hi - lo)
    f1, f2 = f(x1), f(x2)
    iteration = 0
    while iteration < max_iterations and abs(hi - lo) > tol:
        if f2 < f1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - PHI_RATIO * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + PHI_RATIO * (hi - lo)
            f2 = f(x2)
        iteration += 1
    return (x1, f1) if f1 >= f2 else (x2, f2)


def find_delta_star(spec, search_interval=(1e-3, 10.0), num=512, **kwargs):
    """ Maximizer of the efficiency over the interval.

    A log spaced scan locates the best grid point, golden section refines it
    between its neighbours. A maximum on either end of the scan is reported
    as BoundaryMaximumError.
    """
    fn = _as_function(spec, **kwargs)
    lo, hi = search_interval
    grid = log_grid(lo, hi, num)
    values = _values(fn, grid)
    k = int(np.argmax(values))
    if k == 0 or k == len(grid) - 1:
        raise BoundaryMaximumError(float(grid[k]), float(values[k]), (lo, hi))
    delta, value = _golden_max(fn, grid[k - 1], grid[k + 1])
    if value < values[k]:
        delta, value = grid[k], values[k]
    return float(delta), float(value)


def iem(spec, delta_max, num=4096, **kwargs):
    """ Integrated efficiency measure, the mean efficiency over (0, delta_max].

    Trapezoid rule on num equispaced nodes; the node at zero is replaced by
    delta_max / num.
    """
    if not delta_max > 0:
        raise ValueError("delta_max must be positive, got {}".format(delta_max))
    fn = _as_function(spec, **kwargs)
    grid = delta_max * np.arange(num) / (num - 1)
    grid[0] = delta_max / num
    values = _values(fn, grid)
    return float(trapezoid(values, dx=1.0) / (num - 1))


def crossings(spec, search_interval=(1e-3, 50.0), num=512, xtol=1e-6, **kwargs):
    """ All delta where the efficiency crosses one, ascending """
    fn = _as_function(spec, **kwargs)
    lo, hi = search_interval
    grid = log_grid(lo, hi, num)
    excess = _values(fn, grid) - 1.0
    roots = []
    for i in range(len(grid) - 1):
        if excess[i] == 0:
            roots.append(float(grid[i]))
        elif excess[i] * excess[i + 1] < 0:
            roots.append(float(bisect(lambda d: fn(d) - 1.0, grid[i], grid[i + 1],
                                      xtol=xtol)))
    if excess[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


@dataclass(frozen=True, eq=False)
class EfficiencyCurve:
    delta_grid: np.ndarray
    values: np.ndarray
    spec: EfficiencySpec = None
    sign: int = 1

    def __post_init__(self):
        if len(self.delta_grid) != len(self.values):
            raise ValueError("grid and values differ in length")
        if not (np.all(np.isfinite(self.values)) and np.all(self.values > 0)):
            raise NumericalError("efficiency values must be finite and positive")

    def to_frame(self):
        spec = self.spec
        return pd.DataFrame({
            "delta": self.sign * np.asarray(self.delta_grid, dtype=float),
            "value": self.values,
            "kind": spec.kind if spec else "",
            "n": spec.n if spec else np.nan,
            "r": spec.r if spec else np.nan,
            "targets": spec.label if spec else ""},
            columns=["delta", "value", "kind", "n", "r", "targets"])

    def to_csv(self, path_or_buf=None):
        return self.to_frame().to_csv(path_or_buf, index=False,
                                      float_format="%.12g")


def curve(spec, delta_grid, sign=1, verbose=0, **kwargs):
    """ Efficiency along a strictly increasing positive grid. sign=-1
    evaluates at -delta for inspecting the negative half line. """
    grid = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    if len(grid) == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("delta grid must be positive and strictly increasing")
    if sign not in (1, -1):
        raise ValueError("sign must be 1 or -1")
    fn = _as_function(spec, **kwargs)
    if verbose > 0:
        print("[efficiency] {} points".format(len(grid)), file=sys.stderr)
    values = _values(fn, sign * grid)
    if not isinstance(spec, EfficiencySpec):
        spec = getattr(spec, "spec", None)
    return EfficiencyCurve(grid, values, spec, sign)


def recommend(spec, delta_hat, **kwargs):
    """ 'blip' when the efficiency at the plug-in delta favours the BLIP """
    value = efficiency_at(spec, delta_hat, **kwargs)
    return ("blip" if value < 1 else "blup"), value


def scale_efficiency(slice_, targets=None):
    """ Per target MSPE(scale BLIP) / MSPE(scale BLUP), delta free """
    best = scale_mspe(scale_blip(slice_, targets), slice_).diagonal
    return best / scale_blup_mspe(slice_, targets).diagonal
