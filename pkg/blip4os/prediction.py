#!/usr/bin/env python3
# coding: utf-8
"""
File: prediction.py
Description: Linear predictors of future order statistics and their mean
squared predictive error (MSPE) matrices.

All MSPE matrices are in units of sigma^2 unless rescaled with
`MSPEMatrix.scaled`. Rows of a coefficient matrix act on the r observed order
statistics, one row per target index.

    blup               unbiased, minimum MSPE (delta free)
    blip               minimum MSPE at a given delta = mu/sigma
    kaminsky           location invariant correction of the BLUP
    scale_blip/blup    scale family counterparts (no location)
"""
import threading
from collections import OrderedDict, namedtuple
from dataclasses import dataclass

import numpy as np

from .estimation import check_information, gls_scalars
from .exceptions import InvariantViolation, SingularSystemError
from .utils import check_targets, chol, is_psd, round_sig, solve

KINDS = ("blup", "blip", "kaminsky", "scale_blip", "scale_blup")
MSPE_UNITS = ("sigma2", "data")

Prediction = namedtuple("Prediction", ["values", "original"])


@dataclass(frozen=True, eq=False)
class LinearPredictor:
    """Coefficient rows over the observed order statistics.

    :kind: one of KINDS
    :targets: future indices s_1 < ... < s_l
    :coeffs: l x r coefficient matrix
    :delta: the delta the coefficients were built with, None if delta free
    :n: sample size of the moments used
    """
    kind: str
    targets: tuple
    coeffs: np.ndarray
    delta: float = None
    n: int = None

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float, ndmin=2)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "targets", tuple(int(s) for s in self.targets))
        if self.kind not in KINDS:
            raise ValueError("unknown predictor kind {!r}".format(self.kind))
        if coeffs.shape[0] != len(self.targets):
            raise InvariantViolation("{} coefficient rows for {} targets"
                                     .format(coeffs.shape[0], len(self.targets)))
        if not np.all(np.isfinite(coeffs)):
            raise InvariantViolation("coefficients must be finite")

    @property
    def r(self):
        return self.coeffs.shape[1]

    def to_dict(self, mspe=None):
        record = {"kind": self.kind, "targets": list(self.targets),
                  "delta": self.delta, "coeffs": self.coeffs.tolist()}
        if mspe is not None:
            record["mspe"] = mspe.w.tolist()
            record["mspe_units"] = mspe.units
        return record


@dataclass(frozen=True, eq=False)
class MSPEMatrix:
    """Symmetric l x l matrix of mean squared predictive (cross-)errors."""
    w: np.ndarray
    delta: float = None
    units: str = "sigma2"

    def __post_init__(self):
        w = np.array(self.w, dtype=float, ndmin=2)
        if w.shape[0] != w.shape[1]:
            raise InvariantViolation("MSPE matrix must be square")
        if np.abs(w - w.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(w).max(initial=0.0)):
            raise InvariantViolation("MSPE matrix is not symmetric")
        if not np.all(np.diag(w) > 0):
            raise InvariantViolation("MSPE diagonal must be positive")
        w = (w + w.T) / 2
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if self.units not in MSPE_UNITS:
            raise ValueError("units must be one of {}".format(MSPE_UNITS))

    @property
    def diagonal(self):
        return np.diag(self.w).copy()

    def trace(self):
        return float(np.trace(self.w))

    def det(self):
        return float(np.linalg.det(self.w))

    def quadratic(self, weights):
        """ MSPE of the weighted sum of the targets, w' W w """
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.w.shape[0],):
            raise ValueError("weights must have length {}".format(self.w.shape[0]))
        return float(weights @ self.w @ weights)

    def scaled(self, factor):
        """ The same matrix in data units, e.g. factor = sigma*^2 """
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return MSPEMatrix(self.w * factor, self.delta, units="data")

    def is_psd(self, tol=1e-10):
        return is_psd(self.w, tol)


@dataclass(frozen=True, eq=False)
class GammaSystem:
    """Gamma = Sigma + c c' with c = alpha + delta 1, factorized once."""
    gamma: np.ndarray
    c: np.ndarray
    delta: float
    factor: tuple

    def delta_vec(self, slice_, cols):
        """ Delta_s = omega_s + (alpha_s + delta) c, one column per target """
        return (slice_.omega[:, cols]
                + np.outer(self.c, slice_.alpha_future[cols] + self.delta))

    def solve(self, rhs):
        return solve(self.factor, rhs)


class _GammaCache(object):

    """Thread safe LRU of Gamma factorizations keyed by slice and delta"""

    def __init__(self, maxsize=1024):
        self.maxsize = maxsize
        self._data = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key, build):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        value = build()
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)
        return value

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)


GAMMA_CACHE = _GammaCache()


def gamma_system(slice_, delta):
    """ Gamma system of a slice at delta, shared through GAMMA_CACHE """
    delta = float(delta)
    if not np.isfinite(delta):
        raise ValueError("delta must be finite, got {}".format(delta))

    def build():
        c = slice_.alpha_obs + delta
        gamma = slice_.sigma_obs + np.outer(c, c)
        try:
            factor = chol(gamma, "gamma")
        except SingularSystemError as err:
            # Gamma = Sigma + c c' is positive definite whenever Sigma is
            raise SingularSystemError("internal error: " + str(err))
        gamma.setflags(write=False)
        return GammaSystem(gamma=gamma, c=c, delta=delta, factor=factor)

    if not slice_.digest:
        return build()
    key = (slice_.n, slice_.r, slice_.family, slice_.method,
           round_sig(delta, 12), slice_.digest)
    return GAMMA_CACHE.get(key, build)


def _columns(slice_, targets):
    if targets is None:
        targets = slice_.s_indices
    targets = check_targets(targets, slice_.r, slice_.n) if len(targets) else ()
    if not targets:
        raise ValueError("at least one target index is needed")
    return targets, slice_.columns(targets)


def _blup_terms(slice_, cols):
    g = gls_scalars(slice_)
    check_information(g)
    omega = slice_.omega[:, cols]
    inv_omega = solve(g.factor, omega)
    a = 1.0 - inv_omega.sum(axis=0)
    b = slice_.alpha_future[cols] - slice_.alpha_obs @ inv_omega
    return g, omega, inv_omega, a, b


def blup(slice_, targets=None):
    """ Best linear unbiased predictor rows.

    For each target s the row is
        S^-1 w_s + (V2 A_s - V3 B_s)/D S^-1 1 + (V1 B_s - V3 A_s)/D S^-1 a
    with A_s = 1 - 1'S^-1 w_s and B_s = a_s - a'S^-1 w_s.
    """
    targets, cols = _columns(slice_, targets)
    g, __, inv_omega, a, b = _blup_terms(slice_, cols)
    rows = (inv_omega
            + np.outer(g.inv_one, (g.v2 * a - g.v3 * b) / g.big_delta)
            + np.outer(g.inv_alpha, (g.v1 * b - g.v3 * a) / g.big_delta))
    return LinearPredictor("blup", targets, rows.T, None, slice_.n)


def blup_mspe(slice_, targets=None):
    """ delta free MSPE matrix of the BLUP bundle """
    targets, cols = _columns(slice_, targets)
    g, omega, inv_omega, a, b = _blup_terms(slice_, cols)
    w = (slice_.omega_ff[np.ix_(cols, cols)] - omega.T @ inv_omega
         + (g.v2 * np.outer(a, a) + g.v1 * np.outer(b, b)
            - g.v3 * (np.outer(a, b) + np.outer(b, a))) / g.big_delta)
    return MSPEMatrix((w + w.T) / 2, None)


def blip(slice_, delta, targets=None):
    """ Best linear invariant predictor rows Gamma^-1 Delta_s at delta.

    The same rows are optimal marginally, jointly and simultaneously, so one
    factorization of Gamma serves every target.
    """
    targets, cols = _columns(slice_, targets)
    system = gamma_system(slice_, delta)
    rows = system.solve(system.delta_vec(slice_, cols))
    return LinearPredictor("blip", targets, rows.T, system.delta, slice_.n)


def mspe_matrix(coeffs, slice_, delta, targets=None):
    """ MSPE matrix of arbitrary coefficient rows at delta = mu/sigma.

    With u = A1 - 1 and v = A alpha - alpha_s the bias is sigma (delta u + v),
    hence W = g g' + A S A' - A W_s - W_s' A' + W_ff with g = delta u + v.
    """
    delta = float(delta)
    if not np.isfinite(delta):
        raise ValueError("delta must be finite, got {}".format(delta))
    targets, cols = _columns(slice_, targets)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape != (len(targets), slice_.r):
        raise ValueError("coefficient matrix must have shape {}, got {}"
                         .format((len(targets), slice_.r), coeffs.shape))
    omega = slice_.omega[:, cols]
    bias = delta * (coeffs.sum(axis=1) - 1.0) + (coeffs @ slice_.alpha_obs
                                                 - slice_.alpha_future[cols])
    cross = coeffs @ omega
    w = (np.outer(bias, bias) + coeffs @ slice_.sigma_obs @ coeffs.T
         - cross - cross.T + slice_.omega_ff[np.ix_(cols, cols)])
    return MSPEMatrix((w + w.T) / 2, delta)


def blip_mspe(predictor, slice_, delta_eval=None):
    """ MSPE matrix of a predictor evaluated at delta_eval (defaults to the
    delta it was built with) """
    if delta_eval is None:
        delta_eval = predictor.delta
    if delta_eval is None:
        raise ValueError("a {} predictor carries no delta, pass delta_eval"
                         .format(predictor.kind))
    return mspe_matrix(predictor.coeffs, slice_, delta_eval, predictor.targets)


def _kaminsky_terms(slice_, cols):
    g, __, __, a, b = _blup_terms(slice_, cols)
    c22 = g.v1 / g.big_delta
    c12 = (b * g.v1 - a * g.v3) / g.big_delta
    sigma_weights = (g.v1 * g.inv_alpha - g.v3 * g.inv_one) / g.big_delta
    return c12, c22, sigma_weights


def kaminsky_predictor(slice_, targets=None):
    """ BLUP rows shrunk by c12/(1 + c22) times the sigma* weights """
    targets, cols = _columns(slice_, targets)
    c12, c22, sigma_weights = _kaminsky_terms(slice_, cols)
    rows = blup(slice_, targets).coeffs - np.outer(c12 / (1 + c22), sigma_weights)
    return LinearPredictor("kaminsky", targets, rows, None, slice_.n)


def kaminsky_blip(slice_, blue, sample, target=None):
    """ Kaminsky form BLIP of one target: (prediction, MSPE in sigma^2 units) """
    if target is None:
        if slice_.ell != 1:
            raise ValueError("pick one target out of {}".format(slice_.s_indices))
        target = slice_.s_indices[0]
    targets, cols = _columns(slice_, [target])
    c12, c22, __ = _kaminsky_terms(slice_, cols)
    k = float(c12[0] / (1 + c22))
    blup_value = float(predict(blup(slice_, targets), sample).values[0])
    mspe = float(blup_mspe(slice_, targets).w[0, 0] - c12[0] ** 2 / (1 + c22))
    return blup_value - k * blue.sigma_star, mspe


def scale_blip(slice_, targets=None):
    """ Scale family BLIP rows (S + a a')^-1 (w_s + a_s a) """
    targets, cols = _columns(slice_, targets)
    system = gamma_system(slice_, 0.0)
    rows = system.solve(system.delta_vec(slice_, cols))
    return LinearPredictor("scale_blip", targets, rows.T, None, slice_.n)


def scale_blup(slice_, targets=None):
    """ Scale family BLUP rows S^-1 w_s + (B_s / V2) S^-1 a """
    targets, cols = _columns(slice_, targets)
    g = gls_scalars(slice_)
    inv_omega = solve(g.factor, slice_.omega[:, cols])
    b = slice_.alpha_future[cols] - slice_.alpha_obs @ inv_omega
    rows = inv_omega + np.outer(g.inv_alpha, b / g.v2)
    return LinearPredictor("scale_blup", targets, rows.T, None, slice_.n)


def scale_blup_mspe(slice_, targets=None):
    targets, cols = _columns(slice_, targets)
    g = gls_scalars(slice_)
    omega = slice_.omega[:, cols]
    inv_omega = solve(g.factor, omega)
    b = slice_.alpha_future[cols] - slice_.alpha_obs @ inv_omega
    w = (slice_.omega_ff[np.ix_(cols, cols)] - omega.T @ inv_omega
         + np.outer(b, b) / g.v2)
    return MSPEMatrix((w + w.T) / 2, None)


def scale_mspe(predictor, slice_):
    """ MSPE matrix in the scale family, where delta is identically zero """
    return MSPEMatrix(mspe_matrix(predictor.coeffs, slice_, 0.0,
                                  predictor.targets).w, None)


def predict(predictor, sample):
    """ Apply the coefficient rows to the observed values. For log
    transformed samples `original` holds the back transformed predictions. """
    if predictor.r != sample.r:
        raise ValueError("predictor expects r={}, sample has r={}"
                         .format(predictor.r, sample.r))
    if predictor.n is not None and predictor.n != sample.n:
        raise ValueError("predictor was built for n={}, sample has n={}"
                         .format(predictor.n, sample.n))
    values = predictor.coeffs @ sample.x
    original = np.exp(values) if sample.transform == "log" else values.copy()
    return Prediction(values, original)


def combine(predictor, weights):
    """ Coefficients of the best predictor of sum_i w_i X_{s_i} """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(predictor.targets),):
        raise ValueError("weights must have length {}".format(len(predictor.targets)))
    return weights @ predictor.coeffs


def dominance_gap(optimal, rival_coeffs, slice_, delta, weights):
    """ w' M_rival w - w' M_optimal w at delta, non-negative for the BLIP """
    if optimal.delta is None or not np.isclose(delta, optimal.delta,
                                               rtol=1e-12, atol=0):
        raise ValueError("delta {} differs from the delta {} the predictor "
                         "was built with".format(delta, optimal.delta))
    rival_coeffs = np.asarray(rival_coeffs, dtype=float)
    if rival_coeffs.shape != optimal.coeffs.shape:
        raise ValueError("rival coefficients must have shape {}, got {}"
                         .format(optimal.coeffs.shape, rival_coeffs.shape))
    rival = mspe_matrix(rival_coeffs, slice_, delta, optimal.targets)
    best = mspe_matrix(optimal.coeffs, slice_, delta, optimal.targets)
    return rival.quadratic(weights) - best.quadratic(weights)
