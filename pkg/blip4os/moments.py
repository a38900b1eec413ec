#!/usr/bin/env python3
# coding: utf-8
"""
File: moments.py
Description: Means and covariances of standardized order statistics.

Every predictor in this package is a function of alpha = E[Z_{i:n}] and
Sigma = Cov(Z_{i:n}, Z_{j:n}). They are computed once per (family, n) by one
of three engines:

    closed      exact formulas (exponential, uniform)
    quadrature  Gauss-Legendre panels in the quantile domain u = F(z)
    montecarlo  sorted draws, see `simulation.empirical_moments`

and persisted as JSON moment files.
"""
import hashlib
import json
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import stats
from scipy.integrate import quad
from scipy.special import betaln

from .exceptions import (InvariantViolation, MomentFileError, MomentWarning,
                         QuadratureError, SingularSystemError)
from .utils import chol, check_targets

FAMILIES = ("exponential", "uniform", "normal", "gumbel", "custom")
METHODS = ("closed", "quadrature", "montecarlo")
MAX_QUADRATURE_N = 200

# Standardized parents, documented in every moment file.
CONVENTIONS = {
    "exponential": "f(z) = exp(-z), z > 0",
    "uniform": "f(z) = 1, 0 < z < 1",
    "normal": "f(z) = exp(-z^2/2)/sqrt(2 pi)",
    "gumbel": "maximum form f(z) = exp(-z - exp(-z))",
    "custom": "user supplied quantile function",
}

_SCIPY_PARENTS = {
    "exponential": stats.expon,
    "uniform": stats.uniform,
    "normal": stats.norm,
    "gumbel": stats.gumbel_r,
}

_SECOND_MOMENTS = {
    "exponential": 2.0,
    "uniform": 1.0 / 3.0,
    "normal": 1.0,
    "gumbel": np.pi ** 2 / 6 + np.euler_gamma ** 2,
}


class ParentModel(object):

    """The standardized parent distribution and how its order statistic
    moments are obtained.

    :family: one of exponential, uniform, normal, gumbel, custom
    :method: closed, quadrature or montecarlo
    :quad_rel_tol: relative tolerance of the quadrature engine
    :mc_reps: replications of the Monte Carlo engine
    :mc_seed: seed of the Monte Carlo engine
    :quantile: standardized quantile function Q:(0,1) -> R, custom only
    :n_jobs: joblib workers for the Monte Carlo engine
    """

    def __init__(self, family, method="quadrature", quad_rel_tol=1e-8,
                 mc_reps=10 ** 6, mc_seed=0, quantile=None, n_jobs=1):
        family, method = str(family).lower(), str(method).lower()
        if family not in FAMILIES:
            raise ValueError("unknown family '{}', expected one of {}"
                             .format(family, FAMILIES))
        if method not in METHODS:
            raise ValueError("unknown method '{}', expected one of {}"
                             .format(method, METHODS))
        if method == "closed" and family not in ("exponential", "uniform"):
            raise ValueError("closed form moments exist only for the "
                             "exponential and uniform families, not " + family)
        if family == "custom":
            if not callable(quantile):
                raise ValueError("the custom family needs a quantile function")
            probe = np.asarray(quantile(np.array([0.1, 0.5, 0.9])), dtype=float)
            if not np.all(np.diff(probe) > 0):
                raise ValueError("the quantile function must be strictly increasing")
        if not quad_rel_tol > 0:
            raise ValueError("quad_rel_tol must be positive")
        self.family = family
        self.method = method
        self.quad_rel_tol = float(quad_rel_tol)
        self.mc_reps = int(mc_reps)
        self.mc_seed = None if mc_seed is None else int(mc_seed)
        self.quantile = quantile
        self.n_jobs = n_jobs

    def __repr__(self):
        return "ParentModel(family={!r}, method={!r})".format(self.family,
                                                             self.method)

    def ppf(self, u):
        """ Q(u) """
        if self.family == "custom":
            return np.asarray(self.quantile(u), dtype=float)
        if self.family == "gumbel":
            return -np.log(-np.log(u))
        return _SCIPY_PARENTS[self.family].ppf(u)

    def isf(self, q):
        """ Q(1 - q), accurate for small q """
        if self.family == "custom":
            # 1 - q rounds to 1 below machine epsilon
            u = np.minimum(1.0 - np.asarray(q, dtype=float), np.nextafter(1.0, 0.0))
            return np.asarray(self.quantile(u), dtype=float)
        if self.family == "gumbel":
            return -np.log(-np.log1p(-np.asarray(q, dtype=float)))
        return _SCIPY_PARENTS[self.family].isf(q)

    def quantile_pair(self, u, uc):
        """ Q at points given both as u and as 1 - u, picking the accurate side """
        u, uc = np.asarray(u, dtype=float), np.asarray(uc, dtype=float)
        out = np.empty(np.broadcast(u, uc).shape)
        low = u <= 0.5
        out[low] = self.ppf(u[low])
        out[~low] = self.isf(uc[~low])
        return out

    def rvs(self, size, random_state):
        """ Standardized draws """
        if self.family == "custom":
            return self.ppf(random_state.random(size))
        return _SCIPY_PARENTS[self.family].rvs(size=size,
                                               random_state=random_state)

    @property
    def second_moment(self):
        """ E[Z^2] of the standardized parent """
        if self.family in _SECOND_MOMENTS:
            return _SECOND_MOMENTS[self.family]
        value, __ = quad(lambda u: self.ppf(np.atleast_1d(u))[0] ** 2, 0, 1,
                         limit=200)
        return value


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Full-sample standardized moments alpha (n) and sigma (n x n)."""
    n: int
    alpha: np.ndarray
    sigma: np.ndarray
    family: str
    method: str
    tolerance: float = 0.0
    seed: int = None
    alpha_se: np.ndarray = None
    sigma_se: np.ndarray = None

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        for name, value in (("alpha", alpha), ("sigma", sigma)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        _check_moment_set(self)

    @property
    def provenance(self):
        return {"family": self.family, "method": self.method,
                "tolerance": self.tolerance, "seed": self.seed}

    @property
    def digest(self):
        """ Content hash of alpha and sigma """
        h = hashlib.sha1(self.alpha.tobytes())
        h.update(self.sigma.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class MomentSlice:
    """Observed/future block partition of a MomentSet."""
    n: int
    r: int
    s_indices: tuple
    alpha_obs: np.ndarray
    sigma_obs: np.ndarray
    omega: np.ndarray
    omega_ff: np.ndarray
    alpha_future: np.ndarray
    family: str = ""
    method: str = ""
    digest: str = field(default="")

    @property
    def ell(self):
        return len(self.s_indices)

    def columns(self, targets):
        """ Positions of `targets` within s_indices """
        try:
            return [self.s_indices.index(int(s)) for s in targets]
        except ValueError:
            raise ValueError("targets {} are not a subset of the slice targets {}"
                             .format(list(targets), list(self.s_indices)))


def _check_moment_set(ms):
    n, alpha, sigma = ms.n, ms.alpha, ms.sigma
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvariantViolation("n must be a positive integer, got {!r}".format(n))
    if alpha.shape != (n,) or sigma.shape != (n, n):
        raise InvariantViolation("alpha must have shape ({0},) and sigma ({0}, {0})"
                                 .format(n))
    if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(sigma))):
        raise InvariantViolation("moments must be finite")
    scale = max(1.0, np.abs(sigma).max())
    if np.abs(sigma - sigma.T).max() > 1e-12 * scale:
        raise InvariantViolation("sigma is not symmetric")
    if np.any(np.diff(alpha) <= 0):
        raise InvariantViolation("alpha is not strictly increasing")
    try:
        chol(sigma, "sigma")
    except SingularSystemError:
        raise InvariantViolation("sigma is not positive definite")
    montecarlo = ms.method == "montecarlo"
    if np.any(sigma <= 0):
        if montecarlo:
            warnings.warn("sampled covariances are not all positive", MomentWarning)
        else:
            raise InvariantViolation("sigma has non-positive entries")
    # along a row, covariances decay away from the diagonal
    atol = 10 * max(ms.tolerance, 1e-12) * max(1.0, float(np.max(alpha ** 2)))
    upper = np.triu(sigma)
    rises = np.diff(upper, axis=1)[np.triu_indices(n, k=0, m=n - 1)] if n > 1 else []
    if np.any(np.asarray(rises) > atol):
        if montecarlo or ms.family == "custom":
            warnings.warn("covariances do not decay along rows", MomentWarning)
        else:
            raise InvariantViolation("covariances do not decay along rows")


def compute_moments(model, n, verbose=0):
    """ Full-sample MomentSet of the standardized parent for sample size n """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer, got {!r}".format(n))
    n = int(n)
    if model.method == "closed":
        alpha, sigma = _closed_form(model.family, n)
        return MomentSet(n, alpha, sigma, model.family, "closed", 0.0)
    if model.method == "quadrature":
        if n > MAX_QUADRATURE_N:
            raise ValueError("quadrature supports n <= {}, got {}"
                             .format(MAX_QUADRATURE_N, n))
        alpha, sigma = quadrature_moments(model, n, verbose=verbose)
        return MomentSet(n, alpha, sigma, model.family, "quadrature",
                         model.quad_rel_tol)
    from .simulation import empirical_moments
    return empirical_moments(model, n, model.mc_reps, model.mc_seed,
                             n_jobs=model.n_jobs, verbose=verbose)


def _closed_form(family, n):
    i = np.arange(1, n + 1)
    if family == "exponential":
        # exponential spacings are independent with mean 1/(n-k+1)
        alpha = np.cumsum(1.0 / (n - i + 1))
        var = np.cumsum(1.0 / (n - i + 1) ** 2)
        sigma = var[np.minimum.outer(i, i) - 1]
    else:
        alpha = i / (n + 1.0)
        lo, hi = np.minimum.outer(i, i), np.maximum.outer(i, i)
        sigma = lo * (n - hi + 1) / ((n + 1.0) ** 2 * (n + 2.0))
    return alpha, sigma


def _half_rule(level, order=16, depth=16):
    """ Gauss-Legendre panels on (0, 1/2], geometrically graded towards 0.

    Returns nodes and weights. Panels shrink by a factor 10**(1/2**level)
    down to 10**-depth, the bulk (0.1, 0.5] is split into 4 * 2**level equal
    panels.
    """
    x, w = leggauss(order)
    x, w = (x + 1) / 2, w / 2
    per_decade = 2 ** level
    breaks = np.concatenate((
        [0.0],
        10.0 ** np.linspace(-depth, -1, (depth - 1) * per_decade + 1),
        np.linspace(0.1, 0.5, 4 * per_decade + 1)[1:]))
    lo, width = breaks[:-1], np.diff(breaks)
    nodes = (lo[:, None] + width[:, None] * x[None, :]).ravel()
    weights = (width[:, None] * w[None, :]).ravel()
    return nodes, weights


def _unit_rule(level):
    """ Symmetric rule on (0, 1) as (u, 1 - u, weight), both sides exact """
    x, w = _half_rule(level)
    u = np.concatenate((x, 1.0 - x[::-1]))
    uc = np.concatenate((1.0 - x, x[::-1]))
    return u, uc, np.concatenate((w, w[::-1]))


def _beta_density(a, b, u, uc):
    """ Beta(a, b) densities, rows over parameter pairs, columns over nodes """
    a, b = np.asarray(a, dtype=float)[:, None], np.asarray(b, dtype=float)[:, None]
    log_pdf = ((a - 1) * np.log(u)[None, :] + (b - 1) * np.log(uc)[None, :]
               - betaln(a, b))
    return np.exp(log_pdf)


def _quadrature_level(model, n, level, block=512):
    u, uc, w = _unit_rule(level)
    q = model.quantile_pair(u, uc)
    i = np.arange(1, n + 1)
    # E[g(Z_{i:n})] = E[g(Q(U))] with U ~ Beta(i, n - i + 1)
    f = _beta_density(i, n - i + 1, u, uc) * w[None, :]
    first, second = f @ q, f @ q ** 2

    pi, pj = np.triu_indices(n, k=1)
    product = np.empty(len(pi))
    if len(pi):
        # U_{i:n} = U_{j:n} T with T ~ Beta(i, j - i) independent of U_{j:n},
        # so E[Z_i Z_j] = E[Q(V) Q(V T)], V ~ Beta(j, n - j + 1)
        gv = (f * q[None, :]).T
        chunk = max(1, int(2e7 // len(u)))
        for lo in range(0, len(pi), chunk):
            ci, cj = pi[lo:lo + chunk], pj[lo:lo + chunk]
            ht = _beta_density(ci + 1, cj - ci, u, uc).T * w[:, None]
            acc = np.zeros(len(ci))
            for start in range(0, len(u), block):
                v, vc = u[start:start + block], uc[start:start + block]
                prod = v[:, None] * u[None, :]
                prodc = vc[:, None] + v[:, None] * uc[None, :]
                inner = model.quantile_pair(prod, prodc) @ ht
                acc += np.einsum("vp,vp->p", gv[start:start + block][:, cj], inner)
            product[lo:lo + chunk] = acc
    raw = np.diag(second)
    raw[pi, pj] = product
    raw[pj, pi] = product
    return first, raw


def quadrature_moments(model, n, max_level=3, verbose=0):
    """ alpha and sigma by refining the panel rule until two successive levels
    agree to `model.quad_rel_tol` """
    tol = model.quad_rel_tol
    previous = None
    for level in range(max_level + 1):
        first, raw = _quadrature_level(model, n, level)
        if previous is not None:
            err = max(np.max(np.abs(first - previous[0]) / (np.abs(first) + 1e-3)),
                      np.max(np.abs(raw - previous[1]) / (np.abs(raw) + 1e-3)))
            if verbose > 0:
                print("[moments] {} n={} level {}: relative change {:.2e}"
                      .format(model.family, n, level, err), file=sys.stderr)
            if err <= tol:
                sigma = raw - np.outer(first, first)
                return first, (sigma + sigma.T) / 2
        previous = (first, raw)
    raise QuadratureError("quadrature for {} n={} did not reach relative "
                          "tolerance {:g} (last change {:.2e})"
                          .format(model.family, n, tol, err))


def slice_moments(ms, r, s_indices):
    """ Observed (1..r) versus future (s_indices) blocks of a MomentSet.

    Indices are 1-based like the order statistics they refer to. An empty
    s_indices gives an estimation-only slice.
    """
    r = int(r)
    if not 1 <= r <= ms.n:
        raise ValueError("need 1 <= r <= n, got r={}, n={}".format(r, ms.n))
    s = check_targets(s_indices, r, ms.n) if len(s_indices) else ()
    cols = np.asarray(s, dtype=int) - 1
    alpha, sigma = ms.alpha, ms.sigma
    sigma_obs = sigma[:r, :r]
    chol(sigma_obs, "sigma_obs")
    h = hashlib.sha1(alpha[:r].tobytes())
    h.update(sigma_obs.tobytes())
    return MomentSlice(n=ms.n, r=r, s_indices=s,
                       alpha_obs=alpha[:r].copy(),
                       sigma_obs=sigma_obs.copy(),
                       omega=sigma[:r][:, cols].copy(),
                       omega_ff=sigma[np.ix_(cols, cols)].copy(),
                       alpha_future=alpha[cols].copy(),
                       family=ms.family, method=ms.method,
                       digest=h.hexdigest()[:16])


def save_moments(ms, path):
    record = {
        "n": int(ms.n),
        "family": ms.family,
        "method": ms.method,
        "tolerance": float(ms.tolerance),
        "seed": ms.seed,
        "convention": CONVENTIONS[ms.family],
        "alpha": ms.alpha.tolist(),
        "sigma": ms.sigma.tolist(),
    }
    if ms.alpha_se is not None:
        record["alpha_se"] = np.asarray(ms.alpha_se).tolist()
    if ms.sigma_se is not None:
        record["sigma_se"] = np.asarray(ms.sigma_se).tolist()
    with open(path, "w") as fh:
        json.dump(record, fh)


def load_moments(path):
    with open(path, "r") as fh:
        try:
            record = json.load(fh)
        except json.JSONDecodeError as err:
            raise MomentFileError("{} is not a moment file: {}".format(path, err))
    missing = [k for k in ("n", "family", "method", "tolerance", "alpha", "sigma")
               if k not in record]
    if missing:
        raise MomentFileError("{} lacks fields {}".format(path, missing))
    if record["family"] not in FAMILIES or record["method"] not in METHODS:
        raise MomentFileError("{} has unknown family {!r} or method {!r}"
                              .format(path, record["family"], record["method"]))
    try:
        alpha = np.asarray(record["alpha"], dtype=float)
        sigma = np.asarray(record["sigma"], dtype=float)
    except (TypeError, ValueError) as err:
        raise MomentFileError("{} has malformed moments: {}".format(path, err))
    se = {k: np.asarray(record[k], dtype=float)
          for k in ("alpha_se", "sigma_se") if record.get(k) is not None}
    return MomentSet(n=record["n"], alpha=alpha, sigma=sigma,
                     family=record["family"], method=record["method"],
                     tolerance=float(record["tolerance"]),
                     seed=record.get("seed"), **se)
