#!/usr/bin/env python3
# coding: utf-8
"""
File: simulation.py
Description: Monte Carlo oracle for order statistic moments and predictor
MSPEs.

Replications are drawn in fixed blocks of BLOCK_SIZE. Block b uses a Philox
stream keyed by (seed, b), so results do not depend on the number of workers.
Block partial sums are merged in block order and standard errors are
delete-one-group jackknife estimates.
"""
import json
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .exceptions import MomentWarning, SingularSystemError
from .moments import MomentSet, ParentModel, compute_moments, slice_moments
from .prediction import (blip, blup, kaminsky_predictor, mspe_matrix,
                         scale_blip)
from .utils import check_targets, chol

BLOCK_SIZE = 10000
MIN_REPS = 10 ** 4
MAX_REPS = 10 ** 9
SIM_KINDS = ("blup", "blip", "kaminsky", "scale")


def block_rng(seed, block):
    """ Counter based generator of one block """
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed, spawn_key=(block,))))


def _blocks(reps):
    """ Sizes of the replication blocks and the jackknife groups per block """
    sizes = [BLOCK_SIZE] * (reps // BLOCK_SIZE)
    if reps % BLOCK_SIZE:
        sizes.append(reps % BLOCK_SIZE)
    # too few blocks for a jackknife: split each into sub groups
    groups = 1 if len(sizes) >= 10 else 10
    return sizes, groups


def _split(z, groups):
    return [p for p in np.array_split(z, min(groups, len(z))) if len(p)]


def _sorted_draws(model, n, seed, block, size):
    rng = block_rng(seed, block)
    return np.sort(np.asarray(model.rvs((size, n), rng), dtype=float), axis=1)


def _jackknife(sums, counts):
    """ Mean and delete-one-group standard errors of grouped sums """
    counts = np.asarray(counts, dtype=float)
    total, count = sums.sum(axis=0), counts.sum()
    if len(counts) < 2:
        return total / count, np.full(total.shape, np.inf)
    shape = (-1,) + (1,) * (sums.ndim - 1)
    leave_out = (total[None] - sums) / (count - counts).reshape(shape)
    g = len(counts)
    spread = ((leave_out - leave_out.mean(axis=0)) ** 2).sum(axis=0)
    return total / count, np.sqrt((g - 1) / g * spread)


def _covariance(s1, s2, count):
    """ Unbiased covariance from sums, broadcasting over leading axes """
    count = np.asarray(count, dtype=float)
    mean = s1 / count[..., None]
    outer = mean[..., :, None] * mean[..., None, :]
    return (s2 - count[..., None, None] * outer) / (count[..., None, None] - 1)


def _jackknife_covariance(s1, s2, counts):
    total1, total2, count = s1.sum(axis=0), s2.sum(axis=0), counts.sum()
    if len(counts) < 2:
        return np.full(total2.shape, np.inf)
    leave_out = _covariance(total1[None] - s1, total2[None] - s2, count - counts)
    g = len(counts)
    spread = ((leave_out - leave_out.mean(axis=0)) ** 2).sum(axis=0)
    return np.sqrt((g - 1) / g * spread)


def _nudge(sigma):
    """ sigma, or sigma + eps I for the smallest of eps, 2 eps, 4 eps, 8 eps
    that is positive definite """
    n = len(sigma)
    eps = 1e-10 * np.trace(sigma) / n
    for nudge in [0.0] + [eps * 2 ** k for k in range(4)]:
        candidate = sigma + nudge * np.eye(n)
        try:
            chol(candidate, "sampled sigma")
        except SingularSystemError:
            continue
        if nudge:
            warnings.warn("sampled sigma nudged by {:.3g} I".format(nudge),
                          MomentWarning)
        return candidate
    raise SingularSystemError("sampled sigma is not positive definite, "
                              "more replications are needed")


def _moment_block(model, n, seed, block, size, groups):
    parts = _split(_sorted_draws(model, n, seed, block, size), groups)
    return ([p.sum(axis=0) for p in parts], [p.T @ p for p in parts],
            [len(p) for p in parts])


def empirical_moments(model, n, reps, seed, n_jobs=1, verbose=0):
    """ Sample mean and covariance of sorted standardized draws, with
    jackknife standard errors """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer, got {!r}".format(n))
    reps = int(reps)
    if reps < 2:
        raise ValueError("at least 2 replications are needed, got {}".format(reps))
    if reps > MAX_REPS:
        raise ValueError("reps={} exceeds the limit of {}".format(reps, MAX_REPS))
    sizes, groups = _blocks(reps)
    if verbose > 0:
        print("[simulation] {} draws of n={} ({}) in {} blocks"
              .format(reps, n, model.family, len(sizes)), file=sys.stderr)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_moment_block)(model, n, seed, b, size, groups)
        for b, size in enumerate(sizes))
    s1 = np.array([s for res in results for s in res[0]])
    s2 = np.array([s for res in results for s in res[1]])
    counts = np.array([c for res in results for c in res[2]], dtype=float)

    alpha, alpha_se = _jackknife(s1, counts)
    sigma = _covariance(s1.sum(axis=0), s2.sum(axis=0), counts.sum())
    sigma = _nudge((sigma + sigma.T) / 2)
    sigma_se = _jackknife_covariance(s1, s2, counts)
    tolerance = float(np.max(sigma_se)) if np.all(np.isfinite(sigma_se)) else 0.0
    return MomentSet(n=int(n), alpha=alpha, sigma=sigma, family=model.family,
                     method="montecarlo", tolerance=tolerance, seed=seed,
                     alpha_se=alpha_se, sigma_se=sigma_se)


@dataclass(frozen=True, eq=False)
class SimPlan:
    """What to simulate.

    :model: parent distribution the samples are drawn from
    :n, r: sample size and number of observed order statistics
    :targets: future indices
    :mu, sigma: true location and scale in data units
    :reps, seed: replications and seed of the counter based streams
    :kinds: predictors to evaluate, out of SIM_KINDS; the BLIP is built at
            the true delta = mu / sigma
    :rivals: extra coefficient matrices by name
    :moments: MomentSet the predictors are built from, computed if None
    """
    model: ParentModel
    n: int
    r: int
    targets: tuple
    mu: float = 0.0
    sigma: float = 1.0
    reps: int = 10 ** 6
    seed: int = 0
    kinds: tuple = ("blup", "blip", "kaminsky")
    rivals: dict = field(default=None, repr=False)
    moments: MomentSet = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", check_targets(self.targets, self.r, self.n))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if self.reps < MIN_REPS:
            raise ValueError("reps must be at least {}, got {}".format(MIN_REPS, self.reps))
        if self.reps > MAX_REPS:
            raise ValueError("reps={} exceeds the limit of {}".format(self.reps, MAX_REPS))
        if not self.sigma > 0:
            raise ValueError("sigma must be positive, got {}".format(self.sigma))
        unknown = set(self.kinds) - set(SIM_KINDS)
        if unknown:
            raise ValueError("unknown predictor kinds {}".format(sorted(unknown)))
        if not self.kinds and not self.rivals:
            raise ValueError("nothing to simulate")

    @property
    def delta(self):
        return self.mu / self.sigma

    def to_dict(self):
        return {"family": self.model.family, "n": self.n, "r": self.r,
                "targets": list(self.targets), "mu": self.mu,
                "sigma": self.sigma, "reps": self.reps, "seed": self.seed,
                "kinds": list(self.kinds)}


@dataclass(frozen=True, eq=False)
class SimReport:
    """Empirical against analytic MSPE matrices, in data units squared.

    A predictor passes when every entry of its empirical MSPE matrix lies
    within k_se jackknife standard errors of the analytic one.
    """
    plan: SimPlan
    empirical: dict
    standard_errors: dict
    analytic: dict
    verdicts: dict
    k_se: float
    alpha_hat: np.ndarray
    alpha_hat_se: np.ndarray
    group_sums: np.ndarray = field(repr=False, default=None)
    group_counts: np.ndarray = field(repr=False, default=None)
    names: tuple = ()

    @property
    def passed(self):
        return all(self.verdicts.values())

    def quadratic(self, name, weights):
        """ Empirical w' M w of one predictor and its jackknife standard error """
        weights = np.asarray(weights, dtype=float)
        k = self.names.index(name)
        sums = np.einsum("gij,i,j->g", self.group_sums[:, k], weights, weights)
        value, se = _jackknife(sums, self.group_counts)
        return float(value), float(se)

    def to_dict(self):
        return {
            "plan": self.plan.to_dict(),
            "k_se": self.k_se,
            "predictors": {
                name: {"empirical": self.empirical[name].tolist(),
                       "standard_error": self.standard_errors[name].tolist(),
                       "analytic": self.analytic[name].tolist(),
                       "verdict": "PASS" if self.verdicts[name] else "FAIL"}
                for name in self.names},
            "alpha_hat": self.alpha_hat.tolist(),
            "alpha_hat_se": self.alpha_hat_se.tolist(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _predictors(plan, slice_):
    built = {}
    for kind in plan.kinds:
        if kind == "blup":
            built[kind] = blup(slice_).coeffs
        elif kind == "blip":
            built[kind] = blip(slice_, plan.delta).coeffs
        elif kind == "kaminsky":
            built[kind] = kaminsky_predictor(slice_).coeffs
        else:
            built[kind] = scale_blip(slice_).coeffs
    for name, coeffs in (plan.rivals or {}).items():
        built[name] = np.asarray(coeffs, dtype=float)
    return built


def _error_block(model, plan, coeffs, seed, block, size, groups):
    z = _sorted_draws(model, plan.n, seed, block, size)
    x = plan.mu + plan.sigma * z
    cols = np.asarray(plan.targets) - 1
    sums, counts, zsums = [], [], []
    for part, zpart in zip(_split(x, groups), _split(z, groups)):
        # errors of every predictor, shape (predictors, draws, targets)
        errors = np.einsum("pkr,dr->pdk", coeffs, part[:, :plan.r]) - part[None, :, cols]
        sums.append(np.einsum("pdk,pdl->pkl", errors, errors))
        counts.append(len(part))
        zsums.append(zpart.sum(axis=0))
    return sums, counts, zsums


def simulate(plan, n_jobs=1, verbose=0, k_se=3.0):
    """ Empirical MSPE matrices of the planned predictors """
    moments = plan.moments
    if moments is None:
        moments = compute_moments(plan.model, plan.n, verbose=verbose)
    slice_ = slice_moments(moments, plan.r, plan.targets)
    built = _predictors(plan, slice_)
    names = tuple(built)
    coeffs = np.array([built[name] for name in names])
    if coeffs.shape[1:] != (len(plan.targets), plan.r):
        raise ValueError("coefficient matrices must have shape {}"
                         .format((len(plan.targets), plan.r)))
    sizes, groups = _blocks(plan.reps)
    if verbose > 0:
        print("[simulation] {} replications, {} predictors, {} blocks"
              .format(plan.reps, len(names), len(sizes)), file=sys.stderr)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_error_block)(plan.model, plan, coeffs, plan.seed, b, size, groups)
        for b, size in enumerate(sizes))
    group_sums = np.array([s for res in results for s in res[0]])
    counts = np.array([c for res in results for c in res[1]], dtype=float)
    zsums = np.array([s for res in results for s in res[2]])

    scale = plan.sigma ** 2
    empirical, standard_errors, analytic, verdicts = {}, {}, {}, {}
    for k, name in enumerate(names):
        mean, se = _jackknife(group_sums[:, k], counts)
        exact = mspe_matrix(coeffs[k], slice_, plan.delta, plan.targets).w * scale
        empirical[name], standard_errors[name], analytic[name] = mean, se, exact
        verdicts[name] = bool(np.all(np.abs(mean - exact) <= k_se * se))
        if verbose > 0:
            print("[simulation] {}: {}".format(name, "PASS" if verdicts[name] else "FAIL"),
                  file=sys.stderr)
    alpha_hat, alpha_hat_se = _jackknife(zsums, counts)
    return SimReport(plan=plan, empirical=empirical,
                     standard_errors=standard_errors, analytic=analytic,
                     verdicts=verdicts, k_se=k_se, alpha_hat=alpha_hat,
                     alpha_hat_se=alpha_hat_se, group_sums=group_sums,
                     group_counts=counts, names=names)
