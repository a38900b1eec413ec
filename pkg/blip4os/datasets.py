#!/usr/bin/env python3
"""
File: datasets.py
Description: Loading of raw samples, Type-II censoring and the on-disk
moment cache.
"""

import os
import sys
from abc import ABC, abstractmethod

import numpy as np
import pandas as pd

from .estimation import CensoredSample
from .exceptions import MomentFileError
from .moments import compute_moments, load_moments, save_moments

DEFAULT_CACHEDIR = os.path.expanduser("~/.cache/blip4os")

# Lead contamination measurements of n = 15 items, in sampling order. Used
# with the natural log transform and r = 9 as the worked example of the
# normal (log-normal) family.
LEAD_CONTAMINATION = (26, 63, 3, 70, 16, 5, 1, 57, 5, 3, 24, 2, 1, 48, 3)


def censor(values, r, n=None, log=False):
    """ Sort raw values and keep the r smallest.

    `values` is either the complete sample or only its observed part, in
    which case n gives the full sample size.
    """
    values = np.asarray(values, dtype=float).ravel()
    if log:
        if np.any(values <= 0):
            raise ValueError("the log transform needs strictly positive values")
        values = np.log(values)
    n = len(values) if n is None else int(n)
    if n < len(values):
        raise ValueError("n={} is smaller than the {} values given"
                         .format(n, len(values)))
    if not 1 <= r <= len(values):
        raise ValueError("cannot observe r={} out of {} values"
                         .format(r, len(values)))
    x = np.sort(values)[:r]
    return CensoredSample(n=n, r=int(r), x=x, transform="log" if log else "none")


def read_data(path):
    """ One numeric value per line, with an optional header `value` """
    frame = pd.read_csv(path, header=None, names=["value"], dtype=str,
                        skip_blank_lines=True, comment="#")
    column = frame["value"].str.strip()
    if len(column) and column.iloc[0].lower() == "value":
        column = column.iloc[1:]
    try:
        values = pd.to_numeric(column, errors="raise").to_numpy(dtype=float)
    except ValueError as err:
        raise ValueError("{} holds a non-numeric value: {}".format(path, err))
    if len(values) == 0:
        raise ValueError("{} holds no values".format(path))
    return values


class DataSetBase(ABC):
    @property
    @abstractmethod
    def values(self):
        pass

    def load(self, r, n=None, log=False, verbose=False):
        values = self.values
        if verbose:
            print(len(values), "values.", file=sys.stderr)
        sample = censor(values, r, n=n, log=log)
        if verbose:
            print("Observed {} of {}, transform {}."
                  .format(sample.r, sample.n, sample.transform), file=sys.stderr)
        return sample


class CSVData(DataSetBase):
    def __init__(self, path):
        self.path = path

    @property
    def values(self):
        return read_data(self.path)


class LeadContamination(DataSetBase):
    @property
    def values(self):
        return np.asarray(LEAD_CONTAMINATION, dtype=float)


def load_lead(r=9, log=True):
    """ The lead contamination sample, log transformed and censored at r """
    return LeadContamination().load(r, log=log)


def cached_moments(model, n, cache_dir=DEFAULT_CACHEDIR, verbose=0):
    """ compute_moments, persisted as a moment file under cache_dir.

    Custom quantile functions and Monte Carlo runs are never cached.
    """
    if cache_dir is None or model.family == "custom" or model.method == "montecarlo":
        return compute_moments(model, n, verbose=verbose)
    tag = "" if model.method == "closed" else "-{:g}".format(model.quad_rel_tol)
    path = os.path.join(cache_dir, "{}-{}{}-n{}.json".format(
        model.family, model.method, tag, n))
    if os.path.exists(path):
        try:
            return load_moments(path)
        except (MomentFileError, ValueError) as err:
            if verbose > 0:
                print("[moments] ignoring cache {}: {}".format(path, err),
                      file=sys.stderr)
    ms = compute_moments(model, n, verbose=verbose)
    os.makedirs(cache_dir, exist_ok=True)
    save_moments(ms, path)
    if verbose > 0:
        print("[moments] cached to", path, file=sys.stderr)
    return ms
