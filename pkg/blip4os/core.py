#!/usr/bin/env python3
# -*- coding: utf-8 -*-
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
import numpy as np

from .datasets import cached_moments, censor
from .estimation import blue, delta_hat
from .moments import ParentModel, slice_moments
from .prediction import (blip, blip_mspe, blup, blup_mspe, kaminsky_predictor,
                         predict, scale_blip, scale_blup, scale_blup_mspe,
                         scale_mspe)

PREDICTORS = ("blip", "blup", "kaminsky", "scale_blip", "scale_blup")


class OrderStatisticPredictor(BaseEstimator):

    """Meta estimator from an observed censored sample to predictions of its
    future order statistics"""

    def __init__(self, family="normal", n=None, targets=None, predictor="blip",
                 delta="plugin", method="quadrature", log=False, moments=None,
                 cache_dir=None, verbose=0):
        """
        :family: parent family of the standardized moments
        :n: full sample size, the fitted values are the r observed ones.
            Taken from `moments` when None, required otherwise
        :targets: future indices to predict, all of r+1..n if None
        :predictor: one of blip, blup, kaminsky, scale_blip, scale_blup
        :delta: 'plugin' for mu*/sigma* or a fixed number (blip only)
        :method: moment engine
        :log: fit on the natural log of the data
        :moments: precomputed MomentSet, overrides family and method
        :cache_dir: moment file cache, None to disable
        """
        BaseEstimator.__init__(self)
        self.family = family
        self.n = n
        self.targets = targets
        self.predictor = predictor
        self.delta = delta
        self.method = method
        self.log = log
        self.moments = moments
        self.cache_dir = cache_dir
        self.verbose = verbose

    def fit(self, X, y=None):
        """ Censor the observed values X and build the predictor """
        if self.predictor not in PREDICTORS:
            raise ValueError("predictor must be one of {}, got {!r}"
                             .format(PREDICTORS, self.predictor))
        X = np.asarray(X, dtype=float).ravel()
        if self.n is not None:
            n = int(self.n)
        elif self.moments is not None:
            n = self.moments.n
        else:
            raise ValueError("the full sample size n is required without moments")
        r = len(X)
        if r >= n:
            raise ValueError("nothing to predict: r={} of n={} observed".format(r, n))
        targets = self.targets if self.targets is not None else range(r + 1, n + 1)

        moments = self.moments
        if moments is None:
            model = ParentModel(self.family, self.method)
            moments = cached_moments(model, n, cache_dir=self.cache_dir,
                                     verbose=self.verbose)
        self.sample_ = censor(X, r, n=n, log=self.log)
        self.slice_ = slice_moments(moments, r, list(targets))

        self.blue_ = blue(self.sample_, self.slice_) if r >= 2 else None
        self.delta_ = None
        kind = self.predictor
        if kind == "blip":
            if self.delta == "plugin":
                if self.blue_ is None:
                    raise ValueError("the plug-in delta needs r >= 2")
                self.delta_ = delta_hat(self.blue_)
            else:
                self.delta_ = float(self.delta)
            self.predictor_ = blip(self.slice_, self.delta_)
            self.mspe_ = blip_mspe(self.predictor_, self.slice_)
        elif kind == "blup":
            self.predictor_ = blup(self.slice_)
            self.mspe_ = blup_mspe(self.slice_)
        elif kind == "kaminsky":
            self.predictor_ = kaminsky_predictor(self.slice_)
            # location invariant rows, the MSPE does not depend on delta
            self.mspe_ = blip_mspe(self.predictor_, self.slice_, 0.0)
        elif kind == "scale_blip":
            self.predictor_ = scale_blip(self.slice_)
            self.mspe_ = scale_mspe(self.predictor_, self.slice_)
        else:
            self.predictor_ = scale_blup(self.slice_)
            self.mspe_ = scale_blup_mspe(self.slice_)
        return self

    def predict(self, X=None, original_scale=True):
        """ Predictions of the targets, back transformed when fitted on logs """
        if not hasattr(self, "predictor_"):
            raise NotFittedError("call fit before predict")
        result = predict(self.predictor_, self.sample_)
        return result.original if original_scale else result.values
