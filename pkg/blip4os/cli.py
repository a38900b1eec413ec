#!/usr/bin/env python3
# coding: utf-8
"""
File: cli.py
Description: Command line front end of blip4os.

    blip4os moments    --family normal --n 15 --out normal15.json
    blip4os estimate   --data lead.csv --log --r 9 --family normal
    blip4os predict    --data lead.csv --log --r 9 --targets 10,15 --delta plugin
    blip4os efficiency --kind trace --n 15 --r 9 --targets 14,15 --grid 0.01:10:0.01
    blip4os simulate   --family exponential --n 5 --r 3 --targets 5 --reps 1000000
    blip4os reproduce  table1

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
import argparse
import copy
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import yaml

from .datasets import (DEFAULT_CACHEDIR, CSVData, LeadContamination,
                       cached_moments, censor)
from .efficiency import (EfficiencyFunction, EfficiencySpec, crossings, curve,
                         find_delta_star, iem)
from .estimation import blue, delta_hat, scale_blue
from .moments import ParentModel, load_moments, save_moments, slice_moments
from .prediction import (blip, blip_mspe, blup, blup_mspe, kaminsky_predictor,
                         predict, scale_blip, scale_blup, scale_blup_mspe,
                         scale_mspe)
from .simulation import SIM_KINDS, SimPlan, simulate
from .utils import parse_grid, parse_targets
from . import reproduce

DEFAULT_CONFIG = "config.yml"

DEFAULTS = {
    "moments": {"cache_dir": DEFAULT_CACHEDIR, "method": "auto",
                "quad_rel_tol": 1e-8},
    "simulate": {"reps": 10 ** 6, "seed": 0, "n_jobs": 1},
    "efficiency": {"grid": "0.01:10:0.01", "delta_max": 10.0,
                   "search_interval": [1e-3, 10.0]},
    "reproduce": {"table3_deltas": [1.257, 1.328]},
}

PREDICTORS = ("blip", "blup", "kaminsky", "scale_blip", "scale_blup")
REPORTS = ("curve", "delta-star", "iem", "crossings")
TABLES = ("table1", "table2", "table3", "fig1", "fig2", "fig3", "fig4")


def _merge(base, update):
    merged = copy.deepcopy(base)
    for key, value in (update or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path=None):
    """ Defaults merged with a YAML config file. An explicit path must exist,
    the default config.yml is optional. """
    if path is None:
        if not os.path.exists(DEFAULT_CONFIG):
            return copy.deepcopy(DEFAULTS)
        path = DEFAULT_CONFIG
    with open(path, "r") as fh:
        try:
            loaded = yaml.safe_load(fh)
        except yaml.YAMLError as err:
            raise ValueError("cannot parse {}: {}".format(path, err))
    if loaded is not None and not isinstance(loaded, dict):
        raise ValueError("{} must hold a mapping".format(path))
    return _merge(DEFAULTS, loaded)


@dataclass
class RunConfig:
    """Everything a subcommand needs, flags merged over config.yml"""
    subcommand: str
    family: str = "normal"
    n: int = None
    r: int = None
    targets: list = field(default_factory=list)
    delta: object = None
    log: bool = False
    data: str = None
    moments_path: str = None
    out: str = None
    format: str = None
    method: str = "auto"
    tol: float = 1e-8
    reps: int = 10 ** 6
    seed: int = 0
    n_jobs: int = 1
    predictor: str = "blip"
    kind: str = "re1"
    mode: str = "matched"
    report: str = "curve"
    grid: str = "0.01:10:0.01"
    delta_max: float = 10.0
    search_interval: tuple = (1e-3, 10.0)
    sign: int = 1
    mu: float = 0.0
    sigma: float = 1.0
    kinds: tuple = ("blup", "blip", "kaminsky")
    table: str = None
    table3_deltas: tuple = (1.257, 1.328)
    mspe_units: str = "sigma2"
    cache_dir: str = None
    verbose: int = 0

    def __post_init__(self):
        if isinstance(self.delta, str):
            if self.delta.lower() == "plugin":
                self.delta = "plugin"
            else:
                self.delta = float(self.delta)
        if isinstance(self.delta, float) and not np.isfinite(self.delta):
            raise ValueError("a fixed delta must be finite, got {}".format(self.delta))
        if self.delta == "plugin" and self.data is None:
            raise ValueError("--delta plugin needs --data")

    @property
    def method_for_family(self):
        if self.method != "auto":
            return self.method
        return "closed" if self.family in ("exponential", "uniform") else "quadrature"

    @classmethod
    def from_args(cls, args, config):
        fields = {k: v for k, v in vars(args).items()
                  if v is not None and k in cls.__dataclass_fields__}
        merged = {
            "method": config["moments"]["method"],
            "tol": config["moments"]["quad_rel_tol"],
            "cache_dir": config["moments"]["cache_dir"],
            "reps": config["simulate"]["reps"],
            "seed": config["simulate"]["seed"],
            "n_jobs": config["simulate"]["n_jobs"],
            "grid": config["efficiency"]["grid"],
            "delta_max": config["efficiency"]["delta_max"],
            "search_interval": tuple(config["efficiency"]["search_interval"]),
            "table3_deltas": tuple(config["reproduce"]["table3_deltas"]),
        }
        merged.update(fields)
        if "targets" in merged:
            merged["targets"] = parse_targets(merged["targets"])
        if "kinds" in merged:
            merged["kinds"] = tuple(_names(merged["kinds"]))
        if str(merged.get("cache_dir")).lower() == "none":
            merged["cache_dir"] = None
        elif merged.get("cache_dir"):
            merged["cache_dir"] = os.path.expanduser(merged["cache_dir"])
        return cls(**merged)


def _names(text):
    if isinstance(text, str):
        return [tok.strip() for tok in text.split(",") if tok.strip()]
    return list(text)


def _model(cfg):
    return ParentModel(cfg.family, cfg.method_for_family, quad_rel_tol=cfg.tol,
                       mc_reps=cfg.reps, mc_seed=cfg.seed, n_jobs=cfg.n_jobs)


def _moments(cfg, n):
    if cfg.moments_path:
        ms = load_moments(cfg.moments_path)
        if ms.n != n:
            raise ValueError("{} holds moments for n={}, need n={}"
                             .format(cfg.moments_path, ms.n, n))
        return ms
    return cached_moments(_model(cfg), n, cache_dir=cfg.cache_dir,
                          verbose=cfg.verbose)


def _sample(cfg):
    if cfg.data is None:
        raise ValueError("--data is required")
    source = LeadContamination() if cfg.data == "lead" else CSVData(cfg.data)
    values = source.values
    r = len(values) if cfg.r is None else cfg.r
    return censor(values, r, n=cfg.n, log=bool(cfg.log))


def _emit(obj, cfg):
    frame = isinstance(obj, pd.DataFrame)
    fmt = cfg.format or ("csv" if frame else "json")
    if frame:
        if fmt == "csv":
            text = obj.to_csv(index=False, float_format="%.12g")
        else:
            text = obj.to_json(orient="records", double_precision=12) + "\n"
    elif fmt == "csv":
        text = pd.json_normalize(obj).to_csv(index=False, float_format="%.12g")
    else:
        text = json.dumps(obj, indent=2) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def cmd_moments(cfg):
    if cfg.n is None:
        raise ValueError("--n is required")
    ms = _moments(cfg, cfg.n)
    if cfg.out:
        save_moments(ms, cfg.out)
        return 0
    record = {"n": ms.n, **ms.provenance, "alpha": ms.alpha.tolist(),
              "sigma": ms.sigma.tolist()}
    _emit(record, cfg)
    return 0


def cmd_estimate(cfg):
    sample = _sample(cfg)
    slice_ = slice_moments(_moments(cfg, sample.n), sample.r, ())
    record = {"n": sample.n, "r": sample.r, "transform": sample.transform}
    if cfg.mode == "scale":
        b = scale_blue(sample, slice_)
        record.update(sigma_star=b.sigma_star, var_sigma=b.var_sigma)
    else:
        b = blue(sample, slice_)
        record.update(b.to_dict())
        record["delta_hat"] = delta_hat(b)
        record["delta_unstable"] = b.delta_unstable
    _emit(record, cfg)
    return 0


def _build(cfg, slice_, sample):
    """ (predictor, sigma^2 MSPE matrix, BLUE or None) of the chosen kind """
    kind = cfg.predictor
    if kind not in PREDICTORS:
        raise ValueError("--predictor must be one of {}".format(PREDICTORS))
    if kind.startswith("scale"):
        b = scale_blue(sample, slice_)
        if kind == "scale_blip":
            pred = scale_blip(slice_)
            return pred, scale_mspe(pred, slice_), b
        return scale_blup(slice_), scale_blup_mspe(slice_), b
    b = blue(sample, slice_) if sample.r >= 2 else None
    if kind == "blup":
        return blup(slice_), blup_mspe(slice_), b
    if kind == "kaminsky":
        pred = kaminsky_predictor(slice_)
        return pred, blip_mspe(pred, slice_, 0.0), b
    if cfg.delta is None:
        raise ValueError("the BLIP needs --delta <value> or --delta plugin")
    if cfg.delta == "plugin" and b is None:
        raise ValueError("the plug-in delta needs r >= 2")
    delta = delta_hat(b) if cfg.delta == "plugin" else cfg.delta
    pred = blip(slice_, delta)
    return pred, blip_mspe(pred, slice_), b


def cmd_predict(cfg):
    sample = _sample(cfg)
    targets = cfg.targets or list(range(sample.r + 1, sample.n + 1))
    slice_ = slice_moments(_moments(cfg, sample.n), sample.r, targets)
    pred, mspe, b = _build(cfg, slice_, sample)
    if cfg.mspe_units == "data":
        if b is None:
            raise ValueError("data unit MSPEs need r >= 2")
        mspe = mspe.scaled(b.sigma_star ** 2)
    elif cfg.mspe_units != "sigma2":
        raise ValueError("--mspe-units must be sigma2 or data")
    result = predict(pred, sample)
    record = pred.to_dict(mspe)
    record["predictions"] = result.values.tolist()
    if sample.transform == "log":
        record["original_scale"] = result.original.tolist()
    _emit(record, cfg)
    return 0


def cmd_efficiency(cfg):
    if cfg.n is None or cfg.r is None:
        raise ValueError("--n and --r are required")
    spec = EfficiencySpec(cfg.kind, cfg.n, cfg.r, cfg.targets, _model(cfg))
    build_delta = None
    if cfg.mode == "plugin":
        if cfg.delta == "plugin":
            sample = _sample(cfg)
            build_delta = delta_hat(blue(sample, slice_moments(
                _moments(cfg, sample.n), sample.r, ())))
        else:
            build_delta = cfg.delta
    fn = EfficiencyFunction(spec, moments=_moments(cfg, cfg.n), mode=cfg.mode,
                            build_delta=build_delta, n_jobs=cfg.n_jobs,
                            verbose=cfg.verbose)
    if cfg.report == "curve":
        _emit(curve(fn, parse_grid(cfg.grid), sign=cfg.sign).to_frame(), cfg)
        return 0
    record = {"kind": spec.kind, "n": spec.n, "r": spec.r,
              "targets": list(spec.targets), "mode": cfg.mode,
              "build_delta": build_delta}
    if cfg.report == "delta-star":
        record["delta_star"], record["value"] = find_delta_star(fn, cfg.search_interval)
    elif cfg.report == "iem":
        record["delta_max"] = cfg.delta_max
        record["iem"] = iem(fn, cfg.delta_max)
    elif cfg.report == "crossings":
        record["crossings"] = crossings(fn, cfg.search_interval)
    else:
        raise ValueError("--report must be one of {}".format(REPORTS))
    _emit(record, cfg)
    return 0


def cmd_simulate(cfg):
    if cfg.n is None or cfg.r is None:
        raise ValueError("--n and --r are required")
    plan = SimPlan(model=_model(cfg),
                   n=cfg.n, r=cfg.r, targets=cfg.targets, mu=cfg.mu,
                   sigma=cfg.sigma, reps=cfg.reps, seed=cfg.seed,
                   kinds=cfg.kinds, moments=_moments(cfg, cfg.n))
    report = simulate(plan, n_jobs=cfg.n_jobs, verbose=cfg.verbose)
    _emit(report.to_dict(), cfg)
    return 0


def cmd_reproduce(cfg):
    if cfg.table not in TABLES:
        raise ValueError("table must be one of {}".format(TABLES))
    model = ParentModel("normal", "quadrature", quad_rel_tol=cfg.tol)
    moments = (load_moments(cfg.moments_path) if cfg.moments_path else
               cached_moments(model, reproduce.N, cache_dir=cfg.cache_dir,
                              verbose=cfg.verbose))
    if cfg.table == "table1":
        frame = reproduce.table1(moments)
        note = "MSPE units: {}".format(frame.attrs["mspe_units"])
    elif cfg.table == "table2":
        frame = reproduce.table2(moments, n_jobs=cfg.n_jobs)
        note = None
    elif cfg.table == "table3":
        frame = reproduce.table3(moments, deltas=cfg.table3_deltas)
        note = "matching delta: {}".format(frame.attrs["matching_delta"])
    else:
        frame = reproduce.figure(int(cfg.table[-1]), moments,
                                 grid=parse_grid(cfg.grid), n_jobs=cfg.n_jobs)
        note = None
    if cfg.table.startswith("table"):
        mismatches = int((~frame["ok"]).sum())
        print("{}: {} of {} cells outside tolerance{}".format(
            cfg.table, mismatches, len(frame),
            "; " + note if note else ""), file=sys.stderr)
    _emit(frame, cfg)
    return 0


COMMANDS = {
    "moments": cmd_moments,
    "estimate": cmd_estimate,
    "predict": cmd_predict,
    "efficiency": cmd_efficiency,
    "simulate": cmd_simulate,
    "reproduce": cmd_reproduce,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blip4os",
        description="Best linear unbiased and invariant prediction of "
                    "future order statistics from Type-II censored samples.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML config file")
    common.add_argument("--family", choices=("exponential", "uniform", "normal", "gumbel"))
    common.add_argument("--n", type=int, help="full sample size")
    common.add_argument("--r", type=int, help="number of observed order statistics")
    common.add_argument("--targets", help="future indices, e.g. 10,15")
    common.add_argument("--delta", help="fixed delta or 'plugin' for mu*/sigma*")
    common.add_argument("--data", help="CSV with one value per line, 'lead' for the built-in sample")
    common.add_argument("--log", action="store_true", default=None,
                        help="natural log transform before sorting")
    common.add_argument("--moments", dest="moments_path", help="moment file")
    common.add_argument("--out", help="output path, stdout if omitted")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--method", choices=("auto", "closed", "quadrature", "montecarlo"))
    common.add_argument("--tol", type=float, help="quadrature relative tolerance")
    common.add_argument("--seed", type=int)
    common.add_argument("--reps", type=int)
    common.add_argument("--n-jobs", dest="n_jobs", type=int)
    common.add_argument("--cache-dir", dest="cache_dir",
                        help="moment cache directory, 'none' to disable")
    common.add_argument("-v", "--verbose", action="count", default=0)

    sub.add_parser("moments", parents=[common], help="compute a moment file")
    p = sub.add_parser("estimate", parents=[common], help="BLUEs of mu and sigma")
    p.add_argument("--mode", choices=("location-scale", "scale"))
    p = sub.add_parser("predict", parents=[common], help="predict future order statistics")
    p.add_argument("--predictor", choices=PREDICTORS)
    p.add_argument("--mspe-units", dest="mspe_units", choices=("sigma2", "data"))
    p = sub.add_parser("efficiency", parents=[common], help="efficiency of the BLIP")
    p.add_argument("--kind", choices=("re1", "d", "trace"))
    p.add_argument("--mode", choices=("matched", "plugin"))
    p.add_argument("--report", choices=REPORTS)
    p.add_argument("--grid", help="start:stop:step")
    p.add_argument("--delta-max", dest="delta_max", type=float)
    p.add_argument("--negative", dest="sign", action="store_const", const=-1,
                   help="evaluate the curve at -delta")
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo oracle")
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--kinds", help="comma separated subset of " + ",".join(SIM_KINDS))
    p = sub.add_parser("reproduce", parents=[common], help="published tables and curves")
    p.add_argument("table", choices=TABLES)
    p.add_argument("--grid", help="start:stop:step for the figures")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_args(args, load_config(args.config))
        return COMMANDS[cfg.subcommand](cfg)
    except np.linalg.LinAlgError as err:
        print("blip4os: numerical failure: {}".format(err), file=sys.stderr)
        return 3
    except ArithmeticError as err:
        print("blip4os: numerical failure: {}".format(err), file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError) as err:
        print("blip4os: error: {}".format(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
