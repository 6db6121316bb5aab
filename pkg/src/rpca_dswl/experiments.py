"""
Config-driven experiment runner used by the ``eval`` subcommand.

A config names a dataset source, an optional contamination, a list of
methods and subspace dimensions, and the metrics to compute. The resolved
config (defaults filled in, output paths dropped) is embedded in the report
so the run can be reproduced from the report alone.

Metric protocols
----------------
``recon_error`` / ``psnr``
    ``folds``-fold split; only the training part of each fold is
    contaminated; errors are measured on the clean held-out fold. Methods
    that do not learn a centre get zero-mean preprocessing with the training
    mean.
``cv_accuracy``
    The whole dataset is contaminated, features are extracted with the
    fitted subspace, then k-NN accuracy is cross-validated.
``angle`` / ``weight_separation``
    Fit on the whole (contaminated) dataset; compare with PCA fitted on the
    samples not flagged as outliers, or split weights by the outlier mask.
"""

from __future__ import annotations

import copy
import logging
import math
from pathlib import Path

import numpy as np

from . import data as dh
from .baselines import fit_l2p_pca, fit_pca, fit_pca_l1, fit_rpca_om
from .errors import InvalidConfig
from .evaluation import EvalReport, knn_cv_accuracy, psnr, recon_error, stratified_folds, weight_separation
from .linalg import max_principal_angle, project, reconstruct
from .solver import fit_rpca_dswl
from .types import SolverConfig

log = logging.getLogger(__name__)

MEAN_LEARNING = {"rpca-om", "rpca-dswl"}
METRICS = ("recon_error", "psnr", "cv_accuracy", "angle", "weight_separation")
METRIC_ALIASES = {"knn": "cv_accuracy", "reconstruction_error": "recon_error"}
OUTPUT_KEYS = ("output", "csv")


# ---------------------------------------------------------------- methods


def _solver_config(k, params):
    opts = {key: v for key, v in params.items() if key in SolverConfig.__dataclass_fields__}
    opts["k"] = k
    return SolverConfig(**opts)


def _fit_pca(X, k, params):
    return fit_pca(X, k), None, None


def _fit_pca_l1(X, k, params):
    return fit_pca_l1(X, k, seed=params.get("seed", 0)), None, None


def _fit_rpca_om(X, k, params):
    res = fit_rpca_om(X, k, _solver_config(k, params))
    return res.model, res.weights, res


def _fit_l2p(X, k, params):
    res = fit_l2p_pca(X, k, p=params.get("p", 1.0), config=_solver_config(k, params))
    return res.model, res.weights, res


def _fit_dswl(X, k, params):
    res = fit_rpca_dswl(X, _solver_config(k, params))
    return res.model, res.weights, res


METHODS = {
    "pca": _fit_pca,
    "pca-l1": _fit_pca_l1,
    "rpca-om": _fit_rpca_om,
    "l2p-pca": _fit_l2p,
    "rpca-dswl": _fit_dswl,
}


def fit_method(name, X, k, params=None):
    """Fit ``name`` and return ``(model, weights or None, FitResult or None)``."""
    if name not in METHODS:
        raise InvalidConfig(f"unknown method {name!r}; valid methods: {', '.join(METHODS)}")
    return METHODS[name](X, k, params or {})


# ---------------------------------------------------------------- config


def _resolve_k(spec):
    if isinstance(spec, int):
        ks = [spec]
    elif isinstance(spec, dict):
        ks = list(range(int(spec["start"]), int(spec["stop"]) + 1, int(spec.get("step", 1))))
    else:
        ks = [int(k) for k in spec]
    if not ks or any(k < 1 for k in ks):
        raise InvalidConfig("k list must be nonempty and positive")
    return ks


def _resolve_method(entry):
    if isinstance(entry, str):
        entry = {"name": entry}
    name = entry.get("name")
    if name not in METHODS:
        raise InvalidConfig(f"unknown method {name!r}; valid methods: {', '.join(METHODS)}")
    params = dict(entry.get("params", {}))
    if name in ("rpca-om", "l2p-pca", "rpca-dswl"):
        _solver_config(1, params)  # validates solver options early
    return {"name": name, "params": params}


DATASET_DEFAULTS = {
    "toy": {"n_normal": 200, "correlation": 0.95, "outlier_category": "none", "n_outliers": 0,
            "magnitude": 8.0, "spread": 0.5},
    "lowrank_images": {"n": 300, "shape": [32, 32], "rank": 10, "noise": 0.05},
    "gaussian_classes": {"n_per_class": 60, "d": 10, "n_classes": 3, "separation": 3.0, "offset": 5.0},
    "csv": {"labels": False, "header": False, "mask": None},
    "pgm": {"shape": [32, 32]},
    "manifest": {},
}


def resolve_config(raw: dict, base_dir=None) -> dict:
    """Fill defaults and validate; raises InvalidConfig or ParseError.

    Paths are resolved against ``base_dir`` and must exist.
    """
    if "config" in raw and "reports" in raw:
        raw = raw["config"]
    cfg = copy.deepcopy(raw)
    seed = int(cfg.get("seed", 0))
    ds = dict(cfg.get("dataset") or {})
    kind = ds.get("type")
    if kind not in DATASET_DEFAULTS:
        raise InvalidConfig(f"dataset.type must be one of {sorted(DATASET_DEFAULTS)}, got {kind!r}")
    ds = {**DATASET_DEFAULTS[kind], **ds}
    ds.setdefault("seed", seed)
    for key in ("path", "mask"):
        if ds.get(key) is not None:
            p = Path(ds[key])
            if not p.is_absolute() and base_dir is not None:
                p = Path(base_dir) / p
            if not p.exists():
                raise InvalidConfig(f"dataset.{key}: {p} does not exist")
            ds[key] = str(p)
    if kind in ("csv", "pgm", "manifest") and ds.get("path") is None:
        raise InvalidConfig(f"dataset of type {kind} needs a path")

    cont = cfg.get("contamination")
    if cont is not None:
        cont = dict(cont)
        ctype = cont.get("type")
        if ctype == "tabular":
            cont = {"fraction": 0.25, "factors": [5.0, 10.0, 20.0], "per_feature": False, **cont}
        elif ctype == "images":
            shape = ds.get("shape")
            cont = {"fraction": 0.2, "block_area_ratio": 0.25, "shape": shape, **cont}
            if cont["shape"] is None:
                raise InvalidConfig("image contamination needs a shape")
        else:
            raise InvalidConfig(f"contamination.type must be 'tabular' or 'images', got {ctype!r}")
        cont.setdefault("seed", seed)

    methods = [_resolve_method(m) for m in cfg.get("methods", [])]
    if not methods:
        raise InvalidConfig("at least one method is required")
    metrics = [METRIC_ALIASES.get(m, m) for m in cfg.get("metrics", ["recon_error"])]
    bad = [m for m in metrics if m not in METRICS]
    if bad:
        raise InvalidConfig(f"unknown metrics {bad}; valid metrics: {', '.join(METRICS)}")
    folds = int(cfg.get("folds", 10))
    if folds < 2:
        raise InvalidConfig("folds must be >= 2")
    return {
        "dataset": ds,
        "contamination": cont,
        "methods": methods,
        "k": _resolve_k(cfg.get("k", [1])),
        "metrics": metrics,
        "folds": folds,
        "neighbors": int(cfg.get("neighbors", 1)),
        "peak": float(cfg.get("peak", 1.0)),
        "seed": seed,
    }


# ---------------------------------------------------------------- data


def load_dataset(spec: dict) -> dh.LabeledDataset:
    kind = spec["type"]
    if kind == "toy":
        return dh.gen_toy(dh.ToySpec(
            n_normal=int(spec["n_normal"]), correlation=float(spec["correlation"]),
            outlier_category=spec["outlier_category"], n_outliers=int(spec["n_outliers"]),
            magnitude=float(spec["magnitude"]), rng_seed=int(spec["seed"]), spread=float(spec["spread"]),
        ))
    if kind == "lowrank_images":
        return dh.gen_lowrank_images(int(spec["n"]), tuple(spec["shape"]), int(spec["rank"]),
                                     float(spec["noise"]), int(spec["seed"]))
    if kind == "gaussian_classes":
        return dh.gen_gaussian_classes(int(spec["n_per_class"]), int(spec["d"]), int(spec["n_classes"]),
                                       float(spec["separation"]), float(spec["offset"]), int(spec["seed"]))
    if kind == "csv":
        ds = dh.load_csv(spec["path"], labels=bool(spec["labels"]), header=bool(spec["header"]))
        if spec.get("mask"):
            ds = dh.with_mask(ds, dh.load_mask(spec["mask"]))
        return ds
    if kind == "pgm":
        return dh.load_pgm_dir(spec["path"], tuple(spec["shape"]))
    return dh.load_manifest(spec["path"])


def contaminate(ds, spec, seed_offset=0):
    if spec is None:
        return ds
    seed = int(spec["seed"]) + seed_offset
    if spec["type"] == "tabular":
        return dh.contaminate_tabular(ds, spec["fraction"], spec["factors"], seed, spec["per_feature"])
    return dh.contaminate_images(ds, tuple(spec["shape"]), spec["fraction"], spec["block_area_ratio"], seed)


# ---------------------------------------------------------------- runner


def _fold_metrics(report, name, params, k, ds, cfg, assign, fold):
    train = ds.subset(np.flatnonzero(assign != fold))
    test = ds.subset(np.flatnonzero(assign == fold))
    train = contaminate(train, cfg["contamination"], seed_offset=fold)
    Xtr, Xte = train.X, test.X
    if name not in MEAN_LEARNING:
        centre = Xtr.mean(axis=1, keepdims=True)
        Xtr, Xte = Xtr - centre, Xte - centre
    model, _, res = fit_method(name, Xtr, k, params)
    _note_convergence(report, res)
    if "recon_error" in cfg["metrics"]:
        report.add_fold("recon_error", recon_error(model, Xte, centered=name in MEAN_LEARNING))
    if "psnr" in cfg["metrics"]:
        if name in MEAN_LEARNING:
            rec = reconstruct(model, Xte).values
        else:
            P = model.projection
            rec = P @ (P.T @ Xte)
        vals = [psnr(Xte[:, i], rec[:, i], cfg["peak"]) for i in range(Xte.shape[1])]
        report.add_fold("psnr", float(np.mean(vals)))


def _note_convergence(report, res):
    if res is None:
        return
    report.extra.setdefault("iterations", []).append(res.iterations)
    report.extra["converged"] = bool(report.extra.get("converged", True) and res.converged)


def run_eval(cfg: dict) -> dict:
    """Run a resolved config and return the report as a JSON-ready dict."""
    seed = cfg["seed"]
    ds = load_dataset(cfg["dataset"])
    metrics = set(cfg["metrics"])
    whole_metrics = metrics & {"cv_accuracy", "angle", "weight_separation"}
    fold_metrics = metrics & {"recon_error", "psnr"}
    contaminated = contaminate(ds, cfg["contamination"]) if whole_metrics else None

    reference = {}
    if "angle" in metrics:
        clean = contaminated.X[:, ~contaminated.outlier_mask]
        ref_k = {k: fit_pca(clean, k) for k in cfg["k"]}
        reference["clean_mean"] = clean.mean(axis=1).tolist()
        reference["contaminated_mean_error"] = float(np.linalg.norm(contaminated.X.mean(axis=1) - clean.mean(axis=1)))

    if fold_metrics:
        labels = ds.labels if ds.labels is not None else np.zeros(ds.n, dtype=int)
        if ds.n < cfg["folds"]:
            raise InvalidConfig(f"{ds.n} samples cannot fill {cfg['folds']} folds")
        assign = stratified_folds(labels, cfg["folds"], seed)

    reports = []
    for method in cfg["methods"]:
        name, params = method["name"], method["params"]
        for k in cfg["k"]:
            log.info("method %s, k=%d", name, k)
            report = EvalReport(method=name, k=k, seed=seed, centered=name in MEAN_LEARNING)
            if fold_metrics:
                for fold in range(cfg["folds"]):
                    _fold_metrics(report, name, params, k, ds, cfg, assign, fold)
            if whole_metrics:
                model, weights, res = fit_method(name, contaminated.X, k, params)
                _note_convergence(report, res)
                if "angle" in metrics:
                    report.extra["angle_deg"] = math.degrees(max_principal_angle(model.projection, ref_k[k].projection))
                    report.extra["mean_error"] = float(np.linalg.norm(model.mean - np.array(reference["clean_mean"])))
                if "weight_separation" in metrics and weights is not None:
                    m = contaminated.outlier_mask
                    if m.any() and not m.all():
                        report.weight_separation = weight_separation(weights, m)
                if "cv_accuracy" in metrics:
                    if contaminated.labels is None:
                        raise InvalidConfig("cv_accuracy needs a labelled dataset")
                    acc, per_fold = knn_cv_accuracy(project(model, contaminated.X), contaminated.labels,
                                                    cfg["folds"], cfg["neighbors"], seed)
                    for v in per_fold:
                        report.add_fold("cv_accuracy", v)
            reports.append(report)

    return {
        "config": cfg,
        "seed": seed,
        "reference": reference,
        "reports": [r.to_dict() for r in reports],
        "_reports": reports,
    }


def any_unconverged(result: dict) -> bool:
    return any(r.extra.get("converged") is False for r in result["_reports"])


def report_json(result: dict) -> dict:
    return {k: v for k, v in result.items() if not k.startswith("_")}


def long_rows(result: dict):
    for r in result["_reports"]:
        yield from r.long_rows()
