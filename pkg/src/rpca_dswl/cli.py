"""
Command-line front end: ``synth``, ``contaminate``, ``fit``, ``transform``, ``eval``.

Exit codes: 0 success, 2 usage or validation error, 3 convergence failure
under ``--strict``. Diagnostics go to stderr; with ``--json`` stdout carries
only the machine-readable result.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path


from . import data as dh
from .errors import ConvergenceFailure, RPCAError
from .evaluation import recon_error
from .experiments import MEAN_LEARNING, METHODS, any_unconverged, fit_method, long_rows, report_json, resolve_config, run_eval
from .linalg import project
from .types import SolverConfig, SubspaceModel

SEED_ENV = "RPCA_DSWL_SEED"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("rpca_dswl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _emit(args, payload, out_path=None):
    text = _dump(payload)
    if out_path:
        Path(out_path).write_text(text)
    if args.json or not out_path:
        sys.stdout.write(text)


def _require_file(path, flag):
    if not Path(path).is_file():
        raise UsageError(f"{flag}: {path} does not exist")


def _parse_shape(text, flag="--shape"):
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"{flag} must look like 32x32, got {text!r}") from None
    if h < 1 or w < 1:
        raise UsageError(f"{flag} must be positive")
    return h, w


def _load_input(args):
    _require_file(args.input, "--input")
    ds = dh.load_csv(args.input, labels=args.labels, header=args.header)
    if getattr(args, "mask", None):
        _require_file(args.mask, "--mask")
        ds = dh.with_mask(ds, dh.load_mask(args.mask))
    return ds


def _mask_path(out, given):
    if given:
        return given
    p = Path(out)
    return str(p.with_name(p.stem + ".mask.csv"))


# ---------------------------------------------------------------- commands


def cmd_synth(args):
    if not -1.0 < args.corr < 1.0:
        raise UsageError(f"--corr must lie in (-1, 1), got {args.corr}")
    if args.n < 2:
        raise UsageError(f"--n must be >= 2, got {args.n}")
    category, count, magnitude = "none", 0, 8.0
    if args.outliers:
        parts = args.outliers.split(":")
        if len(parts) != 3 or parts[0] not in dh.OUTLIER_CATEGORIES:
            raise UsageError(f"--outliers must be CATEGORY:COUNT:MAGNITUDE with CATEGORY in "
                             f"{', '.join(dh.OUTLIER_CATEGORIES)}; got {args.outliers!r}")
        try:
            category, count, magnitude = parts[0], int(parts[1]), float(parts[2])
        except ValueError:
            raise UsageError(f"--outliers count and magnitude must be numbers, got {args.outliers!r}") from None
        if count < 0:
            raise UsageError("--outliers count must be >= 0")
    seed = args.seed if args.seed is not None else default_seed()
    ds = dh.gen_toy(dh.ToySpec(n_normal=args.n, correlation=args.corr, outlier_category=category,
                               n_outliers=count, magnitude=magnitude, rng_seed=seed, spread=args.spread))
    dh.write_csv(args.out, ds.X)
    mask_out = _mask_path(args.out, args.mask_out)
    dh.write_mask(mask_out, ds.outlier_mask)
    log.info("wrote %d samples to %s, mask to %s", ds.n, args.out, mask_out)
    if args.json:
        sys.stdout.write(_dump({"data": args.out, "mask": mask_out, "n": ds.n, "d": ds.d, "seed": seed}))
    return EXIT_OK


def cmd_contaminate(args):
    ds = _load_input(args)
    seed = args.seed if args.seed is not None else default_seed()
    if args.mode == "tabular":
        try:
            factors = tuple(float(f) for f in args.factors.split(","))
        except ValueError:
            raise UsageError(f"--factors must be comma-separated numbers, got {args.factors!r}") from None
        fraction = 0.25 if args.fraction is None else args.fraction
        out = dh.contaminate_tabular(ds, fraction, factors, seed, args.per_feature)
    else:
        if not args.shape:
            raise UsageError("--shape is required with --mode images")
        fraction = 0.2 if args.fraction is None else args.fraction
        out = dh.contaminate_images(ds, _parse_shape(args.shape), fraction, args.block_ratio, seed)
    dh.write_csv(args.out, out.X, out.labels)
    mask_out = _mask_path(args.out, args.mask_out)
    dh.write_mask(mask_out, out.outlier_mask)
    log.info("contaminated %d of %d samples", int(out.outlier_mask.sum()), out.n)
    if args.json:
        sys.stdout.write(_dump({"data": args.out, "mask": mask_out, "outliers": int(out.outlier_mask.sum()),
                                "seed": seed}))
    return EXIT_OK


def _solver_params(args):
    params = {}
    for name in ("tau_a", "tau_b", "tau_c"):
        v = getattr(args, name)
        if v is not None:
            if v.lower() == "auto":
                params[name] = "auto"
            else:
                try:
                    params[name] = float(v)
                except ValueError:
                    raise UsageError(f"--{name.replace('_', '-')} must be a number or 'auto', got {v!r}") from None
    for flag, key in (("max_iter", "max_iterations"), ("subspace_tol", "subspace_tolerance"),
                      ("weight_tol", "weight_tolerance")):
        v = getattr(args, flag)
        if v is not None:
            params[key] = v
    if args.freeze_tau:
        params["freeze_tau"] = True
    return params


def cmd_fit(args):
    if args.method not in METHODS:
        raise UsageError(f"--method {args.method!r} is not valid; valid methods: {', '.join(METHODS)}")
    ds = _load_input(args)
    seed = args.seed if args.seed is not None else default_seed()
    params = _solver_params(args)
    if args.method == "l2p-pca":
        params["p"] = args.p
    if args.method == "pca-l1":
        params["seed"] = seed
    if args.method in ("rpca-om", "l2p-pca", "rpca-dswl"):
        params["rng_seed"] = seed
        SolverConfig(k=args.k, **{k: v for k, v in params.items() if k in SolverConfig.__dataclass_fields__})
    model, weights, res = fit_method(args.method, ds.X, args.k, params)
    centered = args.method in MEAN_LEARNING if args.centered is None else args.centered
    err = recon_error(model, ds.X, centered=centered)
    converged = True if res is None else res.converged
    payload = {
        "method": args.method,
        "seed": seed,
        "input": args.input,
        "params": params,
        **model.to_dict(),
        "weights": None if weights is None else weights.entries.tolist(),
        "converged": converged,
        "iterations": 0 if res is None else res.iterations,
        "reconstruction_error": err,
        "reconstruction_centered": centered,
    }
    _emit(args, payload, args.out)
    if args.trace_out:
        trace = res.trace.to_dict() if res is not None else {"iterations": []}
        Path(args.trace_out).write_text(_dump({"method": args.method, "seed": seed, "params": params, "trace": trace}))
    log.info("%s k=%d: reconstruction error %.6g (%s)", args.method, args.k, err,
             "centered" if centered else "uncentered")
    if args.strict and not converged:
        log.error("did not converge within %d iterations", res.iterations)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_transform(args):
    _require_file(args.model, "--model")
    try:
        model = SubspaceModel.from_dict(json.loads(Path(args.model).read_text()))
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise UsageError(f"--model: not a model file ({exc})") from None
    ds = _load_input(args)
    F = project(model, ds.X)
    if args.out:
        dh.write_csv(args.out, F, ds.labels)
    if args.json or not args.out:
        sys.stdout.write(_dump({"features": F.T.tolist(),
                                "labels": None if ds.labels is None else ds.labels.tolist()}))
    return EXIT_OK


def _load_config(args):
    _require_file(args.config, "--config")
    try:
        raw = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    except UnicodeDecodeError:
        raise UsageError("--config: file is not UTF-8 text") from None
    if not isinstance(raw, dict):
        raise UsageError("--config: top level must be a JSON object")
    if "config" in raw and "reports" in raw:
        raw = raw["config"]
    raw = dict(raw)
    if args.seed is not None:
        raw["seed"] = args.seed
    elif "seed" not in raw:
        raw["seed"] = default_seed()
    if args.k:
        raw["k"] = args.k
    if args.methods:
        raw["methods"] = args.methods.split(",")
    if args.folds is not None:
        raw["folds"] = args.folds
    out = args.out or raw.get("output")
    csv_out = args.csv or raw.get("csv")
    for key in ("output", "csv"):
        raw.pop(key, None)
    return resolve_config(raw, base_dir=Path(args.config).parent), out, csv_out


def cmd_eval(args):
    cfg, out, csv_out = _load_config(args)
    result = run_eval(cfg)
    _emit(args, report_json(result), out)
    if csv_out:
        with open(csv_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "k", "metric", "fold", "value"])
            for row in long_rows(result):
                writer.writerow(["" if v is None else v for v in row])
    if args.strict and any_unconverged(result):
        log.error("at least one fit did not converge")
        return EXIT_RUNTIME
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rpca-dswl", description="Robust PCA by discriminant sample-weight learning.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, inputs=True):
        sp.add_argument("--json", action="store_true", help="machine-readable result on stdout")
        sp.add_argument("--seed", type=int, default=None, help=f"random seed (default ${SEED_ENV} or 0)")
        if inputs:
            sp.add_argument("--input", required=True, help="CSV, one sample per row")
            sp.add_argument("--labels", action="store_true", help="last CSV column is an integer label")
            sp.add_argument("--header", action="store_true", help="skip the first CSV line")

    s = sub.add_parser("synth", help="generate the correlated 2-D toy dataset")
    common(s, inputs=False)
    s.add_argument("--n", type=int, default=200, help="number of normal samples")
    s.add_argument("--corr", type=float, default=0.95)
    s.add_argument("--outliers", default=None, help="CATEGORY:COUNT:MAGNITUDE, e.g. both:20:8")
    s.add_argument("--spread", type=float, default=0.5, help="outlier cluster spread")
    s.add_argument("--out", required=True)
    s.add_argument("--mask-out", default=None)
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("contaminate", help="inject outliers into a CSV dataset")
    common(c)
    c.add_argument("--mask", default=None, help="existing outlier mask to extend")
    c.add_argument("--mode", choices=("tabular", "images"), default="tabular")
    c.add_argument("--fraction", type=float, default=None)
    c.add_argument("--factors", default="5,10,20")
    c.add_argument("--per-feature", action="store_true")
    c.add_argument("--shape", default=None, help="image shape HxW for --mode images")
    c.add_argument("--block-ratio", type=float, default=0.25)
    c.add_argument("--out", required=True)
    c.add_argument("--mask-out", default=None)
    c.set_defaults(func=cmd_contaminate)

    f = sub.add_parser("fit", help="fit one method and write the model")
    common(f)
    f.add_argument("--method", default="rpca-dswl", help=f"one of {', '.join(METHODS)}")
    f.add_argument("--k", type=int, default=1)
    f.add_argument("--tau-a", dest="tau_a", default=None)
    f.add_argument("--tau-b", dest="tau_b", default=None)
    f.add_argument("--tau-c", dest="tau_c", default=None)
    f.add_argument("--freeze-tau", action="store_true", help="keep the first iteration's automatic temperatures")
    f.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    f.add_argument("--subspace-tol", dest="subspace_tol", type=float, default=None)
    f.add_argument("--weight-tol", dest="weight_tol", type=float, default=None)
    f.add_argument("--p", type=float, default=1.0, help="exponent for l2p-pca")
    g = f.add_mutually_exclusive_group()
    g.add_argument("--centered", dest="centered", action="store_true", default=None)
    g.add_argument("--uncentered", dest="centered", action="store_false")
    f.add_argument("--strict", action="store_true", help="exit 3 if the solver does not converge")
    f.add_argument("--out", default=None, help="model JSON path (default stdout)")
    f.add_argument("--trace-out", default=None, help="per-iteration trace JSON path")
    f.set_defaults(func=cmd_fit)

    t = sub.add_parser("transform", help="project samples onto a fitted subspace")
    common(t)
    t.add_argument("--model", required=True)
    t.add_argument("--out", default=None, help="features CSV path (default JSON on stdout)")
    t.set_defaults(func=cmd_transform)

    e = sub.add_parser("eval", help="run an experiment config")
    e.add_argument("--config", required=True, help="experiment JSON, or a previous report")
    e.add_argument("--json", action="store_true")
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--k", type=int, nargs="+", default=None)
    e.add_argument("--methods", default=None, help="comma-separated method names")
    e.add_argument("--folds", type=int, default=None)
    e.add_argument("--out", default=None)
    e.add_argument("--csv", default=None, help="long-format CSV export")
    e.add_argument("--strict", action="store_true")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ConvergenceFailure as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    except (RPCAError, OSError, ValueError) as exc:
        # ValueError covers undecodable bytes and malformed JSON structure
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
