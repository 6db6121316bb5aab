"""Acceptance suite.

Each test runs one numbered criterion at its stated tolerance and runtime
budget and records a one-line PASS/FAIL verdict. The verdicts are printed as
they happen and again in the pytest terminal summary. The module also runs
standalone: ``python tests/test_acceptance.py``.
"""

import json
import time

import numpy as np
import pytest

from oracles import entropy_argmax_pg, jacobi_eigh, projector
from rpca_dswl.baselines import fit_l2p_pca, fit_pca, fit_pca_l1, fit_rpca_om
from rpca_dswl.cli import main
from rpca_dswl.data import (
    ToySpec,
    contaminate_images,
    contaminate_tabular,
    gen_gaussian_classes,
    gen_lowrank_images,
    gen_toy,
)
from rpca_dswl.evaluation import knn_cv_accuracy, psnr, recon_error, weight_separation
from rpca_dswl.linalg import max_principal_angle, project, projector_distance, top_k_eigh
from rpca_dswl.solver import fit_rpca_dswl
from rpca_dswl.types import SolverConfig
from rpca_dswl.weights import entropy_softmax

VERDICTS = []


def verdict(number, title, ok, detail, elapsed, budget):
    in_time = budget is None or elapsed < budget
    status = "PASS" if ok and in_time else "FAIL"
    limit = "" if budget is None else f" (budget {budget:.0f} s)"
    line = f"criterion {number} {status}: {title}; {detail}; {elapsed:.1f} s{limit}"
    VERDICTS.append(line)
    print(line)
    assert ok, line
    assert in_time, line


# ---------------------------------------------------------------- 1


def test_criterion_1_softmax_matches_projected_gradient():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    taus = (0.1, 1.0, 10.0)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(2, 7))
        tau = taus[i % 3]
        s = rng.uniform(0.0, 5.0, n)
        oracle = entropy_argmax_pg(s, tau)
        worst = max(worst, float(np.abs(entropy_softmax(s, tau).entries - oracle).max()))
    elapsed = time.perf_counter() - t0
    verdict(1, "entropy softmax vs projected-gradient oracle", worst <= 1e-6,
            f"200 cases, max entry error {worst:.2e} (tol 1e-6)", elapsed, 10)


# ---------------------------------------------------------------- 2


def random_symmetric(rng, i):
    if i % 2 == 0:
        A = rng.standard_normal((10, 10))
        return A + A.T, (1, 3, 5, 10)
    # repeated eigenvalues; k only at boundaries between distinct values
    Q, _ = np.linalg.qr(rng.standard_normal((10, 10)))
    vals = np.repeat(rng.normal(0.0, 3.0, 4), [3, 2, 4, 1])
    order = np.argsort(-vals)
    A = Q @ np.diag(vals) @ Q.T
    A = (A + A.T) / 2
    sorted_vals = vals[order]
    ks = [k for k in range(1, 11) if k == 10 or sorted_vals[k - 1] - sorted_vals[k] > 1e-6]
    return A, ks


def test_criterion_2_eigensolver_matches_jacobi():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    cases = [random_symmetric(rng, i) for i in range(100)]
    oracle = [jacobi_eigh(A) for A, _ in cases]
    val_err = proj_err = 0.0
    for (A, ks), (vals, vecs) in zip(cases, oracle):
        for k in ks:
            res = top_k_eigh(A, k)
            val_err = max(val_err, float(np.abs(res.values - vals[:k]).max()))
            proj_err = max(proj_err, float(np.linalg.norm(projector(res.vectors) - projector(vecs[:, :k]))))
    elapsed = time.perf_counter() - t0
    ok = val_err <= 1e-8 and proj_err <= 1e-6
    verdict(2, "top-k eigenpairs vs Jacobi oracle", ok,
            f"100 matrices (50 with repeated eigenvalues), eigenvalue error {val_err:.1e} (tol 1e-8), "
            f"projector error {proj_err:.1e} (tol 1e-6)",
            elapsed, 5)


# ---------------------------------------------------------------- 3


def test_criterion_3_complementarity_every_iteration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst, iterations = 0.0, 0

    def check(_, model, w):
        nonlocal worst, iterations
        Xc = X - model.mean[:, None]
        P = model.projection
        Y = P.T @ Xc
        R = Xc - P @ Y
        a = w.entries
        var = a @ (Y ** 2).sum(axis=0)
        res = a @ (R ** 2).sum(axis=0)
        tot = a @ (Xc ** 2).sum(axis=0)
        worst = max(worst, abs(var + res - tot) / tot)
        iterations += 1

    for _ in range(50):
        d = int(rng.integers(2, 9))
        n = int(rng.integers(10, 80))
        k = int(rng.integers(1, d))
        X = rng.standard_normal((d, n)) * rng.uniform(0.1, 10.0, (d, 1)) + rng.normal(0.0, 5.0, (d, 1))
        X[:, : n // 10] *= 8.0
        fit_rpca_dswl(X, SolverConfig(k=k), callback=check)
    elapsed = time.perf_counter() - t0
    verdict(3, "weighted variance + residual = total", worst <= 1e-10,
            f"50 fits, {iterations} iterations, max relative gap {worst:.1e} (tol 1e-10)", elapsed, 30)


# ---------------------------------------------------------------- 4, 5


def toy_outcome(category, seed):
    ds = gen_toy(ToySpec(outlier_category=category, n_outliers=20, magnitude=8.0, rng_seed=seed))
    clean = ds.X[:, ~ds.outlier_mask]
    ref = fit_pca(clean, 1)
    res = fit_rpca_dswl(ds.X, SolverConfig(k=1))
    clean_mean = clean.mean(axis=1)
    return {
        "angle_dswl": max_principal_angle(res.model.projection, ref.projection),
        "angle_pca": max_principal_angle(fit_pca(ds.X, 1).projection, ref.projection),
        "mean_dswl": float(np.linalg.norm(res.model.mean - clean_mean)),
        "mean_raw": float(np.linalg.norm(ds.X.mean(axis=1) - clean_mean)),
        "ratio": weight_separation(res.weights, ds.outlier_mask)["ratio"],
    }


def test_criterion_4_toy_reproduction():
    t0 = time.perf_counter()
    parts, ok = [], True
    for category in ("ocs", "both"):
        wins = 0
        for seed in range(20):
            o = toy_outcome(category, seed)
            wins += o["angle_dswl"] < o["angle_pca"] and o["mean_dswl"] < o["mean_raw"]
        parts.append(f"{category} outliers {wins}/20")
        ok = ok and wins >= 18
    elapsed = time.perf_counter() - t0
    verdict(4, "toy angle and mean beat standard PCA", ok,
            ", ".join(parts) + " seeds (need >= 18)", elapsed, 60)


def test_criterion_5_weight_separation():
    t0 = time.perf_counter()
    ratios = [toy_outcome("both", seed)["ratio"] for seed in range(20)]
    wins = sum(r > 1.0 for r in ratios)
    elapsed = time.perf_counter() - t0
    verdict(5, "normal weights strictly above outlier weights", wins >= 18,
            f"{wins}/20 seeds with ratio > 1 (need >= 18), smallest ratio {min(ratios):.3g}", elapsed, 30)


# ---------------------------------------------------------------- 6


def test_criterion_6_baseline_sanity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    l2p_err, om_bad, l1_bad = 0.0, 0, 0
    for _ in range(50):
        d = int(rng.integers(3, 9))
        n = int(rng.integers(10, 60))
        k = int(rng.integers(1, d))
        X = rng.standard_normal((d, n)) * rng.uniform(0.5, 4.0, (d, 1))
        X[:, : n // 8] *= 10.0
        l2p_err = max(l2p_err, projector_distance(fit_l2p_pca(X, k, p=2.0).model.projection,
                                                  fit_pca(X, k).projection))
        obj = fit_rpca_om(X, k).trace.objectives()
        om_bad += any(b > a * (1 + 1e-9) for a, b in zip(obj, obj[1:]))
        _, hist = fit_pca_l1(X, k, return_history=True)
        l1_bad += any(b < a - 1e-12 for h in hist for a, b in zip(h, h[1:]))
    elapsed = time.perf_counter() - t0
    ok = l2p_err <= 1e-8 and om_bad == 0 and l1_bad == 0
    verdict(6, "baseline sanity", ok,
            f"l2p(p=2) vs PCA projector gap {l2p_err:.1e} (tol 1e-8), "
            f"RPCA-OM non-monotone {om_bad}/50, PCA-L1 non-monotone {l1_bad}/50", elapsed, 30)


# ---------------------------------------------------------------- 7


def image_seed(seed, ks):
    ds = gen_lowrank_images(300, (32, 32), rank=10, noise=0.05, seed=seed)
    train = contaminate_images(ds.subset(np.arange(270)), (32, 32), 0.2, 0.25, seed=seed + 100)
    test = ds.X[:, 270:]
    out = {}
    for k in ks:
        scores = {}
        for name, model in (("dswl", fit_rpca_dswl(train.X, SolverConfig(k=k)).model),
                            ("pca", fit_pca(train.X, k))):
            m = model.mean[:, None]
            P = model.projection
            rec = P @ (P.T @ (test - m)) + m
            scores[name] = (recon_error(model, test, centered=True),
                            float(np.mean([psnr(test[:, i], rec[:, i]) for i in range(test.shape[1])])))
        out[k] = scores
    return out


def test_criterion_7_image_protocol():
    t0 = time.perf_counter()
    ks = (10, 50, 100)
    runs = [image_seed(seed, ks) for seed in range(10)]
    parts, ok = [], True
    for k in ks:
        wins = sum(r[k]["dswl"][0] <= r[k]["pca"][0] for r in runs)
        p_dswl = float(np.mean([r[k]["dswl"][1] for r in runs]))
        p_pca = float(np.mean([r[k]["pca"][1] for r in runs]))
        good = wins >= 8 and p_dswl >= p_pca
        ok = ok and good
        parts.append(f"k={k}: recon {wins}/10, PSNR {p_dswl:.2f} vs {p_pca:.2f} dB"
                     + ("" if good else " [miss]"))
    elapsed = time.perf_counter() - t0
    verdict(7, "image reconstruction no worse than PCA", ok,
            "; ".join(parts) + " (need recon >= 8/10 and PSNR >= PCA)", elapsed, 300)


# ---------------------------------------------------------------- 8


def test_criterion_8_classification_protocol():
    t0 = time.perf_counter()
    wins, rows = 0, []
    for seed in range(10):
        ds = gen_gaussian_classes(60, 10, 3, separation=3.0, offset=5.0, seed=seed)
        dc = contaminate_tabular(ds, 0.25, (5.0, 10.0, 20.0), seed=seed + 1000)
        dswl = fit_rpca_dswl(dc.X, SolverConfig(k=3)).model
        acc_dswl, _ = knn_cv_accuracy(project(dswl, dc.X), dc.labels, 10, 1, seed)
        acc_pca, _ = knn_cv_accuracy(project(fit_pca(dc.X, 3), dc.X), dc.labels, 10, 1, seed)
        wins += acc_dswl >= acc_pca
        rows.append(acc_dswl - acc_pca)
    elapsed = time.perf_counter() - t0
    verdict(8, "1-NN accuracy on DSWL features >= PCA features", wins >= 7,
            f"{wins}/10 seeds (need >= 7), mean accuracy gain {np.mean(rows):+.3f}", elapsed, 120)


# ---------------------------------------------------------------- 9


def test_criterion_9_eval_is_deterministic(tmp_path):
    t0 = time.perf_counter()
    config = {
        "dataset": {"type": "toy", "outlier_category": "both", "n_outliers": 20},
        "methods": ["pca", "pca-l1", "rpca-om", {"name": "l2p-pca", "params": {"p": 1.0}}, "rpca-dswl"],
        "k": [1],
        "metrics": ["recon_error", "psnr", "angle", "weight_separation"],
        "folds": 5,
        "seed": 11,
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    first, second, third = (tmp_path / f"{n}.json" for n in ("first", "second", "third"))
    codes = [main(["eval", "--config", str(cfg), "--out", str(first)]),
             main(["eval", "--config", str(cfg), "--out", str(second)]),
             main(["eval", "--config", str(first), "--out", str(third)])]
    same = first.read_bytes() == second.read_bytes() == third.read_bytes()
    elapsed = time.perf_counter() - t0
    verdict(9, "repeated eval runs are byte-identical", codes == [0, 0, 0] and same,
            f"exit codes {codes}, reports identical: {same} (including the rerun from the embedded config)",
            elapsed, None)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
