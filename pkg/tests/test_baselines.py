import math

import numpy as np
import pytest

from oracles import l1_grid_direction
from rpca_dswl.baselines import fit_l2p_pca, fit_pca, fit_pca_l1, fit_rpca_om, l1_component
from rpca_dswl.data import ToySpec, gen_toy
from rpca_dswl.errors import InvalidP, RankRequestTooLarge
from rpca_dswl.linalg import max_principal_angle, projector_distance, top_k_eigh, weighted_scatter
from rpca_dswl.solver import fit_rpca_dswl
from rpca_dswl.types import WeightVector


def rank_k_data(rng, d, n, k, offset=True):
    B, _ = np.linalg.qr(rng.standard_normal((d, k)))
    m = rng.standard_normal(d) if offset else np.zeros(d)
    return B, m[:, None] + B @ rng.standard_normal((k, n))


def test_pca_rank_one_and_population_direction():
    t = np.linspace(-2, 2, 11)
    X = np.vstack([t, t])
    P = fit_pca(X, 1).projection
    assert max_principal_angle(P, np.array([[1.0], [1.0]]) / math.sqrt(2)) < 1e-8
    big = gen_toy(ToySpec(n_normal=100_000, rng_seed=0))
    P = fit_pca(big.X, 1).projection
    assert math.degrees(max_principal_angle(P, np.array([[1.0], [1.0]]) / math.sqrt(2))) < 1.0


def test_pca_is_uniform_weight_eigenspace():
    X = np.random.default_rng(1).standard_normal((5, 30))
    model = fit_pca(X, 3)
    S = weighted_scatter(X, WeightVector.uniform(30))
    assert projector_distance(model.projection, top_k_eigh(S, 3).vectors) <= 1e-10
    assert np.allclose(model.mean, X.mean(axis=1))
    with pytest.raises(RankRequestTooLarge):
        fit_pca(X, 6)


def test_every_baseline_recovers_exact_subspace():
    rng = np.random.default_rng(2)
    B, X = rank_k_data(rng, 6, 40, 2)
    models = [
        fit_pca(X, 2),
        fit_pca_l1(X, 2),
        fit_rpca_om(X, 2).model,
        fit_l2p_pca(X, 2, p=1.0).model,
    ]
    for m in models:
        assert np.linalg.norm(m.projection.T @ m.projection - np.eye(2)) <= 1e-8
        assert projector_distance(m.projection, B) <= 1e-6


def test_pca_l1_single_axis():
    X = np.zeros((3, 6))
    X[1] = [1.0, -2.0, 3.0, 0.5, -1.0, 4.0]
    P = fit_pca_l1(X, 1).projection
    assert np.allclose(P[:, 0], [0.0, 1.0, 0.0])


def test_pca_l1_matches_angular_grid():
    rng = np.random.default_rng(3)
    for n in (3, 4, 5, 6):
        for _ in range(5):
            X = rng.standard_normal((2, n)) * [[3.0], [1.0]]
            Xc = X - X.mean(axis=1, keepdims=True)
            p = fit_pca_l1(X, 1).projection[:, 0]
            q, best = l1_grid_direction(Xc, steps=3600)
            # the fixed point is a local maximum; on these tiny instances it should be global
            ours = np.abs(p @ Xc).sum()
            assert ours >= best - 1e-9
            angle = math.degrees(math.acos(min(1.0, abs(p @ q))))
            assert angle <= 0.1 or abs(ours - np.abs(q @ Xc).sum()) <= 1e-9


def test_pca_l1_objective_monotone():
    rng = np.random.default_rng(4)
    for _ in range(20):
        X = rng.standard_normal((5, 20))
        _, hist = fit_pca_l1(X, 3, return_history=True)
        for h in hist:
            assert all(b >= a - 1e-12 for a, b in zip(h, h[1:]))


def test_l1_component_zero_data():
    p, hist = l1_component(np.zeros((2, 3)), np.array([1.0, 0.0]))
    assert np.allclose(p, [1.0, 0.0]) and hist == [0.0]


def test_rpca_om_objective_monotone_and_exact():
    rng = np.random.default_rng(5)
    for _ in range(10):
        X = rng.standard_normal((5, 20))
        obj = fit_rpca_om(X, 2).trace.objectives()
        assert all(b <= a * (1 + 1e-9) for a, b in zip(obj, obj[1:]))
    B, X = rank_k_data(rng, 5, 20, 2)
    res = fit_rpca_om(X, 2)
    assert res.trace.objectives()[-1] <= 1e-9


def test_rpca_om_mean_drifts_toward_pcs_outliers():
    ds = gen_toy(ToySpec(outlier_category="pcs", n_outliers=20, rng_seed=0))
    om = fit_rpca_om(ds.X, 1).model
    dswl = fit_rpca_dswl(ds.X).model
    assert np.linalg.norm(om.mean) > np.linalg.norm(dswl.mean)


def test_l2p_reductions():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((4, 25))
    res = fit_l2p_pca(X, 2, p=2.0)
    assert projector_distance(res.model.projection, fit_pca(X, 2).projection) <= 1e-8
    for _ in range(10):
        X = rng.standard_normal((5, 20))
        obj = fit_l2p_pca(X, 2, p=1.0).trace.objectives()
        assert all(b <= a * (1 + 1e-9) for a, b in zip(obj, obj[1:]))
    _, X = rank_k_data(rng, 5, 20, 2, offset=False)
    res = fit_l2p_pca(X, 2, p=1.0)
    assert res.trace.objectives()[-1] <= 1e-9
    for bad in (0.0, -1.0, 2.5, np.nan):
        with pytest.raises(InvalidP):
            fit_l2p_pca(X, 1, p=bad)


def test_rpca_om_monotone_after_weight_collapse():
    # 1/r weights pile onto a few samples with near-zero residuals; the
    # eigenvectors must still honour the lightly weighted rest
    rng = np.random.default_rng(25)
    for _ in range(10):
        X = rng.standard_normal((8, 22)) * rng.uniform(0.5, 4.0, (8, 1))
        X[:, :2] *= 10.0
        res = fit_rpca_om(X, 5)
        obj = res.trace.objectives()
        assert all(b <= a * (1 + 1e-9) for a, b in zip(obj, obj[1:]))
