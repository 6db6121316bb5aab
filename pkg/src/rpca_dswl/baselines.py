"""
Reference PCA variants: classical PCA, PCA-L1, RPCA-OM and L2,p-PCA.

RPCA-OM and L2,p-PCA are iteratively reweighted eigendecompositions; their
implicit per-sample weights are renormalised onto the simplex each round so
the same weighted-scatter machinery applies (uniform rescaling of a scatter
matrix does not move its eigenvectors).
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceFailure, InvalidP, RankRequestTooLarge
from .linalg import fix_signs, projector_distance, top_k_eigh, weighted_mean, weighted_scatter
from .solver import check_not_degenerate
from .types import (
    FitResult,
    IterationRecord,
    SolverConfig,
    SolverTrace,
    SubspaceModel,
    WeightVector,
    as_matrix,
)

RESIDUAL_FLOOR = 1e-12
L1_MAX_SIGN_ITERATIONS = 1000


def _check_rank(k, d):
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= d:
        raise RankRequestTooLarge(f"k={k} must satisfy 1 <= k <= d = {d}")


def fit_pca(X, k: int) -> SubspaceModel:
    """Classical PCA: column mean plus top-k eigenvectors of the scatter."""
    X = as_matrix(X)
    d, n = X.shape
    _check_rank(k, d)
    w = WeightVector.uniform(n)
    eig = top_k_eigh(weighted_scatter(X, w), k)
    return SubspaceModel(eig.vectors, weighted_mean(X, w))


# ---------------------------------------------------------------- PCA-L1


def _sign(v):
    # sign(0) := +1 keeps the polarity pattern deterministic
    return np.where(v >= 0, 1.0, -1.0)


def l1_component(Xc: np.ndarray, p0: np.ndarray, max_iterations: int = L1_MAX_SIGN_ITERATIONS):
    """Fixed-point polarity iteration for ``max_p Σ|pᵀx_i|`` with ``|p| = 1``.

    Returns the unit vector and the objective after every update (the first
    entry is the objective at ``p0``).
    """
    p = p0 / np.linalg.norm(p0)
    signs = _sign(p @ Xc)
    history = [float(np.abs(p @ Xc).sum())]
    for _ in range(max_iterations):
        q = Xc @ signs
        nq = np.linalg.norm(q)
        if nq == 0:
            return p, history
        p = q / nq
        new_signs = _sign(p @ Xc)
        history.append(float(np.abs(p @ Xc).sum()))
        if np.array_equal(new_signs, signs):
            return p, history
        signs = new_signs
    raise ConvergenceFailure(max_iterations, f"polarity pattern still changing after {max_iterations} iterations")


def fit_pca_l1(X, k: int, seed=0, return_history: bool = False):
    """Greedy PCA-L1: one component at a time, deflating in between.

    Each component starts from the leading L2 principal direction of the
    deflated data. ``seed`` is accepted for interface symmetry; the procedure
    itself is deterministic.
    """
    X = as_matrix(X)
    d, n = X.shape
    _check_rank(k, d)
    m = X.mean(axis=1)
    R = X - m[:, None]
    P = np.zeros((d, k))
    histories = []
    scale = float(np.trace(R @ R.T))
    for j in range(k):
        S = R @ R.T
        if float(np.trace(S)) <= 1e-24 * scale:
            # data exhausted; complete the basis deterministically
            p = _complement_vector(P[:, :j], d)
            histories.append([0.0])
        else:
            p0 = top_k_eigh(0.5 * (S + S.T), 1).vectors[:, 0]
            p, hist = l1_component(R, p0)
            histories.append(hist)
        # guard against drift out of the orthogonal complement
        p = p - P[:, :j] @ (P[:, :j].T @ p)
        p = fix_signs(p / np.linalg.norm(p))[:, 0]
        P[:, j] = p
        R = R - np.outer(p, p @ R)
    model = SubspaceModel(P, m)
    return (model, histories) if return_history else model


def _complement_vector(P, d):
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        v = e - P @ (P.T @ e)
        if np.linalg.norm(v) > 1e-6:
            return v / np.linalg.norm(v)
    raise RankRequestTooLarge("no orthogonal direction left")


# ---------------------------------------------------------------- IRLS family


def _weighted_top_k(Xc, w, k):
    """Top-k eigenpairs of ``Xc diag(w) Xcᵀ`` via an SVD of ``Xc diag(√w)``.

    Reweighting drives some weights many orders of magnitude above the rest;
    forming the scatter explicitly then loses the light samples' contribution
    to rounding, while the SVD keeps it to working precision.
    """
    d, n = Xc.shape
    if k > min(d, n):
        S = (Xc * w) @ Xc.T
        eig = top_k_eigh(0.5 * (S + S.T), k)
        return eig.vectors, eig.values
    U, sv, _ = np.linalg.svd(Xc * np.sqrt(w), full_matrices=False)
    return fix_signs(U[:, :k]), sv[:k] ** 2


def _irls(X, k, config, centre_each_round, weight_fn, objective_fn):
    """Shared reweighting loop.

    ``centre_each_round`` selects optimal-mean estimation (``m = X w``) or a
    fixed unweighted centre with an uncentred weighted second moment.
    """
    d, n = X.shape
    w = WeightVector.uniform(n)
    fixed_mean = X.mean(axis=1)
    records, prev, converged = [], None, False
    for it in range(1, config.max_iterations + 1):
        m = weighted_mean(X, w) if centre_each_round else fixed_mean
        P, values = _weighted_top_k(X - m[:, None], w.entries, k)
        model = SubspaceModel(P, m)
        r = _residual_norms(X, model)
        w_new = WeightVector.from_log(weight_fn(np.maximum(r, RESIDUAL_FLOOR)))
        change = float("inf") if prev is None else projector_distance(prev.projection, model.projection)
        dw = float(np.abs(w_new.entries - w.entries).sum())
        records.append(IterationRecord(it, tuple(m.tolist()), tuple(values.tolist()), change, dw,
                                       objective_fn(r)))
        if prev is not None and change <= config.subspace_tolerance and dw <= config.weight_tolerance:
            converged = True
            break
        prev, w = model, w_new
    return FitResult(model, w_new, SolverTrace(tuple(records)), converged, len(records))


def _residual_norms(X, model):
    Xc = X - model.mean[:, None]
    P = model.projection
    return np.linalg.norm(Xc - P @ (P.T @ Xc), axis=0)


def fit_rpca_om(X, k: int, config: SolverConfig | None = None) -> FitResult:
    """L2,1 reconstruction error with optimal mean, by reweighting with ``1/r_i``.

    The trace's ``objective`` column holds ``Σ r_i`` for the model of each
    iteration.
    """
    config = config or SolverConfig(k=k)
    X = as_matrix(X)
    _check_rank(k, X.shape[0])
    check_not_degenerate(X)
    return _irls(X, k, config, True, lambda r: -np.log(r), lambda r: float(r.sum()))


def fit_l2p_pca(X, k: int, p: float = 1.0, config: SolverConfig | None = None) -> FitResult:
    """L2,p reconstruction error on mean-centred data, reweighting with ``r_i^(p-2)``.

    ``p = 2`` gives uniform weights and reproduces ``fit_pca``.
    """
    if not (np.isfinite(p) and 0.0 < p <= 2.0):
        raise InvalidP(f"p must lie in (0, 2], got {p}")
    config = config or SolverConfig(k=k)
    X = as_matrix(X)
    _check_rank(k, X.shape[0])
    check_not_degenerate(X)
    return _irls(X, k, config, False, lambda r: (p - 2.0) * np.log(r), lambda r: float((r ** p).sum()))
