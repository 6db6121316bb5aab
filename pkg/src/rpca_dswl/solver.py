"""
Alternating estimation of sample weights, weighted mean and principal subspace.

Each iteration, in this order:

1. centre ``m = X w``
2. weighted scatter ``S = X (diag(w) - w wᵀ) Xᵀ``
3. ``P`` = top-k eigenvectors of ``S``
4. new weights from the three score families, merged

Iteration starts from uniform weights and stops once both the projector and
the weights have settled, or when ``max_iterations`` is reached.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import DegenerateData, RankRequestTooLarge
from .linalg import projector_distance, top_k_eigh, weighted_mean, weighted_scatter
from .types import (
    FitResult,
    IterationRecord,
    SolverConfig,
    SolverTrace,
    SubspaceModel,
    WeightVector,
    as_matrix,
)
from .weights import learn_weights

log = logging.getLogger(__name__)


def converged(prev, curr, config: SolverConfig) -> bool:
    """Whether two successive ``(SubspaceModel, WeightVector)`` states agree.

    The subspace test compares projectors, so it ignores sign flips and basis
    rotations inside the subspace.
    """
    prev_model, prev_w = prev
    curr_model, curr_w = curr
    dist = projector_distance(prev_model.projection, curr_model.projection)
    dw = float(np.abs(np.asarray(curr_w, dtype=float) - np.asarray(prev_w, dtype=float)).sum())
    return dist <= config.subspace_tolerance and dw <= config.weight_tolerance


def check_not_degenerate(X: np.ndarray):
    if np.all(X == X[:, :1]):
        raise DegenerateData("all samples are identical; the scatter matrix is zero")


def _scatter_is_zero(S: np.ndarray, X: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(X))))
    return float(np.trace(S)) <= (1e-10 * scale) ** 2


def fit_rpca_dswl(X, config: SolverConfig | None = None, callback=None) -> FitResult:
    """Fit a robust subspace by discriminant sample-weight learning.

    Parameters
    ----------
    X : array_like or DataMatrix, shape (d, n)
        Samples as columns.
    config : SolverConfig, optional
        Defaults to ``SolverConfig()`` (k=1, automatic temperatures).
    callback : callable, optional
        Called as ``callback(iteration, model, weights)`` after the subspace
        step of every iteration, with the weights that produced the model.

    Returns
    -------
    FitResult
        ``weights`` holds the merged weights learned from the final model.
    """
    config = config or SolverConfig()
    X = as_matrix(X)
    d, n = X.shape
    k = config.k
    if not 1 <= k <= min(d, n - 1):
        raise RankRequestTooLarge(f"k={k} must satisfy 1 <= k <= min(d, n-1) = {min(d, n - 1)}")
    check_not_degenerate(X)

    taus = (config.tau_a, config.tau_b, config.tau_c)
    w = WeightVector.uniform(n)
    prev = None
    records = []
    is_converged = False
    w_new = w

    for it in range(1, config.max_iterations + 1):
        m = weighted_mean(X, w)
        S = weighted_scatter(X, w)
        if _scatter_is_zero(S, X):
            raise DegenerateData(f"weighted scatter vanished at iteration {it}")
        eig = top_k_eigh(S, k)
        model = SubspaceModel(eig.vectors, m)
        if callback is not None:
            callback(it, model, w)

        if config.freeze_weights:
            w_new = w
        else:
            w_new, parts = learn_weights(X, model, taus)
            if config.freeze_tau:
                taus = parts["tau"]

        subspace_change = (
            float("inf") if prev is None else projector_distance(prev.projection, model.projection)
        )
        weight_change = float(np.abs(w_new.entries - w.entries).sum())
        records.append(
            IterationRecord(
                iteration=it,
                mean=tuple(m.tolist()),
                eigenvalues=tuple(eig.values.tolist()),
                subspace_change=subspace_change,
                weight_change=weight_change,
                objective=float(eig.values.sum()),
            )
        )
        log.debug("iter %d: dP=%.3g dw=%.3g", it, subspace_change, weight_change)

        if (
            prev is not None
            and subspace_change <= config.subspace_tolerance
            and weight_change <= config.weight_tolerance
        ):
            is_converged = True
            break
        prev = model
        w = w_new

    return FitResult(
        model=model,
        weights=w_new,
        trace=SolverTrace(tuple(records)),
        converged=is_converged,
        iterations=len(records),
    )
