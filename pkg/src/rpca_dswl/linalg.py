"""
Dense kernels: weighted mean and scatter, symmetric top-k eigenpairs,
projection and reconstruction.

The eigendecomposition always runs on the ``d x d`` scatter matrix, so the
cost per call is O(n d^2 + d^3) regardless of whether ``d > n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import subspace_angles

from .errors import ConvergenceFailure, DimensionMismatch, NotSymmetric, RankRequestTooLarge
from .types import DataMatrix, SubspaceModel, as_matrix, as_weights

SYMMETRY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Top-k eigenpairs, values descending, vectors as orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def k(self) -> int:
        return self.values.size


def weighted_mean(X, w) -> np.ndarray:
    """Return ``X @ w``, the weighted average of the columns of ``X``."""
    X = as_matrix(X)
    w = as_weights(w).entries
    if w.size != X.shape[1]:
        raise DimensionMismatch(f"{w.size} weights for {X.shape[1]} samples")
    return X @ w


def weighted_scatter(X, w) -> np.ndarray:
    """Weighted scatter ``X H Xᵀ`` with ``H = diag(w) - w wᵀ``.

    Evaluated as ``sum_i w_i (x_i - m)(x_i - m)ᵀ`` with ``m = X w``, which is
    algebraically identical and avoids forming the n x n matrix ``H``.
    """
    X = as_matrix(X)
    w = as_weights(w).entries
    if w.size != X.shape[1]:
        raise DimensionMismatch(f"{w.size} weights for {X.shape[1]} samples")
    Xc = X - (X @ w)[:, None]
    S = (Xc * w) @ Xc.T
    return 0.5 * (S + S.T)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is nonnegative.

    Ties in magnitude resolve to the lowest row index.
    """
    V = np.array(vectors, dtype=float, copy=True)
    if V.ndim == 1:
        V = V[:, None]
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[rows, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs


def top_k_eigh(S, k: int) -> EigenResult:
    """Largest ``k`` eigenpairs of the symmetric matrix ``S``.

    Parameters
    ----------
    S : array_like, shape (d, d)
        Symmetric matrix; asymmetry beyond ``1e-8 * max(1, |S|_F)`` is rejected.
    k : int
        Number of eigenpairs, ``1 <= k <= d``.

    Returns
    -------
    EigenResult
        Eigenvalues in descending order and sign-normalised eigenvectors.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {S.shape}")
    d = S.shape[0]
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= d:
        raise RankRequestTooLarge(f"requested k={k} eigenpairs of a {d}x{d} matrix")
    k = int(k)
    if not np.isfinite(S).all():
        raise ConvergenceFailure(0, "matrix contains non-finite entries")
    scale = max(1.0, float(np.linalg.norm(S)))
    if np.linalg.norm(S - S.T) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric")
    S = 0.5 * (S + S.T)
    try:
        if k < d:
            vals, vecs = scipy.linalg.eigh(S, subset_by_index=[d - k, d - 1], driver="evr")
        else:
            vals, vecs = np.linalg.eigh(S)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConvergenceFailure(0, f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(vals, kind="stable")[::-1][:k]
    values = vals[order]
    vectors = fix_signs(vecs[:, order])
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenResult(values, vectors)


def _check_model(model: SubspaceModel, X: np.ndarray):
    if model.d != X.shape[0]:
        raise DimensionMismatch(f"model has d={model.d}, data has d={X.shape[0]}")


def project(model: SubspaceModel, X) -> np.ndarray:
    """Coordinates ``Pᵀ (X - m 1ᵀ)``, shape (k, n)."""
    X = as_matrix(X)
    _check_model(model, X)
    return model.projection.T @ (X - model.mean[:, None])


def reconstruct(model: SubspaceModel, X) -> DataMatrix:
    """``P Pᵀ (X - m 1ᵀ) + m 1ᵀ``."""
    X = as_matrix(X)
    _check_model(model, X)
    m = model.mean[:, None]
    return DataMatrix(model.projection @ (model.projection.T @ (X - m)) + m)


def projector_distance(P1, P2) -> float:
    """Frobenius distance between the orthogonal projectors of two bases."""
    P1 = np.asarray(P1, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    return float(np.linalg.norm(P1 @ P1.T - P2 @ P2.T))


def principal_angles(P1, P2) -> np.ndarray:
    """Principal angles (radians, ascending) between span(P1) and span(P2)."""
    return np.sort(subspace_angles(np.asarray(P1, dtype=float), np.asarray(P2, dtype=float)))


def max_principal_angle(P1, P2) -> float:
    return float(principal_angles(P1, P2)[-1])
