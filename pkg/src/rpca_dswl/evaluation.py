"""
Metrics: reconstruction error, PSNR, nearest-neighbour cross-validation
accuracy and weight separation, plus the EvalReport container.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateMask, DimensionMismatch, LengthMismatch, RPCAError, TooFewSamples
from .types import SubspaceModel, as_matrix


def recon_error(model: SubspaceModel, X, centered: bool = False) -> float:
    """Mean Euclidean reconstruction error ``(1/n) Σ |x_i - P Pᵀ x_i|``.

    With ``centered=True`` the model mean is removed before projecting and
    restored afterwards, i.e. the residual is ``(I - P Pᵀ)(x_i - m)``.
    """
    X = as_matrix(X)
    if X.shape[0] != model.d:
        raise DimensionMismatch(f"model has d={model.d}, data has d={X.shape[0]}")
    if centered:
        X = X - model.mean[:, None]
    P = model.projection
    R = X - P @ (P.T @ X)
    return float(np.linalg.norm(R, axis=0).mean())


def psnr(original, reconstructed, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the images coincide."""
    a = np.asarray(original, dtype=float).ravel()
    b = np.asarray(reconstructed, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    if not peak > 0:
        raise RPCAError(f"peak must be positive, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def stratified_folds(labels, folds: int, seed) -> np.ndarray:
    """Fold index per sample; class members are shuffled then dealt round-robin.

    Concatenating the shuffled classes before dealing keeps fold sizes within
    one of each other, so every fold is nonempty whenever ``n >= folds``.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    order = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        order.append(idx[rng.permutation(idx.size)])
    order = np.concatenate(order)
    assignment = np.empty(labels.size, dtype=np.int64)
    assignment[order] = np.arange(order.size) % folds
    return assignment


def _knn_predict(train, train_labels, test, neighbors):
    # exact differences so duplicated points give distance 0
    d2 = ((test[:, :, None] - train[:, None, :]) ** 2).sum(axis=0)
    if neighbors == 1:
        return train_labels[np.argmin(d2, axis=1)]
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :neighbors]
    preds = []
    for row in nearest:
        votes = train_labels[row]
        values, counts = np.unique(votes, return_counts=True)
        best = values[counts == counts.max()]
        # tied vote: the label appearing first among the nearest wins
        preds.append(next(v for v in votes if v in best))
    return np.array(preds)


def knn_cv_accuracy(features, labels, folds: int = 10, neighbors: int = 1, seed=0):
    """Stratified ``folds``-fold cross-validated k-NN accuracy.

    Parameters
    ----------
    features : array_like, shape (k, n)
        One sample per column.
    labels : array_like, shape (n,)

    Returns
    -------
    mean_accuracy : float
    per_fold : list of float
    """
    F = np.asarray(features, dtype=float)
    if F.ndim == 1:
        F = F[None, :]
    labels = np.asarray(labels)
    n = F.shape[1]
    if labels.shape != (n,):
        raise LengthMismatch(f"{labels.size} labels for {n} samples")
    if folds < 2 or n < folds:
        raise TooFewSamples(f"need folds >= 2 and n >= folds (n={n}, folds={folds})")
    if neighbors < 1:
        raise RPCAError("neighbors must be >= 1")
    assign = stratified_folds(labels, folds, seed)
    per_fold = []
    for f in range(folds):
        test = assign == f
        train_idx = np.flatnonzero(~test)
        pred = _knn_predict(F[:, train_idx], labels[train_idx], F[:, test], neighbors)
        per_fold.append(float(np.mean(pred == labels[test])))
    return float(np.mean(per_fold)), per_fold


def weight_separation(weights, mask) -> dict:
    """Smallest normal weight, largest outlier weight and their ratio."""
    w = np.asarray(weights, dtype=float).ravel()
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != w.shape:
        raise LengthMismatch(f"mask length {mask.size} != {w.size} weights")
    if mask.all() or not mask.any():
        raise DegenerateMask("mask needs at least one outlier and one normal sample")
    min_normal = float(w[~mask].min())
    max_outlier = float(w[mask].max())
    return {"min_normal": min_normal, "max_outlier": max_outlier, "ratio": min_normal / max_outlier}


def _json_number(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class EvalReport:
    """Metrics for one (method, k) cell.

    Aggregates are always recomputed as the mean of their per-fold lists, so
    the two cannot drift apart.
    """

    method: str
    k: int
    seed: int
    centered: bool = False
    per_fold: dict = field(default_factory=dict)
    weight_separation: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    def add_fold(self, metric: str, value):
        self.per_fold.setdefault(metric, []).append(value)

    def aggregate(self, metric: str) -> Optional[float]:
        vals = self.per_fold.get(metric)
        if not vals:
            return None
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_reconstruction_error(self):
        return self.aggregate("recon_error")

    @property
    def psnr_db(self):
        return self.aggregate("psnr")

    @property
    def cv_accuracy(self):
        return self.aggregate("cv_accuracy")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "seed": self.seed,
            "centered": self.centered,
            "mean_reconstruction_error": _json_number(self.mean_reconstruction_error),
            "psnr_db": _json_number(self.psnr_db),
            "cv_accuracy": _json_number(self.cv_accuracy),
            "weight_separation": self.weight_separation,
            "per_fold": {k: [_json_number(v) for v in vals] for k, vals in sorted(self.per_fold.items())},
            **{k: self.extra[k] for k in sorted(self.extra)},
        }

    def long_rows(self):
        """(method, k, metric, fold, value) rows for CSV export."""
        for metric, vals in sorted(self.per_fold.items()):
            for fold, v in enumerate(vals):
                yield self.method, self.k, metric, fold, _json_number(v)
        for metric in sorted(self.extra):
            v = self.extra[metric]
            if isinstance(v, (int, float)):
                yield self.method, self.k, metric, "", _json_number(v)
        if self.weight_separation:
            yield self.method, self.k, "weight_separation_ratio", "", self.weight_separation["ratio"]
