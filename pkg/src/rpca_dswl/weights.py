"""
Discriminant sample weights.

Three outlier scores are computed per sample with respect to a fitted
subspace: energy inside the principal subspace, energy in its orthogonal
complement, and squared distance to the centre. Each score family is turned
into a distribution on the simplex by an entropy-regularised maximisation
whose optimum is a softmax with temperature ``n * tau``; the three
distributions are then merged by normalised inverse product so that a sample
large under any score ends up with a small weight.

Everything past the scores runs in the log domain.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonPositiveTau, RPCAError
from .types import LOG_WEIGHT_FLOOR, SubspaceModel, WeightVector, as_matrix, as_weights


# nonnegative finite per-sample scores, squared data units
ScoreVector = np.ndarray


def _scores(values) -> ScoreVector:
    s = np.array(values, dtype=float).ravel()
    if s.size == 0 or not np.isfinite(s).all():
        raise RPCAError("scores must be finite and nonempty")
    if (s < 0).any():
        raise RPCAError("scores must be nonnegative")
    s.setflags(write=False)
    return s


def _centred(X, model: SubspaceModel) -> np.ndarray:
    X = as_matrix(X)
    if X.shape[0] != model.d:
        raise DimensionMismatch(f"model has d={model.d}, data has d={X.shape[0]}")
    return X - model.mean[:, None]


def score_pcs(X, model: SubspaceModel) -> ScoreVector:
    """``|Pᵀ (x_i - m)|²`` for every sample."""
    Y = model.projection.T @ _centred(X, model)
    return _scores(np.einsum("ij,ij->j", Y, Y))


def score_ocs(X, model: SubspaceModel) -> ScoreVector:
    """``|(I - P Pᵀ)(x_i - m)|²`` for every sample."""
    Xc = _centred(X, model)
    P = model.projection
    R = Xc - P @ (P.T @ Xc)
    return _scores(np.einsum("ij,ij->j", R, R))


def score_dist(X, m) -> ScoreVector:
    """``|x_i - m|²`` for every sample."""
    X = as_matrix(X)
    m = np.asarray(m, dtype=float).ravel()
    if m.size != X.shape[0]:
        raise DimensionMismatch(f"mean has length {m.size}, data has d={X.shape[0]}")
    Xc = X - m[:, None]
    return _scores(np.einsum("ij,ij->j", Xc, Xc))


def entropy_softmax(s, tau: float) -> WeightVector:
    """Maximiser of ``(1/n) Σ a_i s_i - tau Σ a_i ln a_i`` over the simplex.

    The closed form is ``a_i ∝ exp(s_i / (n tau))``; it is evaluated with a
    max-shift and renormalised, so the result is exact on the simplex.
    """
    s = np.asarray(s, dtype=float).ravel()
    if not (np.isfinite(tau) and tau > 0):
        raise NonPositiveTau(f"tau must be strictly positive, got {tau!r}")
    n = s.size
    if n == 0:
        raise RPCAError("score vector must be nonempty")
    return WeightVector.from_log(s / (n * tau))


def merge_weights(a, b, c) -> WeightVector:
    """Combine three weight families as ``w_i ∝ 1 / (a_i b_i c_i)``."""
    a, b, c = as_weights(a), as_weights(b), as_weights(c)
    if not len(a) == len(b) == len(c):
        raise DimensionMismatch(f"weight lengths differ: {len(a)}, {len(b)}, {len(c)}")
    log_prod = sum(np.maximum(v.log_entries, LOG_WEIGHT_FLOOR) for v in (a, b, c))
    return WeightVector.from_log(-log_prod)


def auto_tau(s) -> float:
    """Temperature that makes the softmax exponent ``s_i / mean(s)``.

    Returns ``mean(s) / n``; all-zero scores give ``1.0`` (weights are then
    uniform whatever the temperature).
    """
    s = np.asarray(s, dtype=float).ravel()
    n = s.size
    mean = float(s.mean())
    if not mean > 0:
        return 1.0
    tau = mean / n
    # denormal means can underflow to zero here
    return tau if tau > 0 else 1.0


def resolve_tau(tau, s) -> float:
    return auto_tau(s) if tau == "auto" else float(tau)


def learn_weights(X, model: SubspaceModel, taus=("auto", "auto", "auto")):
    """Run one full weight-learning step.

    Returns
    -------
    w : WeightVector
        Merged weights.
    parts : dict
        The three families ``a``, ``b``, ``c`` and the temperatures used.
    """
    s_a = score_pcs(X, model)
    s_b = score_ocs(X, model)
    s_c = score_dist(X, model.mean)
    t_a, t_b, t_c = (resolve_tau(t, s) for t, s in zip(taus, (s_a, s_b, s_c)))
    a = entropy_softmax(s_a, t_a)
    b = entropy_softmax(s_b, t_b)
    c = entropy_softmax(s_c, t_c)
    return merge_weights(a, b, c), {"a": a, "b": b, "c": c, "tau": (t_a, t_b, t_c)}
