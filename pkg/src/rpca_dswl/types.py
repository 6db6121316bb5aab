"""
Domain types shared by every module.

Samples are stored as columns: a data matrix has shape ``(d, n)`` with ``d``
features and ``n`` samples. All types are immutable after construction; the
arrays they hold are private copies flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Union

import numpy as np

from .errors import (
    EmptyMatrix,
    InvalidConfig,
    InvalidModel,
    InvalidWeights,
    NonFiniteEntry,
)

# floor used when representing vanishing weights; keeps entries strictly positive
WEIGHT_FLOOR = 1e-300
LOG_WEIGHT_FLOOR = float(np.log(WEIGHT_FLOOR))
SIMPLEX_ATOL = 1e-12
_BELOW_ONE = float(np.nextafter(1.0, 0.0))
ORTHO_ATOL = 1e-8


def _frozen(a, dtype=float):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def validate_matrix(raw) -> "DataMatrix":
    """Check ``raw`` (d x n, samples as columns) and wrap it as a DataMatrix."""
    if isinstance(raw, DataMatrix):
        return raw
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise EmptyMatrix(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteEntry(row, col)
    return DataMatrix(arr)


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Real ``d x n`` matrix, one sample per column."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise EmptyMatrix(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            row, col = (int(i) for i in np.argwhere(~np.isfinite(arr))[0])
            raise NonFiniteEntry(row, col)
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape


def as_matrix(X) -> np.ndarray:
    """Return the raw ``(d, n)`` array behind ``X`` after validation."""
    return validate_matrix(X).values


class WeightVector:
    """Point in the interior of the probability simplex.

    Entries are stored in the linear domain; ``log_entries`` keeps the
    log-domain values the vector was built from so that products of tiny
    weights can be formed without underflow.
    """

    __slots__ = ("_entries", "_log")

    def __init__(self, entries, log_entries=None):
        w = np.asarray(entries, dtype=float).ravel()
        if w.size == 0:
            raise InvalidWeights("weight vector must be nonempty")
        if not np.isfinite(w).all():
            raise InvalidWeights("weights must be finite")
        if w.size == 1:
            if w[0] != 1.0:
                raise InvalidWeights("a single weight must equal 1")
        elif (w <= 0).any() or (w >= 1).any():
            raise InvalidWeights("weights must lie strictly inside (0, 1)")
        if abs(w.sum() - 1.0) > SIMPLEX_ATOL:
            raise InvalidWeights(f"weights sum to {w.sum()!r}, not 1")
        if log_entries is None:
            lw = np.log(w)
        else:
            lw = np.asarray(log_entries, dtype=float).ravel()
            if lw.shape != w.shape:
                raise InvalidWeights("log entries do not match entries")
        self._entries = _frozen(w)
        self._log = _frozen(lw)

    @classmethod
    def from_log(cls, log_w) -> "WeightVector":
        """Normalise unnormalised log-weights onto the simplex."""
        lw = np.asarray(log_w, dtype=float).ravel()
        if lw.size == 0 or not np.isfinite(lw).all():
            raise InvalidWeights("log-weights must be finite and nonempty")
        lw = lw - lw.max()
        lw = lw - np.log(np.exp(lw).sum())
        lw = np.maximum(lw, LOG_WEIGHT_FLOOR)
        w = np.exp(lw)
        if w.size == 1:
            return cls(np.ones(1), np.zeros(1))
        w = np.clip(w / w.sum(), WEIGHT_FLOOR, _BELOW_ONE)
        return cls(w, lw)

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.full(n, 1.0 / n), np.full(n, -np.log(n)))

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def log_entries(self) -> np.ndarray:
        return self._log

    def __len__(self):
        return self._entries.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._entries, dtype=dtype)

    def __repr__(self):
        return f"WeightVector(n={len(self)})"


def as_weights(w) -> WeightVector:
    if isinstance(w, WeightVector):
        return w
    return WeightVector(w)


@dataclass(frozen=True, eq=False)
class SubspaceModel:
    """Semi-orthogonal projection ``projection`` (d x k) and centre ``mean`` (d)."""

    projection: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.projection, dtype=float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        m = np.asarray(self.mean, dtype=float).ravel()
        if P.ndim != 2 or P.size == 0:
            raise InvalidModel("projection must be a nonempty d x k matrix")
        d, k = P.shape
        if not 1 <= k <= d:
            raise InvalidModel(f"need 1 <= k <= d, got k={k}, d={d}")
        if m.shape != (d,):
            raise InvalidModel(f"mean has length {m.size}, expected {d}")
        if not (np.isfinite(P).all() and np.isfinite(m).all()):
            raise InvalidModel("model entries must be finite")
        err = np.linalg.norm(P.T @ P - np.eye(k))
        if err > ORTHO_ATOL:
            raise InvalidModel(f"projection is not semi-orthogonal (|PᵀP - I|_F = {err:.3g})")
        object.__setattr__(self, "projection", _frozen(P))
        object.__setattr__(self, "mean", _frozen(m))

    @property
    def d(self) -> int:
        return self.projection.shape[0]

    @property
    def k(self) -> int:
        return self.projection.shape[1]

    def projector(self) -> np.ndarray:
        return self.projection @ self.projection.T

    def to_dict(self) -> dict:
        return {
            "projection": self.projection.tolist(),
            "mean": self.mean.tolist(),
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SubspaceModel":
        try:
            model = cls(np.array(data["projection"], dtype=float), np.array(data["mean"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidModel):
                raise
            raise InvalidModel(f"malformed model description: {exc}") from exc
        if "k" in data and int(data["k"]) != model.k:
            raise InvalidModel(f"k={data['k']} disagrees with projection width {model.k}")
        return model


Tau = Union[float, str]


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the weight-learning solver.

    ``tau_*`` accept a positive float or ``"auto"``, in which case the
    temperature is derived from the score scale at every iteration (or once,
    at the first iteration, when ``freeze_tau`` is set).
    """

    k: int = 1
    tau_a: Tau = "auto"
    tau_b: Tau = "auto"
    tau_c: Tau = "auto"
    max_iterations: int = 100
    subspace_tolerance: float = 1e-6
    weight_tolerance: float = 1e-8
    rng_seed: int = 0
    freeze_tau: bool = False
    freeze_weights: bool = False

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise InvalidConfig(f"k must be a positive integer, got {self.k!r}")
        for name in ("tau_a", "tau_b", "tau_c"):
            tau = getattr(self, name)
            if isinstance(tau, str):
                if tau != "auto":
                    raise InvalidConfig(f"{name} must be a positive number or 'auto', got {tau!r}")
            elif not (np.isfinite(tau) and tau > 0):
                raise InvalidConfig(f"{name} must be strictly positive, got {tau!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise InvalidConfig("max_iterations must be >= 1")
        if not self.subspace_tolerance > 0 or not self.weight_tolerance > 0:
            raise InvalidConfig("tolerances must be strictly positive")
        if not -(2**63) <= int(self.rng_seed) < 2**64:
            raise InvalidConfig("rng_seed must fit in 64 bits")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown solver options: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    mean: tuple
    eigenvalues: tuple
    subspace_change: float
    weight_change: float
    objective: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "mean": list(self.mean),
            "eigenvalues": list(self.eigenvalues),
            "subspace_change": _json_float(self.subspace_change),
            "weight_change": _json_float(self.weight_change),
            "objective": self.objective,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IterationRecord":
        return cls(
            iteration=int(data["iteration"]),
            mean=tuple(float(v) for v in data["mean"]),
            eigenvalues=tuple(float(v) for v in data["eigenvalues"]),
            subspace_change=_from_json_float(data["subspace_change"]),
            weight_change=_from_json_float(data["weight_change"]),
            objective=None if data.get("objective") is None else float(data["objective"]),
        )


def _json_float(x):
    return None if not np.isfinite(x) else float(x)


def _from_json_float(x):
    return float("inf") if x is None else float(x)


@dataclass(frozen=True)
class SolverTrace:
    records: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for i, rec in enumerate(self.records, start=1):
            if rec.iteration != i:
                raise InvalidConfig("trace iterations must count up from 1")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def objectives(self) -> list:
        return [r.objective for r in self.records]

    def to_dict(self) -> dict:
        return {"iterations": [r.to_dict() for r in self.records]}

    @classmethod
    def from_dict(cls, data: dict) -> "SolverTrace":
        return cls(tuple(IterationRecord.from_dict(r) for r in data["iterations"]))


@dataclass(frozen=True, eq=False)
class FitResult:
    model: SubspaceModel
    weights: Optional[WeightVector]
    trace: SolverTrace
    converged: bool
    iterations: int
