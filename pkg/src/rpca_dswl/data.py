"""
Synthetic data, outlier injection and file ingestion.

Random streams come from ``numpy.random.default_rng(seed)`` (PCG64), so every
generator and contaminator is a pure function of its arguments and seed.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import (
    FractionOutOfRange,
    InconsistentDimensions,
    InvalidConfig,
    InvalidCorrelation,
    ParseError,
    ShapeMismatch,
)
from .types import DataMatrix, validate_matrix

OUTLIER_CATEGORIES = ("none", "pcs", "ocs", "both")

# population eigenbasis of a unit-variance 2-D Gaussian with positive correlation
PRINCIPAL_DIRECTION = np.array([1.0, 1.0]) / math.sqrt(2.0)
ORTHOGONAL_DIRECTION = np.array([1.0, -1.0]) / math.sqrt(2.0)


def rng_for(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    data: DataMatrix
    labels: Optional[np.ndarray] = None
    outlier_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        data = validate_matrix(self.data)
        object.__setattr__(self, "data", data)
        n = data.n
        mask = np.zeros(n, dtype=bool) if self.outlier_mask is None else np.asarray(self.outlier_mask, dtype=bool)
        if mask.shape != (n,):
            raise InconsistentDimensions(f"mask has length {mask.size}, expected {n}")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "outlier_mask", mask)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise InconsistentDimensions(f"labels have length {labels.size}, expected {n}")
            labels = labels.astype(np.int64, copy=True)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def X(self) -> np.ndarray:
        return self.data.values

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def d(self) -> int:
        return self.data.d

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(
            DataMatrix(self.X[:, idx]),
            None if self.labels is None else self.labels[idx],
            self.outlier_mask[idx],
        )


@dataclass(frozen=True)
class ToySpec:
    """Two-dimensional correlated Gaussian with one category of outliers.

    Outliers sit at ``magnitude`` from the origin along the population
    principal direction (``pcs``), the orthogonal direction (``ocs``) or the
    bisector of the two (``both``), with isotropic jitter of std ``spread``.
    """

    n_normal: int = 200
    correlation: float = 0.95
    outlier_category: str = "none"
    n_outliers: int = 0
    magnitude: float = 8.0
    rng_seed: int = 0
    spread: float = 0.5

    def __post_init__(self):
        if not -1.0 < self.correlation < 1.0:
            raise InvalidCorrelation(f"correlation must lie in (-1, 1), got {self.correlation}")
        if self.n_normal < 2:
            raise InvalidConfig("n_normal must be at least 2")
        if self.n_outliers < 0:
            raise InvalidConfig("n_outliers must be nonnegative")
        if self.outlier_category not in OUTLIER_CATEGORIES:
            raise InvalidConfig(f"outlier_category must be one of {OUTLIER_CATEGORIES}")
        if self.n_outliers > 0 and self.outlier_category == "none":
            raise InvalidConfig("outliers requested without a category")
        if not self.magnitude > 0 or self.spread < 0:
            raise InvalidConfig("magnitude must be positive and spread nonnegative")


def outlier_direction(category: str, correlation: float = 0.95) -> np.ndarray:
    pc, oc = PRINCIPAL_DIRECTION, ORTHOGONAL_DIRECTION
    if correlation < 0:
        pc, oc = oc, pc
    if category == "pcs":
        return pc
    if category == "ocs":
        return oc
    if category == "both":
        v = pc + oc
        return v / np.linalg.norm(v)
    raise InvalidConfig(f"no direction for category {category!r}")


def gen_toy(spec: ToySpec) -> LabeledDataset:
    """Normal samples first, then ``spec.n_outliers`` outliers."""
    rng = rng_for(spec.rng_seed)
    rho = spec.correlation
    L = np.array([[1.0, 0.0], [rho, math.sqrt(1.0 - rho * rho)]])
    normal = L @ rng.standard_normal((2, spec.n_normal))
    parts = [normal]
    if spec.n_outliers:
        u = outlier_direction(spec.outlier_category, rho)
        jitter = spec.spread * rng.standard_normal((2, spec.n_outliers))
        parts.append(spec.magnitude * u[:, None] + jitter)
    X = np.hstack(parts)
    mask = np.zeros(X.shape[1], dtype=bool)
    mask[spec.n_normal:] = True
    return LabeledDataset(DataMatrix(X), None, mask)


def contaminate_tabular(ds: LabeledDataset, fraction: float = 0.25, factors=(5.0, 10.0, 20.0),
                        seed=0, per_feature: bool = False) -> LabeledDataset:
    """Amplify half of the features of a random ``fraction`` of the samples.

    By default one factor is drawn per contaminated sample and applied to all
    of its chosen features; ``per_feature=True`` draws a factor per feature.
    """
    if not 0.0 < fraction < 1.0:
        raise FractionOutOfRange(f"fraction must lie in (0, 1), got {fraction}")
    factors = np.asarray(sorted(set(float(f) for f in factors)), dtype=float)
    if factors.size == 0:
        raise InvalidConfig("factors must be nonempty")
    rng = rng_for(seed)
    X = ds.X.copy()
    d, n = X.shape
    chosen = np.sort(rng.choice(n, size=int(math.floor(fraction * n)), replace=False))
    n_feat = d // 2
    for i in chosen:
        feats = np.sort(rng.choice(d, size=n_feat, replace=False))
        if per_feature:
            f = rng.choice(factors, size=n_feat)
        else:
            f = rng.choice(factors)
        X[feats, i] *= f
    mask = ds.outlier_mask.copy()
    mask[chosen] = True
    return LabeledDataset(DataMatrix(X), ds.labels, mask)


def block_side(image_shape, block_area_ratio: float) -> int:
    h, w = image_shape
    side = int(math.floor(math.sqrt(block_area_ratio * h * w)))
    return max(1, min(side, h, w))


def contaminate_images(ds: LabeledDataset, image_shape, fraction: float = 0.2,
                       block_area_ratio: float = 0.25, seed=0) -> LabeledDataset:
    """Overwrite a random square block of a ``fraction`` of the images with
    salt-and-pepper noise at each image's own min/max intensity."""
    h, w = (int(v) for v in image_shape)
    if h * w != ds.d:
        raise ShapeMismatch(f"image shape {h}x{w} does not match d={ds.d}")
    if not 0.0 < fraction < 1.0:
        raise FractionOutOfRange(f"fraction must lie in (0, 1), got {fraction}")
    if not 0.0 < block_area_ratio <= 1.0:
        raise FractionOutOfRange(f"block_area_ratio must lie in (0, 1], got {block_area_ratio}")
    rng = rng_for(seed)
    X = ds.X.copy()
    n = X.shape[1]
    chosen = np.sort(rng.choice(n, size=int(math.floor(fraction * n)), replace=False))
    side = block_side((h, w), block_area_ratio)
    for i in chosen:
        img = X[:, i].reshape(h, w)
        lo, hi = img.min(), img.max()
        r0 = rng.integers(0, h - side + 1)
        c0 = rng.integers(0, w - side + 1)
        noise = rng.integers(0, 2, size=(side, side))
        img[r0:r0 + side, c0:c0 + side] = np.where(noise == 1, hi, lo)
        X[:, i] = img.ravel()
    mask = ds.outlier_mask.copy()
    mask[chosen] = True
    return LabeledDataset(DataMatrix(X), ds.labels, mask)


def gen_lowrank_images(n: int, image_shape=(32, 32), rank: int = 10, noise: float = 0.05,
                       seed=0) -> LabeledDataset:
    """Smooth rank-``rank`` images around a mid-grey template, plus white noise.

    The basis is built from low-frequency 2-D cosines so images look like
    blurry shaded patches; intensities stay roughly within [0, 1].
    """
    rng = rng_for(seed)
    h, w = image_shape
    yy, xx = np.meshgrid(np.arange(h) / h, np.arange(w) / w, indexing="ij")
    template = 0.5 + 0.15 * np.cos(np.pi * (xx - 0.5)) * np.cos(np.pi * (yy - 0.5))
    basis = []
    for _ in range(rank):
        fy, fx = rng.integers(0, 4, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        basis.append(np.cos(2 * np.pi * (fx * xx + fy * yy) + phase).ravel())
    B, _ = np.linalg.qr(np.array(basis).T)
    scales = 2.5 * np.linspace(1.0, 0.4, rank)
    Z = scales[:, None] * rng.standard_normal((rank, n))
    X = template.ravel()[:, None] + B @ Z + noise * rng.standard_normal((h * w, n))
    return LabeledDataset(DataMatrix(X), None, None)


def gen_gaussian_classes(n_per_class: int = 60, d: int = 10, n_classes: int = 3,
                         separation: float = 3.0, offset: float = 5.0, seed=0) -> LabeledDataset:
    """Isotropic unit-variance Gaussian classes centred at ``offset + separation * e_c``.

    A positive ``offset`` mimics tabular measurements that live away from
    zero, where multiplicative corruption moves samples far from the bulk.
    """
    if n_classes > d:
        raise InvalidConfig("need n_classes <= d")
    rng = rng_for(seed)
    parts, labels = [], []
    for c in range(n_classes):
        centre = np.full(d, float(offset))
        centre[c] += separation
        parts.append(centre[:, None] + rng.standard_normal((d, n_per_class)))
        labels.append(np.full(n_per_class, c))
    return LabeledDataset(DataMatrix(np.hstack(parts)), np.concatenate(labels), None)


# ---------------------------------------------------------------- file I/O


def load_csv(path, labels: bool = False, header: bool = False) -> LabeledDataset:
    """Read one sample per row; with ``labels`` the last column is an integer class."""
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(str(exc), file=path) from exc
    rows, labs = [], []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if header and lineno == 1:
            continue
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"expected {width} fields, found {len(fields)}", line=lineno, file=path)
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"not a number: {exc}", line=lineno, file=path) from exc
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite value", line=lineno, file=path)
        if labels:
            if len(vals) < 2:
                raise ParseError("label column leaves no features", line=lineno, file=path)
            lab = vals.pop()
            if lab != int(lab):
                raise ParseError(f"label {fields[-1]!r} is not an integer", line=lineno, file=path)
            labs.append(int(lab))
        rows.append(vals)
    if not rows:
        raise ParseError("no data rows", file=path)
    X = np.array(rows, dtype=float).T
    return LabeledDataset(DataMatrix(X), np.array(labs) if labels else None, None)


def format_float(v: float) -> str:
    return repr(float(v))


def write_csv(path, X, labels=None):
    """Write ``X`` (d x n) as one sample per row with round-trip float precision."""
    X = np.asarray(X, dtype=float)
    lines = []
    for i in range(X.shape[1]):
        fields = [format_float(v) for v in X[:, i]]
        if labels is not None:
            fields.append(str(int(labels[i])))
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def write_mask(path, mask):
    Path(path).write_text("".join(f"{int(bool(b))}\n" for b in mask))


def load_mask(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(str(exc), file=path) from exc
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s not in ("0", "1"):
            raise ParseError(f"mask entries must be 0 or 1, got {s!r}", line=lineno, file=path)
        out.append(s == "1")
    return np.array(out, dtype=bool)


def _pgm_tokens(buf: bytes, count: int, path):
    """Pull ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            raise ParseError("truncated PGM header", file=path)
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        tokens.append(buf[start:pos])
    # a single whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM into a uint8 ``(h, w)`` array."""
    path = Path(path)
    buf = path.read_bytes()
    tokens, offset = _pgm_tokens(buf, 4, path)
    if tokens[0] != b"P5":
        raise ParseError(f"unsupported PGM magic {tokens[0]!r}", file=path)
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ParseError("malformed PGM header", file=path) from exc
    if w <= 0 or h <= 0 or not 0 < maxval <= 255:
        raise ParseError(f"unsupported PGM geometry {w}x{h} maxval {maxval}", file=path)
    raster = buf[offset:offset + w * h]
    if len(raster) != w * h:
        raise ParseError("truncated PGM raster", file=path)
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w)


def write_pgm(path, image):
    img = np.asarray(image, dtype=np.uint8)
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())


def _load_image(path, target_shape) -> np.ndarray:
    img = read_pgm(path)
    th, tw = target_shape
    if img.shape != (th, tw):
        img = np.asarray(Image.fromarray(img, mode="L").resize((tw, th), Image.BILINEAR))
    return img.astype(float).ravel() / 255.0


def load_pgm_dir(path, target_shape=(32, 32)) -> LabeledDataset:
    """Load every ``*.pgm`` under ``path``.

    Images directly inside ``path`` are unlabelled; if ``path`` holds
    subdirectories instead, each subdirectory (sorted by name) is one class.
    """
    root = Path(path)
    if not root.is_dir():
        raise ParseError("not a directory", file=root)
    files = sorted(p for p in root.iterdir() if p.suffix.lower() == ".pgm")
    labels = None
    if not files:
        subdirs = sorted(p for p in root.iterdir() if p.is_dir())
        labels = []
        for c, sub in enumerate(subdirs):
            imgs = sorted(p for p in sub.iterdir() if p.suffix.lower() == ".pgm")
            files.extend(imgs)
            labels.extend([c] * len(imgs))
    if not files:
        raise ParseError("no .pgm files found", file=root)
    cols = [_load_image(f, target_shape) for f in files]
    return LabeledDataset(DataMatrix(np.array(cols).T), None if labels is None else np.array(labels), None)


def load_manifest(path) -> LabeledDataset:
    """Load a JSON manifest ``{"format", "paths", "shape"?, "labels"?, "header"?}``.

    Relative paths resolve against the manifest's directory; datasets from
    several paths are concatenated sample-wise.
    """
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"unreadable manifest: {exc}", file=path) from exc
    fmt = spec.get("format", "csv")
    paths = spec.get("paths")
    if not paths:
        raise ParseError("manifest lists no paths", file=path)
    parts = []
    for p in paths:
        p = Path(p) if os.path.isabs(p) else path.parent / p
        if fmt == "csv":
            parts.append(load_csv(p, labels=spec.get("labels", False), header=spec.get("header", False)))
        elif fmt == "pgm":
            parts.append(load_pgm_dir(p, tuple(spec.get("shape", (32, 32)))))
        else:
            raise ParseError(f"unknown format {fmt!r}", file=path)
    return concat(parts)


def concat(parts) -> LabeledDataset:
    dims = {p.d for p in parts}
    if len(dims) != 1:
        raise InconsistentDimensions(f"datasets have differing dimensions {sorted(dims)}")
    has_labels = [p.labels is not None for p in parts]
    if any(has_labels) and not all(has_labels):
        raise InconsistentDimensions("some datasets carry labels and others do not")
    X = np.hstack([p.X for p in parts])
    labels = np.concatenate([p.labels for p in parts]) if all(has_labels) else None
    mask = np.concatenate([p.outlier_mask for p in parts])
    return LabeledDataset(DataMatrix(X), labels, mask)


def with_mask(ds: LabeledDataset, mask) -> LabeledDataset:
    return replace(ds, outlier_mask=np.asarray(mask, dtype=bool))
