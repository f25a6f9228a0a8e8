"""Synthetic dataset generators and file loaders.

The generators are pure functions of (config, seed); each one isolates a
property the quadratic layer is supposed to buy: XOR needs a feature
interaction, concentric circles defeat any linear separator, and the
quadratic-target regression task is exactly realizable by an enhanced
layer of matching shape (the generating layer is kept on the dataset for
oracle use).

File ingestion covers numeric CSV and the big-endian IDX image/label
format (magic 0x00000803 / 0x00000801).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .enhancer import BandLambda, QELayer, qe_forward
from .errors import ConfigError, DataError
from .rng import Rng

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    features: np.ndarray                 # [N, n]
    labels: np.ndarray                   # [N] int for classification, [N, d] float for regression
    train_idx: np.ndarray
    valid_idx: np.ndarray
    provenance: str
    n_classes: int | None = None         # None for regression
    generator: QELayer | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.features.shape[0]
        if n < 1:
            raise DataError("dataset must contain at least one row")
        if self.labels.shape[0] != n:
            raise DataError(f"labels length {self.labels.shape[0]} != feature rows {n}")
        if self.n_classes is not None and self.labels.size:
            if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
                raise DataError(f"class index outside [0, {self.n_classes})")
        combined = np.concatenate([self.train_idx, self.valid_idx])
        if len(np.unique(combined)) != len(combined) or sorted(combined) != list(range(n)):
            raise DataError("train/valid indices must be disjoint and cover the dataset")

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def is_classification(self) -> bool:
        return self.n_classes is not None


def _split(n: int, valid_fraction: float) -> tuple[np.ndarray, np.ndarray]:
    n_valid = int(round(n * valid_fraction))
    return np.arange(0, n - n_valid), np.arange(n - n_valid, n)


def gen_xor(encoding: int = 1) -> Dataset:
    """The four +/-1 corner points; class 1 iff the coordinates agree in sign."""
    if encoding not in (1, -1):
        raise ConfigError("encoding must be +1 or -1")
    pts = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]) * encoding
    labels = (pts[:, 0] * pts[:, 1] > 0).astype(np.int64)
    return Dataset(features=pts, labels=labels,
                   train_idx=np.arange(4), valid_idx=np.arange(4, 4),
                   provenance="xor", n_classes=2)


def gen_quadratic_target(n: int, d: int, shifts=(1,), seed: int = 0, size: int = 256,
                         valid_fraction: float = 0.0) -> Dataset:
    """Regression targets produced by a hidden enhanced layer.

    The hidden layer has Gaussian weights (scaled 1/sqrt(n)), zero bias,
    and coupling coefficients uniform in [-0.5, 0.5]; inputs are standard
    normal.  A model of the same (n, d, shifts) can fit this exactly.
    """
    if n < 2 or d < 2:
        raise ConfigError(f"need n, d >= 2, got n={n}, d={d}")
    if size < 1:
        raise ConfigError("size must be >= 1")
    rng = Rng(seed)
    w = (rng.split(0).normal(d * n) / np.sqrt(n)).reshape(d, n)
    lam = BandLambda(d=d, shifts=tuple(shifts),
                     values={r: rng.split(10 + i).uniform(d, -0.5, 0.5)
                             for i, r in enumerate(shifts)})
    hidden = QELayer(W=w, b=np.zeros(d), lam=lam, name="hidden-target")
    x = rng.split(1).normal(size * n).reshape(size, n)
    y = qe_forward(hidden, x)
    train_idx, valid_idx = _split(size, valid_fraction)
    return Dataset(features=x, labels=y, train_idx=train_idx, valid_idx=valid_idx,
                   provenance=f"quadratic_target(n={n},d={d},shifts={tuple(shifts)},seed={seed})",
                   generator=hidden)


def gen_blobs(classes: int = 3, size: int = 300, noise: float = 0.5, seed: int = 0,
              valid_fraction: float = 0.2) -> Dataset:
    """Gaussian blobs on a circle of radius 5, one center per class."""
    if noise < 0:
        raise ConfigError("noise must be >= 0")
    if size < classes:
        raise ConfigError("need at least one sample per class")
    rng = Rng(seed)
    angles = 2.0 * np.pi * np.arange(classes) / classes
    centers = 5.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    labels = (np.arange(size) % classes).astype(np.int64)
    pts = centers[labels] + noise * rng.normal(2 * size).reshape(size, 2)
    perm = rng.split(99).permutation(size)
    train_idx, valid_idx = _split(size, valid_fraction)
    return Dataset(features=pts[perm], labels=labels[perm],
                   train_idx=train_idx, valid_idx=valid_idx,
                   provenance=f"blobs(classes={classes},size={size},noise={noise},seed={seed})",
                   n_classes=classes)


def gen_circles(classes: int = 2, size: int = 200, noise: float = 0.1, seed: int = 0,
                valid_fraction: float = 0.2) -> Dataset:
    """Concentric rings, radius c+1 for class c; not linearly separable."""
    if noise < 0:
        raise ConfigError("noise must be >= 0")
    if size < classes:
        raise ConfigError("need at least one sample per class")
    rng = Rng(seed)
    labels = (np.arange(size) % classes).astype(np.int64)
    theta = rng.uniform(size, 0.0, 2.0 * np.pi)
    radii = (labels + 1).astype(np.float64)
    pts = np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=1)
    pts += noise * rng.split(1).normal(2 * size).reshape(size, 2)
    perm = rng.split(99).permutation(size)
    train_idx, valid_idx = _split(size, valid_fraction)
    return Dataset(features=pts[perm], labels=labels[perm],
                   train_idx=train_idx, valid_idx=valid_idx,
                   provenance=f"circles(classes={classes},size={size},noise={noise},seed={seed})",
                   n_classes=classes)


# ---------------------------------------------------------------------------
# file ingestion
# ---------------------------------------------------------------------------

def load_csv(path, label_column, has_header: bool = True, classification: bool = True,
             valid_fraction: float = 0.2) -> Dataset:
    """Numeric CSV with one label column (by index, or by name with a header)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty file")
    start = 0
    header = None
    if has_header:
        header = [c.strip() for c in lines[0].split(",")]
        start = 1
    if isinstance(label_column, str):
        if header is None:
            raise ConfigError("label column given by name but the file has no header")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DataError(f"{path}: no column named {label_column!r}") from None
    else:
        label_idx = int(label_column)
    rows, labels = [], []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        cells = line.split(",")
        if label_idx >= len(cells):
            raise DataError(f"{path}:{lineno}: only {len(cells)} columns, label column is {label_idx}")
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
        labels.append(vals.pop(label_idx))
        rows.append(vals)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: inconsistent column counts {sorted(widths)}")
    feats = np.array(rows, dtype=np.float64)
    if classification:
        lab = np.array(labels)
        lab_int = lab.astype(np.int64)
        if not np.all(lab == lab_int):
            raise DataError(f"{path}: non-integer class labels")
        labels_arr = lab_int
        n_classes = int(labels_arr.max()) + 1 if labels_arr.size else 0
    else:
        labels_arr = np.array(labels, dtype=np.float64).reshape(-1, 1)
        n_classes = None
    train_idx, valid_idx = _split(len(rows), valid_fraction)
    return Dataset(features=feats, labels=labels_arr, train_idx=train_idx,
                   valid_idx=valid_idx, provenance=str(path), n_classes=n_classes)


def save_csv(ds: Dataset, path, header: bool = True) -> None:
    """Write features plus a final label column; floats keep full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            cols = [f"x{i}" for i in range(ds.n)] + ["y"]
            fh.write(",".join(cols) + "\n")
        labels = ds.labels if ds.labels.ndim == 1 else ds.labels[:, 0]
        for row, lab in zip(ds.features, labels):
            cells = [f"{v:.17g}" for v in row]
            cells.append(str(int(lab)) if ds.is_classification else f"{lab:.17g}")
            fh.write(",".join(cells) + "\n")


def _read_exact(fh, count: int, path, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise DataError(f"{path}: truncated {what}: expected {count} bytes, got {len(data)}")
    return data


def load_idx(images_path, labels_path, valid_fraction: float = 0.0) -> Dataset:
    """Big-endian IDX image/label pair; pixel bytes are scaled to [0, 1]."""
    with open(images_path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">iiii", _read_exact(fh, 16, images_path, "header"))
        if magic != IDX_IMAGE_MAGIC:
            raise DataError(f"{images_path}: bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
        raw = _read_exact(fh, count * rows * cols, images_path, "pixel data")
        feats = np.frombuffer(raw, dtype=np.uint8).astype(np.float64).reshape(count, rows * cols) / 255.0
    with open(labels_path, "rb") as fh:
        magic, lcount = struct.unpack(">ii", _read_exact(fh, 8, labels_path, "header"))
        if magic != IDX_LABEL_MAGIC:
            raise DataError(f"{labels_path}: bad label magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}")
        if lcount != count:
            raise DataError(f"label count {lcount} != image count {count}")
        labels = np.frombuffer(_read_exact(fh, lcount, labels_path, "label data"), dtype=np.uint8).astype(np.int64)
    train_idx, valid_idx = _split(count, valid_fraction)
    n_classes = int(labels.max()) + 1 if labels.size else 0
    return Dataset(features=feats, labels=labels, train_idx=train_idx, valid_idx=valid_idx,
                   provenance=f"idx({images_path})", n_classes=n_classes)


def batch_iter(ds: Dataset, batch_size: int, shuffle_seed: int, indices: np.ndarray | None = None):
    """Deterministic shuffled batches over the train split (or given indices).

    The final partial batch is included.
    """
    if batch_size < 1:
        raise ConfigError("batch size must be >= 1")
    idx = ds.train_idx if indices is None else indices
    order = idx[Rng(shuffle_seed).permutation(len(idx))]
    for start in range(0, len(order), batch_size):
        sel = order[start:start + batch_size]
        yield ds.features[sel], ds.labels[sel]
