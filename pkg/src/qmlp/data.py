"""Synthetic 2-feature datasets, the bundled Iris table, angle scaling and splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

FAMILIES = {"R1_sq": 2, "P1_sq": 2, "R2_sq": 3, "P2_sq": 3}
DEFAULT_SAMPLES_PER_CLASS = {"R1_sq": 90, "P1_sq": 90, "R2_sq": 60, "P2_sq": 60}

TWO_PI = (0.0, 2.0 * math.pi)
SYMMETRIC_PI = (-math.pi, math.pi)


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Scaling:
    """Per-feature affine map from ``[src_min, src_max]`` onto ``[tgt_min, tgt_max]``."""

    src_min: tuple[float, ...]
    src_max: tuple[float, ...]
    target: tuple[float, float]

    def apply(self, x: np.ndarray) -> np.ndarray:
        lo, hi = np.array(self.src_min), np.array(self.src_max)
        t0, t1 = self.target
        return t0 + (np.asarray(x, dtype=float) - lo) * ((t1 - t0) / (hi - lo))

    def invert(self, y: np.ndarray) -> np.ndarray:
        lo, hi = np.array(self.src_min), np.array(self.src_max)
        t0, t1 = self.target
        return lo + (np.asarray(y, dtype=float) - t0) * ((hi - lo) / (t1 - t0))

    def to_dict(self) -> dict:
        return {"src_min": list(self.src_min), "src_max": list(self.src_max), "target": list(self.target)}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaling":
        return cls(tuple(d["src_min"]), tuple(d["src_max"]), tuple(d["target"]))


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    scaling: Optional[Scaling] = None
    name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise DataError("features must be (samples, n_features) matching labels")
        if len(self.labels) == 0:
            raise DataError("dataset is empty")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise DataError(f"labels outside 0..{self.n_classes - 1}")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.n_classes).tolist()


@dataclass(frozen=True)
class SyntheticSpec:
    family: str
    samples_per_class: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown dataset family {self.family!r}; expected one of {sorted(FAMILIES)}")
        if self.samples_per_class == 0:
            object.__setattr__(self, "samples_per_class", DEFAULT_SAMPLES_PER_CLASS[self.family])
        if self.samples_per_class < 1:
            raise DataError("samples_per_class must be positive")

    @property
    def n_classes(self) -> int:
        return FAMILIES[self.family]


def region_label(family: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Class of each point in [-1, 1]^2 for a synthetic family."""
    r = np.hypot(x, y)
    if family == "R1_sq":
        return np.where(r < 0.6, 0, 1)
    if family == "R2_sq":
        return np.where(r < 0.45, 0, np.where(r < 0.8, 1, 2))
    if family == "P1_sq":
        # checkerboard by quadrant: I/III -> 0, II/IV -> 1
        return np.where(x * y >= 0, 0, 1)
    if family == "P2_sq":
        phi = np.arctan2(y, x)
        return np.minimum((3 * (phi + np.pi) / (2 * np.pi)).astype(int), 2)
    raise DataError(f"unknown dataset family {family!r}")


def _rejection_sample(family, per_class, rng, exclude=frozenset()) -> tuple[np.ndarray, np.ndarray]:
    k = FAMILIES[family]
    picked: list[list[tuple[float, float]]] = [[] for _ in range(k)]
    while min(len(p) for p in picked) < per_class:
        pts = rng.uniform(-1.0, 1.0, size=(256, 2))
        labels = region_label(family, pts[:, 0], pts[:, 1])
        for (px, py), lab in zip(pts, labels):
            bucket = picked[lab]
            if len(bucket) < per_class and (px, py) not in exclude:
                bucket.append((float(px), float(py)))
    feats = np.array([pt for bucket in picked for pt in bucket])
    labels = np.repeat(np.arange(k), per_class)
    return feats, labels


def generate_synthetic(spec: SyntheticSpec, _stream: int = 0, _exclude=frozenset()) -> Dataset:
    """Balanced rejection sample, uniform on [-1, 1]^2 within each class region.

    Raw coordinates are kept; use ``scale_features`` to map them to angles.
    """
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, _stream]))
    feats, labels = _rejection_sample(spec.family, spec.samples_per_class, rng, _exclude)
    return Dataset(feats, labels, spec.n_classes, name=spec.family)


def train_test_split(spec: SyntheticSpec, seed: Optional[int] = None) -> tuple[Dataset, Dataset]:
    """Disjoint balanced train/test sets from two independent seeded streams.

    Both sets are scaled to [-pi, pi]; the test set reuses the training scaling.
    """
    if seed is not None:
        spec = replace(spec, seed=seed)
    train = generate_synthetic(spec, _stream=0)
    seen = frozenset(map(tuple, train.features.tolist()))
    test = generate_synthetic(spec, _stream=1, _exclude=seen)
    train = scale_features(train, SYMMETRIC_PI)
    test = scale_features(test, SYMMETRIC_PI, scaling=train.scaling)
    return train, test


def load_iris(path: Optional[str | Path] = None) -> Dataset:
    """Read a 4-feature + label CSV (header optional). Labels are numbered by first appearance."""
    if path is None:
        text = resources.files("qmlp").joinpath("data/iris.csv").read_text()
        source = "bundled iris.csv"
    else:
        path = Path(path)
        if not path.is_file():
            raise DataError(f"dataset file not found: {path}")
        text = path.read_text()
        source = str(path)
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{source}: no rows")
    try:
        [float(c) for c in rows[0][:4]]
    except ValueError:
        rows = rows[1:]  # header
    if not rows:
        raise DataError(f"{source}: no data rows")

    feats, labels, names = [], [], {}
    for lineno, row in enumerate(rows, 1):
        if len(row) != 5:
            raise DataError(f"{source}: row {lineno} has {len(row)} columns, expected 5")
        try:
            feats.append([float(c) for c in row[:4]])
        except ValueError as exc:
            raise DataError(f"{source}: row {lineno}: {exc}") from None
        name = row[4].strip()
        if name not in names:
            if len(names) == 3:
                raise DataError(f"{source}: row {lineno}: unknown label {name!r} (already have {list(names)})")
            names[name] = len(names)
        labels.append(names[name])
    return Dataset(np.array(feats), np.array(labels), 3, name="iris")


def scale_features(dataset: Dataset, target=TWO_PI, scaling: Optional[Scaling] = None) -> Dataset:
    """Map raw features onto rotation angles.

    Synthetic data lives in [-1, 1] and is mapped with that fixed source range
    (i.e. multiplied by pi for the [-pi, pi] target); other data is min-max
    scaled with its own per-feature range. Pass ``scaling`` to reuse the
    statistics of a training set.
    """
    target = tuple(float(t) for t in target)
    if scaling is None:
        if not (np.allclose(target, TWO_PI) or np.allclose(target, SYMMETRIC_PI)):
            raise DataError(f"target range must be [0, 2pi] or [-pi, pi], got {target}")
        if dataset.name in FAMILIES:
            lo = (-1.0,) * dataset.n_features
            hi = (1.0,) * dataset.n_features
        else:
            lo = tuple(dataset.features.min(axis=0).tolist())
            hi = tuple(dataset.features.max(axis=0).tolist())
        for j, (a, b) in enumerate(zip(lo, hi)):
            if not b > a:
                raise DataError(f"feature {j} is constant; cannot scale")
        scaling = Scaling(lo, hi, target)
    return Dataset(scaling.apply(dataset.features), dataset.labels, dataset.n_classes, scaling, dataset.name)


def unscale_features(dataset: Dataset) -> np.ndarray:
    if dataset.scaling is None:
        return dataset.features.copy()
    return dataset.scaling.invert(dataset.features)


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Header ``f1,...,fn,label``; floats at full precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{j + 1}" for j in range(dataset.n_features)] + ["label"])
        for row, lab in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


def read_csv(path: str | Path, n_classes: Optional[int] = None) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataError(f"{path}: no data rows")
    header = rows[0]
    if header[-1] != "label":
        raise DataError(f"{path}: last column must be 'label'")
    for lineno, r in enumerate(rows[1:], 2):
        if len(r) != len(header):
            raise DataError(f"{path}: line {lineno} has {len(r)} columns, expected {len(header)}")
    try:
        feats = np.array([[float(c) for c in r[:-1]] for r in rows[1:]])
        labels = np.array([int(r[-1]) for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed row ({exc})") from None
    k = n_classes if n_classes is not None else int(labels.max()) + 1
    return Dataset(feats, labels, k, name=path.stem)
