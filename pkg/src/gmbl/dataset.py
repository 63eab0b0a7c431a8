"""Multi-view data model, on-disk formats, normalization and anchor sampling.

Every view is stored feature-major: a ``d_v x N`` matrix whose columns are
samples. Two directory layouts are understood:

``csv``
    ``view<i>.csv`` (rows = feature dims, comma-separated) plus an optional
    ``labels.csv`` with one integer per line.
``binary``
    ``view<i>.f64`` (raw little-endian float64, row-major ``d_v x N``) plus
    ``shape.json`` mapping each view stem to ``[d_v, N]``; labels as above.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AnchorCountExceedsSamples,
    GmblError,
    MismatchedSampleCount,
    MissingView,
    NonFiniteEntry,
)

LABELS_FILE = "labels.csv"
SHAPE_FILE = "shape.json"


def _frozen(a: np.ndarray, dtype=np.float64) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ViewMatrix:
    data: np.ndarray
    view_id: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2 or data.shape[0] < 1:
            raise GmblError(f"view {self.view_id}: expected a 2-D matrix with >= 1 row, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteEntry(f"view {self.view_id} contains NaN or Inf")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MultiViewDataset:
    views: tuple
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        views = tuple(
            v if isinstance(v, ViewMatrix) else ViewMatrix(v, i) for i, v in enumerate(self.views)
        )
        if not views:
            raise MissingView("a dataset needs at least one view")
        counts = {v.n_samples for v in views}
        if len(counts) != 1:
            raise MismatchedSampleCount(
                "views disagree on sample count: " + ", ".join(f"view{v.view_id}={v.n_samples}" for v in views)
            )
        object.__setattr__(self, "views", views)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != views[0].n_samples:
                raise MismatchedSampleCount(
                    f"labels have length {labels.size}, expected {views[0].n_samples}"
                )
            if labels.size and (not np.all(np.equal(np.mod(labels, 1), 0)) or labels.min() < 0):
                raise GmblError("labels must be nonnegative integers")
            object.__setattr__(self, "labels", _frozen(labels, np.int64))

    @property
    def n_samples(self) -> int:
        return self.views[0].n_samples

    @property
    def n_views(self) -> int:
        return len(self.views)

    def subset_views(self, view_ids: Sequence[int]) -> "MultiViewDataset":
        return MultiViewDataset(
            tuple(ViewMatrix(self.views[v].data, i) for i, v in enumerate(view_ids)), self.labels
        )


@dataclass(frozen=True)
class AnchorSet:
    """Anchor columns ``d_v x s`` plus the sample indices they were drawn from."""

    anchors: np.ndarray
    indices: np.ndarray
    seed: Optional[int] = None

    @property
    def s(self) -> int:
        return self.anchors.shape[1]


# ---------------------------------------------------------------------------
# I/O


def _view_stems(k: int) -> list[str]:
    # zero-padded so that lexicographic order equals view order on reload
    width = len(str(max(k - 1, 0)))
    return [f"view{i:0{width}d}" for i in range(k)]


def _read_labels(path: Path, n: int) -> Optional[np.ndarray]:
    f = path / LABELS_FILE
    if not f.exists():
        return None
    labels = np.loadtxt(f, dtype=np.float64, ndmin=1, delimiter=",")
    if labels.shape[0] != n:
        raise MismatchedSampleCount(f"{LABELS_FILE} has {labels.shape[0]} rows, views have N={n}")
    return labels.astype(np.int64)


def _detect_format(path: Path) -> str:
    if any(path.glob("view*.csv")):
        return "csv"
    if any(path.glob("view*.f64")):
        return "binary"
    raise MissingView(f"no view files found in {path}")


def load_dataset(path, format: Optional[str] = None) -> MultiViewDataset:
    """Load a dataset directory; views are ordered by sorted file name."""
    path = Path(path)
    if not path.is_dir():
        raise GmblError(f"dataset directory {path} does not exist")
    format = format or _detect_format(path)
    if format in ("csv", "csv-dir"):
        files = sorted(path.glob("view*.csv"))
        if not files:
            raise MissingView(f"no view*.csv files in {path}")
        mats = [np.loadtxt(f, dtype=np.float64, delimiter=",", ndmin=2) for f in files]
    elif format in ("binary", "binary-dir"):
        files = sorted(path.glob("view*.f64"))
        if not files:
            raise MissingView(f"no view*.f64 files in {path}")
        shapes = json.loads((path / SHAPE_FILE).read_text())
        mats = []
        for f in files:
            d, n = shapes[f.stem]
            raw = np.fromfile(f, dtype="<f8")
            if raw.size != d * n:
                raise GmblError(f"{f.name}: {raw.size} values, shape.json says {d}x{n}")
            mats.append(raw.reshape(d, n))
    else:
        raise GmblError(f"unknown dataset format {format!r}")
    counts = [m.shape[1] for m in mats]
    if len(set(counts)) != 1:
        raise MismatchedSampleCount(
            "views disagree on sample count: " + ", ".join(f"{f.name}={c}" for f, c in zip(files, counts))
        )
    views = tuple(ViewMatrix(m, i) for i, m in enumerate(mats))
    return MultiViewDataset(views, _read_labels(path, counts[0]))


def write_matrix_f64(path: Path, mat: np.ndarray) -> None:
    np.ascontiguousarray(mat, dtype="<f8").tofile(path)


def save_dataset(dataset: MultiViewDataset, path, format: str = "csv") -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    stems = _view_stems(dataset.n_views)
    if format in ("csv", "csv-dir"):
        for stem, v in zip(stems, dataset.views):
            np.savetxt(path / f"{stem}.csv", v.data, delimiter=",", fmt="%.17g")
    elif format in ("binary", "binary-dir"):
        shapes = {}
        for stem, v in zip(stems, dataset.views):
            write_matrix_f64(path / f"{stem}.f64", v.data)
            shapes[stem] = list(v.data.shape)
        (path / SHAPE_FILE).write_text(json.dumps(shapes, indent=2) + "\n")
    else:
        raise GmblError(f"unknown dataset format {format!r}")
    if dataset.labels is not None:
        np.savetxt(path / LABELS_FILE, dataset.labels, fmt="%d")
    return path


# ---------------------------------------------------------------------------
# preprocessing


def normalize_views(dataset: MultiViewDataset) -> MultiViewDataset:
    """Z-score every feature dimension (population std); constant dims become 0."""
    views = []
    for v in dataset.views:
        x = v.data - v.data.mean(axis=1, keepdims=True)
        std = np.sqrt(np.mean(x * x, axis=1, keepdims=True))
        # rounding noise from centering a constant row is not variance
        varies = std > 1e-12 * np.abs(v.data).max(axis=1, keepdims=True)
        safe = np.where(varies, std, 1.0)
        views.append(ViewMatrix(np.where(varies, x / safe, 0.0), v.view_id))
    return MultiViewDataset(tuple(views), dataset.labels)


def anchor_indices(n: int, s: int, seed) -> np.ndarray:
    if not 1 <= s <= n:
        raise AnchorCountExceedsSamples(f"need 1 <= s <= N, got s={s}, N={n}")
    return np.random.default_rng(seed).permutation(n)[:s]


def sample_anchors(view: ViewMatrix, s: int, seed) -> AnchorSet:
    idx = anchor_indices(view.n_samples, s, seed)
    return AnchorSet(_frozen(view.data[:, idx]), _frozen(idx, np.int64), seed)


def sample_dataset_anchors(dataset: MultiViewDataset, s: int, seed, shared: bool = True) -> list[AnchorSet]:
    """One AnchorSet per view.

    With ``shared=True`` every view uses the same sample indices. Otherwise view
    ``v`` draws its own indices from the child stream ``(seed, v)``.
    """
    if shared:
        return [sample_anchors(v, s, seed) for v in dataset.views]
    children = np.random.SeedSequence(seed).spawn(dataset.n_views)
    return [sample_anchors(v, s, c) for v, c in zip(dataset.views, children)]


def default_anchor_count(n: int) -> int:
    return min(300, n)


# ---------------------------------------------------------------------------
# synthetic data


def make_synthetic(
    k_views: int,
    n_clusters: int,
    per_cluster: int,
    dims: Sequence[int],
    noise: float,
    seed=None,
    merged: Optional[Sequence[Sequence[Sequence[int]]]] = None,
    center_scale: float = 1.0,
) -> MultiViewDataset:
    """Gaussian blobs sharing one cluster structure across views.

    Each view gets its own cluster centers drawn from ``N(0, center_scale^2)``.
    ``merged[v]`` optionally lists groups of clusters that share a center in
    view ``v`` (so that view cannot tell them apart).
    """
    if len(dims) != k_views:
        raise GmblError(f"dims has {len(dims)} entries for {k_views} views")
    if noise < 0:
        raise GmblError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_clusters), per_cluster)
    views = []
    for v, d in enumerate(dims):
        centers = rng.normal(0.0, center_scale, size=(d, n_clusters))
        if merged is not None:
            for group in merged[v]:
                group = list(group)
                centers[:, group] = centers[:, [group[0]]]
        x = centers[:, labels] + noise * rng.standard_normal((d, labels.size))
        views.append(ViewMatrix(x, v))
    return MultiViewDataset(tuple(views), labels)


def make_complementary(
    n_clusters: int = 3,
    per_cluster: int = 100,
    dim: int = 10,
    noise: float = 0.3,
    seed=None,
) -> MultiViewDataset:
    """One view per cluster; view ``v`` merges clusters ``v`` and ``v+1 (mod n)``.

    No single view separates every cluster, but the views jointly do.
    """
    merged = [[(v, (v + 1) % n_clusters)] for v in range(n_clusters)]
    return make_synthetic(
        n_clusters, n_clusters, per_cluster, [dim] * n_clusters, noise, seed, merged=merged
    )
