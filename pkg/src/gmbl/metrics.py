"""k-means over binary codes and external clustering metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import GmblError, LengthMismatch, TooManyClusters


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    n_clusters: int
    inertia: float
    seed: Optional[int] = None
    inertia_history: tuple = ()


@dataclass(frozen=True)
class ClusteringReport:
    acc: float
    nmi: float
    purity: float
    f_score: float
    contingency: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {"acc": self.acc, "nmi": self.nmi, "purity": self.purity, "f_score": self.f_score}


# ---------------------------------------------------------------------------
# k-means


def _sq_dist(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (x * x).sum(1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dist(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # all remaining points coincide with a center; pick an unused index
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        closest = np.minimum(closest, _sq_dist(x, x[[nxt]])[:, 0])
    return x[chosen].copy()


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iters: int):
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iters):
        d = _sq_dist(x, centers)
        new_labels = d.argmin(1)
        history.append(float(d[np.arange(x.shape[0]), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(0)
            else:
                # re-seed an empty cluster at the point worst served by its center
                far = int(d[np.arange(x.shape[0]), labels].argmax())
                centers[j] = x[far]
                labels[far] = j
                d[far] = _sq_dist(x[[far]], centers)[0]
    d = _sq_dist(x, centers)
    labels = d.argmin(1)
    inertia = float(d[np.arange(x.shape[0]), labels].sum())
    history.append(inertia)
    return labels, inertia, history


def kmeans(x: np.ndarray, k: int, seed=None, max_iters: int = 300, n_restarts: int = 10) -> ClusterAssignment:
    """Lloyd's algorithm on the rows of ``x`` with k-means++ seeding.

    Restart ``i`` draws from child stream ``i`` of ``seed``; the lowest-inertia
    run wins (first one on ties).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise TooManyClusters(f"need 1 <= k <= N, got k={k}, N={n}")
    if n_restarts < 1:
        raise GmblError("n_restarts must be >= 1")
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_restarts):
        rng = np.random.default_rng(child)
        labels, inertia, history = _lloyd(x, _plus_plus(x, k, rng), max_iters)
        if best is None or inertia < best[1]:
            best = (labels, inertia, history)
    labels, inertia, history = best
    return ClusterAssignment(labels, k, inertia, seed, tuple(history))


def kmeans_codes(b: np.ndarray, k: int, seed=None, max_iters: int = 300, n_restarts: int = 10) -> ClusterAssignment:
    """Cluster the columns of an r x N code matrix.

    On +-1 vectors squared Euclidean distance is four times Hamming distance,
    so nearest-center assignment agrees with the Hamming one.
    """
    return kmeans(np.asarray(b, dtype=np.float64).T, k, seed, max_iters, n_restarts)


# ---------------------------------------------------------------------------
# metrics


def contingency(pred, truth) -> np.ndarray:
    """k_pred x k_true count matrix over the distinct labels of each partition."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise LengthMismatch(f"pred has {pred.size} labels, truth has {truth.size}")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max(initial=-1) + 1, ti.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def accuracy(pred, truth) -> float:
    table = contingency(pred, truth)
    if table.sum() == 0:
        return 0.0
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies (natural log).

    If either entropy is zero the result is 1 for identical partitions, else 0.
    """
    table = contingency(pred, truth)
    n = table.sum()
    if n == 0:
        return 0.0
    hp_, ht = _entropy(table.sum(1), n), _entropy(table.sum(0), n)
    if hp_ == 0 or ht == 0:
        return 1.0 if hp_ == ht == 0 else 0.0
    nz = table > 0
    outer = np.outer(table.sum(1), table.sum(0))
    mi = float((table[nz] / n * np.log(table[nz] * n / outer[nz])).sum())
    return float(np.clip(mi / np.sqrt(hp_ * ht), 0.0, 1.0))


def purity(pred, truth) -> float:
    table = contingency(pred, truth)
    n = table.sum()
    return float(table.max(1).sum() / n) if n else 0.0


def _pairs(x: np.ndarray) -> float:
    return float((x * (x - 1) // 2).sum())


def pairwise_f_score(pred, truth) -> float:
    table = contingency(pred, truth)
    tp = _pairs(table)
    if tp == 0:
        return 0.0
    precision = tp / _pairs(table.sum(1))
    recall = tp / _pairs(table.sum(0))
    return float(2 * precision * recall / (precision + recall))


def evaluate(pred, truth) -> ClusteringReport:
    return ClusteringReport(
        accuracy(pred, truth),
        nmi(pred, truth),
        purity(pred, truth),
        pairwise_f_score(pred, truth),
        contingency(pred, truth),
    )
