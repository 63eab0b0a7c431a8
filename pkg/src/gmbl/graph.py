"""Locally-linear reconstruction graph over the embedded views.

Per view: exact g-nearest neighbours, sum-to-one reconstruction weights,
a symmetrised similarity matrix. Views are then fused with simplex weights
and turned into the Laplacian ``L = D - S``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import GmblError, NeighborCountTooLarge, SingularLocalGram, WeightsNotSimplex
from .kernel import EmbeddedView

logger = logging.getLogger(__name__)

DEFAULT_NEIGHBORS = 6
DEFAULT_LLE_REG = 1e-3
_ROW_CHUNK = 1024


@dataclass(frozen=True)
class NeighborIndex:
    indices: np.ndarray  # N x g, ascending distance, ties by ascending index

    @property
    def g(self) -> int:
        return self.indices.shape[1]

    @property
    def n_samples(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True)
class LleWeights:
    w: sp.csr_matrix
    neighbors: NeighborIndex


@dataclass(frozen=True)
class SimilarityGraph:
    s_fused: sp.csr_matrix
    degree: np.ndarray
    laplacian: sp.csr_matrix
    view_weights_used: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.s_fused.shape[0]


def find_neighbors(ev: EmbeddedView, g: int) -> NeighborIndex:
    x = ev.g.T
    n = x.shape[0]
    if not 1 <= g <= n - 1:
        raise NeighborCountTooLarge(f"need 1 <= g <= N-1, got g={g}, N={n}")
    out = np.empty((n, g), dtype=np.int64)
    for start in range(0, n, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, n)
        d = cdist(x[start:stop], x, "sqeuclidean")
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort over index-ordered columns breaks ties toward the smaller index
        out[start:stop] = np.argsort(d, axis=1, kind="stable")[:, :g]
    out.setflags(write=False)
    return NeighborIndex(out)


def lle_weights(ev: EmbeddedView, nn: NeighborIndex, reg: float = DEFAULT_LLE_REG) -> LleWeights:
    """Sum-to-one weights reconstructing each column from its neighbours.

    Row i solves ``C w = 1`` with the local Gram matrix
    ``C_gt = (x_i - u_g) . (x_i - u_t)`` regularised by ``reg * trace(C)``
    (or ``reg`` if the trace vanishes), then rescales to sum one.
    """
    if reg < 0:
        raise GmblError("reg must be >= 0")
    x = ev.g.T
    n, g = nn.indices.shape
    z = x[nn.indices] - x[:, None, :]  # N x g x s
    c = np.einsum("ngs,nts->ngt", z, z)
    tr = np.trace(c, axis1=1, axis2=2)
    shift = np.where(tr > 0, reg * tr, reg)
    c = c + shift[:, None, None] * np.eye(g)
    try:
        w = np.linalg.solve(c, np.ones((n, g, 1)))[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularLocalGram(f"local Gram matrix is singular even with reg={reg}") from exc
    total = w.sum(axis=1, keepdims=True)
    if not np.all(np.isfinite(w)) or np.any(total == 0):
        raise SingularLocalGram(f"local Gram solve produced non-finite weights (reg={reg})")
    w = w / total
    rows = np.repeat(np.arange(n), g)
    mat = sp.csr_matrix((w.ravel(), (rows, nn.indices.ravel())), shape=(n, n))
    return LleWeights(mat, nn)


def per_view_similarity(w: LleWeights, nn: Optional[NeighborIndex] = None) -> sp.csr_matrix:
    """Scatter weights onto neighbour positions and symmetrise ``(S + S^T) / 2``."""
    s = w.w if sp.issparse(w.w) else sp.csr_matrix(w.w)
    return ((s + s.T) * 0.5).tocsr()


def _check_simplex(a: np.ndarray, k: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (k,):
        raise WeightsNotSimplex(f"expected {k} view weights, got shape {a.shape}")
    if np.any(a <= 0) or abs(a.sum() - 1.0) > 1e-9:
        raise WeightsNotSimplex(f"view weights must be positive and sum to 1, got {a.tolist()}")
    return a


def fuse_and_laplacian(per_view: Sequence[sp.spmatrix], a) -> SimilarityGraph:
    if not per_view:
        raise GmblError("need at least one similarity matrix")
    a = _check_simplex(a, len(per_view))
    shape = per_view[0].shape
    if any(s.shape != shape for s in per_view):
        raise GmblError("per-view similarity matrices differ in shape")
    fused = sp.csr_matrix(shape)
    for weight, s in zip(a, per_view):
        fused = fused + weight * s
    fused = fused.tocsr()
    fused.sum_duplicates()
    degree = np.asarray(fused.sum(axis=1)).ravel()
    lap = (sp.diags(degree) - fused).tocsr()
    if fused.nnz and fused.data.min() < 0:
        i = int(np.argmin(fused.data))
        logger.warning(
            "fused similarity has negative entries (min %.4g); Laplacian may be indefinite",
            fused.data[i],
        )
    a = a.copy()
    a.setflags(write=False)
    degree.setflags(write=False)
    return SimilarityGraph(fused, degree, lap, a)


def build_view_similarities(
    embeds: Sequence[EmbeddedView], g: int = DEFAULT_NEIGHBORS, reg: float = DEFAULT_LLE_REG
) -> list[sp.csr_matrix]:
    sims = []
    for ev in embeds:
        nn = find_neighbors(ev, g)
        sims.append(per_view_similarity(lle_weights(ev, nn, reg), nn))
    return sims


def build_graph(
    embeds: Sequence[EmbeddedView],
    g: int = DEFAULT_NEIGHBORS,
    reg: float = DEFAULT_LLE_REG,
    a=None,
) -> SimilarityGraph:
    """Full graph with uniform view weights unless ``a`` is given."""
    sims = build_view_similarities(embeds, g, reg)
    if a is None:
        a = np.full(len(sims), 1.0 / len(sims))
    return fuse_and_laplacian(sims, a)


def dump_edges(graph: SimilarityGraph, path) -> None:
    """Write the fused similarity as ``i j weight`` lines (upper triangle incl. diagonal)."""
    coo = sp.triu(graph.s_fused).tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {v:.17g}\n")
