"""Anchor-based RBF embedding of each view into a common s-dimensional space."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import AnchorSet, MultiViewDataset, ViewMatrix
from .errors import GmblError, NonPositiveKernelWidth

# keeps entries strictly positive when exp underflows for far-away samples
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class EmbeddedView:
    g: np.ndarray  # s x N
    xi: float
    anchor_ref: AnchorSet
    view_id: int = 0

    @property
    def n_samples(self) -> int:
        return self.g.shape[1]


def _sq_dists(view: ViewMatrix, anchors: AnchorSet) -> np.ndarray:
    if anchors.anchors.shape[0] != view.dim:
        raise GmblError(
            f"anchor dimension {anchors.anchors.shape[0]} does not match view dimension {view.dim}"
        )
    # anchors x samples
    return cdist(anchors.anchors.T, view.data.T, "sqeuclidean")


def kernel_width_heuristic(view: ViewMatrix, anchors: AnchorSet) -> float:
    """Mean squared sample-to-anchor distance, or 1.0 if that mean is zero."""
    xi = float(_sq_dists(view, anchors).mean())
    return xi if xi > 0 else 1.0


def embed_view(view: ViewMatrix, anchors: AnchorSet, xi: float) -> EmbeddedView:
    if not xi > 0:
        raise NonPositiveKernelWidth(f"kernel width must be > 0, got {xi}")
    g = np.exp(-_sq_dists(view, anchors) / xi)
    np.maximum(g, _TINY, out=g)
    g.setflags(write=False)
    return EmbeddedView(g, float(xi), anchors, view.view_id)


def embed_dataset(
    dataset: MultiViewDataset,
    anchor_sets: Sequence[AnchorSet],
    kernel_width: Optional[float] = None,
) -> list[EmbeddedView]:
    """Embed every view; ``kernel_width=None`` picks the heuristic per view."""
    out = []
    for view, anchors in zip(dataset.views, anchor_sets):
        xi = kernel_width if kernel_width is not None else kernel_width_heuristic(view, anchors)
        out.append(embed_view(view, anchors, xi))
    return out
