"""Graph-based multi-view binary code learning for clustering."""

__version__ = "0.1.0"

from .dataset import (  # noqa: E402
    AnchorSet,
    MultiViewDataset,
    ViewMatrix,
    load_dataset,
    make_complementary,
    make_synthetic,
    normalize_views,
    sample_anchors,
    save_dataset,
)
from .graph import SimilarityGraph, build_graph  # noqa: E402
from .kernel import EmbeddedView, embed_view  # noqa: E402
from .metrics import evaluate, kmeans_codes  # noqa: E402
from .optimizer import GmblHyperParams, GmblModel, fit  # noqa: E402
