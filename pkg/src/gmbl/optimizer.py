"""Alternating discrete optimisation of the multi-view binary coding objective.

Objective minimised over codes ``B`` (r x N, entries +-1), per-view
projections ``H_v`` (r x s) and simplex view weights ``a``::

    sum_v a_v^c * M_v  +  beta * tr(B L B^T)
    M_v = ||B - H_v G_v||_F^2 + delta ||H_v||_F^2 - (lam / N) ||H_v G_v||_F^2

One outer iteration updates H (closed form), then B (sign-projected
gradient steps), then a (closed form).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import GmblError, SingularNormalMatrix
from .graph import SimilarityGraph, fuse_and_laplacian
from .kernel import EmbeddedView

logger = logging.getLogger(__name__)

M_FLOOR = 1e-12


@dataclass(frozen=True)
class GmblHyperParams:
    r: int = 32
    delta: float = 3.0
    lam: float = 1e-2
    beta: float = 1e-2
    mu: float = 1e-4
    rho: float = 1e-4
    c: float = 2.0
    eta: Optional[float] = 1e-3  # None -> number of samples
    max_iters: int = 50
    tol: float = 1e-4
    inner_b_steps: int = 3
    eta_backtrack: bool = True
    max_backtracks: int = 60
    decorrelation_centered: bool = False
    refresh_graph_each_iter: bool = False

    def validate(self, n_samples: Optional[int] = None) -> None:
        if self.r < 1:
            raise GmblError(f"code length r must be >= 1, got {self.r}")
        for name in ("delta", "lam", "beta", "mu", "rho"):
            if getattr(self, name) < 0:
                raise GmblError(f"{name} must be >= 0")
        if not self.c > 1:
            raise GmblError(f"weight exponent c must be > 1, got {self.c}")
        if self.eta is not None and not self.eta > 0:
            raise GmblError(f"eta must be > 0, got {self.eta}")
        if self.max_iters < 0 or self.inner_b_steps < 0:
            raise GmblError("max_iters and inner_b_steps must be >= 0")
        if n_samples is not None and not self.lam / n_samples < 1:
            raise GmblError(f"lam / N must be < 1 (lam={self.lam}, N={n_samples})")

    def step_scale(self, n_samples: int) -> float:
        return float(n_samples) if self.eta is None else float(self.eta)


@dataclass
class GmblModel:
    b: np.ndarray
    h: list
    a: np.ndarray
    hp: GmblHyperParams
    objective_trace: list = field(default_factory=list)

    @property
    def r(self) -> int:
        return self.b.shape[0]

    @property
    def n_samples(self) -> int:
        return self.b.shape[1]

    @property
    def n_views(self) -> int:
        return len(self.h)

    def codes(self) -> np.ndarray:
        """Sample-major codes (N x r)."""
        return self.b.T.copy()


@dataclass(frozen=True)
class PerViewLoss:
    m: np.ndarray


# ---------------------------------------------------------------------------
# H step


def normal_matrix(g: np.ndarray, hp: GmblHyperParams) -> np.ndarray:
    n = g.shape[1]
    return (1.0 - hp.lam / n) * (g @ g.T) + hp.delta * np.eye(g.shape[0])


class _Projector:
    """Cached Cholesky factor of ``P`` for one view; ``P`` does not depend on B or a."""

    def __init__(self, g: np.ndarray, hp: GmblHyperParams):
        self.g = g
        try:
            self.factor = sla.cho_factor(normal_matrix(g, hp), lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularNormalMatrix(
                f"normal matrix not positive definite (delta={hp.delta}, lam={hp.lam})"
            ) from exc
        if not np.all(np.isfinite(self.factor[0])) or np.any(np.diag(self.factor[0]) <= 0):
            raise SingularNormalMatrix("normal matrix factorisation is degenerate")

    def solve(self, b: np.ndarray) -> np.ndarray:
        # H = B G^T P^-1  <=>  P H^T = G B^T  (P symmetric)
        return sla.cho_solve(self.factor, self.g @ b.T).T


def update_h(b: np.ndarray, ev: EmbeddedView, hp: GmblHyperParams) -> np.ndarray:
    return _Projector(ev.g, hp).solve(b)


def h_objective(h: np.ndarray, b: np.ndarray, g: np.ndarray, hp: GmblHyperParams) -> float:
    """Per-view cost minimised by the H step (M_v as a function of H)."""
    hg = h @ g
    n = g.shape[1]
    return float(np.sum((b - hg) ** 2) + hp.delta * np.sum(h * h) - hp.lam / n * np.sum(hg * hg))


# ---------------------------------------------------------------------------
# objective pieces


def graph_trace(b: np.ndarray, lap: sp.spmatrix) -> float:
    """tr(B L B^T) via a sparse product; L is never densified."""
    return float(np.sum((lap @ b.T) * b.T))


def per_view_losses(model: GmblModel, embeds: Sequence[EmbeddedView], hp: GmblHyperParams) -> PerViewLoss:
    return PerViewLoss(np.array([h_objective(h, model.b, ev.g, hp) for h, ev in zip(model.h, embeds)]))


def objective(model: GmblModel, embeds, graph: SimilarityGraph, hp: GmblHyperParams) -> float:
    m = per_view_losses(model, embeds, hp).m
    return float(np.sum(model.a ** hp.c * m) + hp.beta * graph_trace(model.b, graph.laplacian))


def penalty_terms(b: np.ndarray, hp: GmblHyperParams) -> dict:
    """Decorrelation and balance penalties used by the B step (diagnostics only)."""
    bbt = b @ b.T
    if hp.decorrelation_centered:
        bbt = bbt - b.shape[1] * np.eye(b.shape[0])
    return {
        "decorrelation": float(hp.mu * np.sum(bbt * bbt)),
        "balance": float(hp.rho * np.sum(b.sum(axis=1) ** 2)),
    }


def _fitted(model: GmblModel, embeds) -> list:
    return [h @ ev.g for h, ev in zip(model.h, embeds)]


def b_surrogate(
    b: np.ndarray, model: GmblModel, embeds, graph: SimilarityGraph, hp: GmblHyperParams, fitted=None
) -> float:
    """Smooth B-subproblem evaluated at real-valued ``b``.

    ``||B||_F^2`` is dropped from the quantisation term: it equals ``rN`` on
    the binary domain, so only the cross term and ``||H G||^2`` remain.
    """
    fitted = _fitted(model, embeds) if fitted is None else fitted
    val = 0.0
    for av, hg in zip(model.a, fitted):
        val += av ** hp.c * (np.sum(hg * hg) - 2.0 * np.sum(b * hg))
    val += hp.beta * graph_trace(b, graph.laplacian)
    pens = penalty_terms(b, hp)
    return float(val + pens["decorrelation"] + pens["balance"])


def b_gradient(
    model: GmblModel, embeds, graph: SimilarityGraph, hp: GmblHyperParams, b=None, fitted=None
) -> np.ndarray:
    """Gradient of :func:`b_surrogate` with respect to B."""
    b = model.b if b is None else b
    fitted = _fitted(model, embeds) if fitted is None else fitted
    grad = np.zeros_like(b, dtype=np.float64)
    for av, hg in zip(model.a, fitted):
        grad -= 2.0 * av ** hp.c * hg
    if hp.beta:
        lap = graph.laplacian
        grad += hp.beta * (lap @ b.T + lap.T @ b.T).T
    if hp.mu:
        bbt = b @ b.T
        if hp.decorrelation_centered:
            bbt = bbt - b.shape[1] * np.eye(b.shape[0])
        grad += 4.0 * hp.mu * (bbt @ b)
    if hp.rho:
        grad += 2.0 * hp.rho * b.sum(axis=1, keepdims=True)
    return grad


def sign_step(b: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    """``sgn(B - grad / eta)`` with sgn(0) keeping the previous bit."""
    cand = b - grad / eta
    return np.where(cand > 0, 1.0, np.where(cand < 0, -1.0, b))


def update_b(model: GmblModel, embeds, graph: SimilarityGraph, hp: GmblHyperParams) -> np.ndarray:
    """``inner_b_steps`` sign-gradient steps on the codes.

    With ``hp.eta_backtrack`` each step starts at ``eta`` and doubles it until
    the step does not increase :func:`b_surrogate` (no change is always
    acceptable). Otherwise every step uses ``eta`` as is.
    """
    eta0 = hp.step_scale(model.n_samples)
    fitted = _fitted(model, embeds)
    b = model.b
    for _ in range(hp.inner_b_steps):
        grad = b_gradient(model, embeds, graph, hp, b=b, fitted=fitted)
        if not hp.eta_backtrack:
            b = sign_step(b, grad, eta0)
            continue
        current = b_surrogate(b, model, embeds, graph, hp, fitted)
        eta = eta0
        for _ in range(hp.max_backtracks):
            trial = sign_step(b, grad, eta)
            if np.array_equal(trial, b):
                break
            if b_surrogate(trial, model, embeds, graph, hp, fitted) <= current:
                b = trial
                break
            eta *= 2.0
    return b


# ---------------------------------------------------------------------------
# a step


def update_a(losses, hp_or_c) -> np.ndarray:
    """Closed-form simplex weights ``a_v ∝ M_v^(1/(1-c))``.

    Non-positive M_v are clamped to ``M_FLOOR`` first.
    """
    c = hp_or_c.c if isinstance(hp_or_c, GmblHyperParams) else float(hp_or_c)
    m = np.asarray(losses.m if isinstance(losses, PerViewLoss) else losses, dtype=np.float64)
    if np.any(m <= M_FLOOR):
        logger.warning("clamping non-positive per-view loss %s to %g", m.tolist(), M_FLOOR)
        m = np.maximum(m, M_FLOOR)
    logw = np.log(m) / (1.0 - c)
    # floor keeps every weight strictly positive when c is close to 1
    w = np.maximum(np.exp(logw - logw.max()), np.finfo(np.float64).tiny)
    return w / w.sum()


# ---------------------------------------------------------------------------
# driver


def init_model(embeds: Sequence[EmbeddedView], hp: GmblHyperParams, seed=None) -> GmblModel:
    n = embeds[0].n_samples
    if any(ev.n_samples != n for ev in embeds):
        raise GmblError("embedded views disagree on sample count")
    hp.validate(n)
    rng = np.random.default_rng(seed)
    b = np.where(rng.standard_normal((hp.r, n)) < 0, -1.0, 1.0)
    k = len(embeds)
    h = [update_h(b, ev, hp) for ev in embeds]
    return GmblModel(b, h, np.full(k, 1.0 / k), hp)


def fit(
    embeds: Sequence[EmbeddedView],
    graph: SimilarityGraph,
    hp: GmblHyperParams,
    seed=None,
    view_similarities: Optional[Sequence[sp.spmatrix]] = None,
    callback=None,
) -> GmblModel:
    """Run H -> B -> a updates until the relative objective change drops below ``tol``.

    ``view_similarities`` is only needed with ``hp.refresh_graph_each_iter``;
    the fused graph is then rebuilt from the current view weights before
    every iteration.
    """
    if hp.refresh_graph_each_iter and view_similarities is None:
        raise GmblError("refresh_graph_each_iter needs the per-view similarity matrices")
    model = init_model(embeds, hp, seed)
    projectors = [_Projector(ev.g, hp) for ev in embeds]
    model.objective_trace.append(objective(model, embeds, graph, hp))
    for it in range(hp.max_iters):
        if hp.refresh_graph_each_iter:
            graph = fuse_and_laplacian(view_similarities, model.a)
        model.h = [p.solve(model.b) for p in projectors]
        model.b = update_b(model, embeds, graph, hp)
        model.a = update_a(per_view_losses(model, embeds, hp), hp)
        obj = objective(model, embeds, graph, hp)
        if not math.isfinite(obj):
            raise SingularNormalMatrix(f"objective became non-finite at iteration {it + 1}")
        prev = model.objective_trace[-1]
        model.objective_trace.append(obj)
        if callback is not None:
            callback(it + 1, model)
        if abs(prev - obj) <= hp.tol * max(abs(prev), 1e-300):
            break
    return model


def hyperparams_to_dict(hp: GmblHyperParams) -> dict:
    return asdict(hp)


def with_overrides(hp: GmblHyperParams, **kw) -> GmblHyperParams:
    return replace(hp, **kw)
