import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from gmbl.dataset import AnchorSet, make_synthetic, normalize_views, sample_dataset_anchors
from gmbl.errors import GmblError
from gmbl.graph import SimilarityGraph, build_graph, fuse_and_laplacian
from gmbl.kernel import EmbeddedView, embed_dataset
from gmbl.optimizer import (
    GmblHyperParams,
    GmblModel,
    b_gradient,
    b_surrogate,
    fit,
    h_objective,
    init_model,
    normal_matrix,
    objective,
    per_view_losses,
    sign_step,
    update_a,
    update_b,
    update_h,
)

from oracles import central_difference_gradient, simplex_grid


def embedded(g):
    g = np.asarray(g, dtype=float)
    return EmbeddedView(g, 1.0, AnchorSet(np.zeros((1, g.shape[0])), np.arange(g.shape[0])))


def random_graph(rng, n):
    dense = rng.normal(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.4)
    np.fill_diagonal(dense, 0.0)
    s = sp.csr_matrix((dense + dense.T) / 2)
    deg = np.asarray(s.sum(axis=1)).ravel()
    return SimilarityGraph(s, deg, (sp.diags(deg) - s).tocsr(), np.ones(1))


def random_instance(rng, r=4, n=8, s=5, k=2, **hp_kw):
    hp = GmblHyperParams(r=r, **hp_kw)
    embeds = [embedded(rng.uniform(size=(s, n))) for _ in range(k)]
    a = rng.dirichlet(np.ones(k))
    b = np.where(rng.normal(size=(r, n)) < 0, -1.0, 1.0)
    model = GmblModel(b, [rng.normal(size=(r, s)) for _ in range(k)], a, hp)
    return model, embeds, random_graph(rng, n), hp


def small_problem(seed=0, k=2, n_per=20, r=16, **hp_kw):
    d = normalize_views(make_synthetic(k, 3, n_per, [5] * k, 0.3, seed=seed))
    embeds = embed_dataset(d, sample_dataset_anchors(d, 30, seed))
    return d, embeds, build_graph(embeds, 5), GmblHyperParams(r=r, **hp_kw)


# --- init ---------------------------------------------------------------


def test_init_uniform_weights():
    _, embeds, _, hp = small_problem(k=3)
    model = init_model(embeds, hp, seed=0)
    np.testing.assert_allclose(model.a, [1 / 3] * 3)


def test_init_codes_binary_and_deterministic():
    _, embeds, _, hp = small_problem()
    m1 = init_model(embeds, hp, seed=4)
    m2 = init_model(embeds, hp, seed=4)
    assert m1.b.shape == (hp.r, embeds[0].n_samples)
    assert set(np.unique(m1.b)) <= {-1.0, 1.0}
    np.testing.assert_array_equal(m1.b, m2.b)


def test_init_h_is_closed_form():
    _, embeds, _, hp = small_problem()
    m = init_model(embeds, hp, seed=1)
    for h, ev in zip(m.h, embeds):
        np.testing.assert_allclose(h, update_h(m.b, ev, hp))


def test_hyperparams_validation():
    with pytest.raises(GmblError):
        GmblHyperParams(c=1.0).validate()
    with pytest.raises(GmblError):
        GmblHyperParams(lam=10.0).validate(n_samples=5)
    with pytest.raises(GmblError):
        GmblHyperParams(eta=0.0).validate()


# --- H step -------------------------------------------------------------


def test_h_identity_embedding(rng):
    n, delta = 6, 0.5
    b = np.where(rng.normal(size=(3, n)) < 0, -1.0, 1.0)
    h = update_h(b, embedded(np.eye(n)), GmblHyperParams(r=3, delta=delta, lam=0.0))
    np.testing.assert_allclose(h, b / (1 + delta), atol=1e-14)


def test_h_recovers_consistent_system(rng):
    g = rng.normal(size=(4, 30))
    h0 = rng.normal(size=(3, 4))
    h = update_h(h0 @ g, embedded(g), GmblHyperParams(r=3, delta=1e-10, lam=0.0))
    np.testing.assert_allclose(h, h0, atol=1e-4)


def test_h_residual_and_stationarity(rng):
    g = rng.uniform(size=(6, 15))
    hp = GmblHyperParams(r=4, delta=0.3, lam=2.0)
    b = np.where(rng.normal(size=(4, 15)) < 0, -1.0, 1.0)
    h = update_h(b, embedded(g), hp)
    rhs = b @ g.T
    assert np.linalg.norm(h @ normal_matrix(g, hp) - rhs) / np.linalg.norm(rhs) < 1e-8
    base = h_objective(h, b, g, hp)
    for _ in range(20):
        d = rng.normal(size=h.shape)
        d /= np.linalg.norm(d)
        for eps in (1e-3, -1e-3):
            assert h_objective(h + eps * d, b, g, hp) - base > -1e-8


# --- objective ------------------------------------------------------------


def test_objective_exact_fit_is_zero(rng):
    g = rng.normal(size=(5, 10))
    h = rng.normal(size=(3, 5))
    b = h @ g  # real-valued on purpose: checks the arithmetic, not feasibility
    hp = GmblHyperParams(r=3, delta=0.0, lam=0.0, beta=0.0)
    model = GmblModel(b, [h, h], np.array([0.5, 0.5]), hp)
    graph = random_graph(rng, 10)
    assert objective(model, [embedded(g), embedded(g)], graph, hp) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("c", [1.5, 2.0, 5.0])
def test_objective_single_view_ignores_c(rng, c):
    model, embeds, graph, _ = random_instance(rng, k=1)
    model.a = np.array([1.0])
    hp = GmblHyperParams(r=model.r, c=c, beta=0.0)
    expect = h_objective(model.h[0], model.b, embeds[0].g, hp)
    assert objective(model, embeds, graph, hp) == pytest.approx(expect)


def test_graph_term_vanishes_on_constant_codes(rng):
    _, embeds, graph, hp = small_problem()
    n = graph.n_samples
    b = np.tile(np.where(rng.normal(size=(hp.r, 1)) < 0, -1.0, 1.0), (1, n))
    from gmbl.optimizer import graph_trace

    assert abs(graph_trace(b, graph.laplacian)) < 1e-9


def test_per_view_losses_shape():
    _, embeds, _, hp = small_problem(k=3)
    m = init_model(embeds, hp, seed=0)
    assert per_view_losses(m, embeds, hp).m.shape == (3,)


# --- B step ---------------------------------------------------------------


def test_gradient_zero_case(rng):
    model, embeds, graph, _ = random_instance(rng, k=1)
    model.h = [np.zeros_like(model.h[0])]
    hp = GmblHyperParams(r=model.r, beta=0.0, mu=0.0, rho=0.0)
    assert np.all(b_gradient(model, embeds, graph, hp) == 0)


def test_gradient_balance_term_on_balanced_rows(rng):
    model, embeds, graph, _ = random_instance(rng, n=8)
    model.b = np.tile([1.0, -1.0], (model.r, 4))
    full = b_gradient(model, embeds, graph, GmblHyperParams(r=model.r, rho=3.0))
    without = b_gradient(model, embeds, graph, GmblHyperParams(r=model.r, rho=0.0))
    np.testing.assert_allclose(full, without, atol=1e-12)


@pytest.mark.parametrize("centered", [False, True])
def test_gradient_finite_differences(rng, centered):
    model, embeds, graph, _ = random_instance(rng)
    hp = GmblHyperParams(r=model.r, beta=0.7, mu=0.05, rho=0.3, c=2.5, decorrelation_centered=centered)
    x = rng.normal(size=model.b.shape)
    fd = central_difference_gradient(lambda z: b_surrogate(z, model, embeds, graph, hp), x)
    an = b_gradient(model, embeds, graph, hp, b=x)
    assert np.linalg.norm(an - fd) / np.linalg.norm(fd) < 1e-5


def test_sign_step_toy():
    assert sign_step(np.array([[1.0]]), np.array([[4.0]]), 1.0).tolist() == [[-1.0]]


def test_sign_step_zero_keeps_bit():
    b = np.array([[1.0, -1.0]])
    out = sign_step(b, np.array([[1.0, -1.0]]), 1.0)  # lands exactly on zero
    np.testing.assert_array_equal(out, b)


@pytest.mark.parametrize("backtrack", [False, True])
def test_update_b_zero_gradient_fixed_point(rng, backtrack):
    model, embeds, graph, _ = random_instance(rng, k=1)
    model.h = [np.zeros_like(model.h[0])]
    hp = GmblHyperParams(r=model.r, beta=0.0, mu=0.0, rho=0.0, eta_backtrack=backtrack)
    np.testing.assert_array_equal(update_b(model, embeds, graph, hp), model.b)


def test_update_b_huge_eta(rng):
    model, embeds, graph, _ = random_instance(rng)
    hp = GmblHyperParams(r=model.r, eta=1e300, eta_backtrack=False)
    np.testing.assert_array_equal(update_b(model, embeds, graph, hp), model.b)


def test_update_b_backtracking_never_increases_surrogate(rng):
    for _ in range(20):
        model, embeds, graph, _ = random_instance(rng, beta=0.5, mu=0.01, rho=0.1)
        hp = model.hp
        before = b_surrogate(model.b, model, embeds, graph, hp)
        b = update_b(model, embeds, graph, hp)
        assert set(np.unique(b)) <= {-1.0, 1.0}
        assert b_surrogate(b, model, embeds, graph, hp) <= before + 1e-12


# --- a step ---------------------------------------------------------------


def test_update_a_equal_losses():
    np.testing.assert_allclose(update_a(np.array([2.0, 2.0, 2.0, 2.0]), 2.0), [0.25] * 4)


def test_update_a_hand_value():
    np.testing.assert_allclose(update_a(np.array([1.0, 8.0]), 2.0), [8 / 9, 1 / 9], rtol=1e-14)


def test_update_a_clamps_nonpositive():
    a = update_a(np.array([-3.0, 1.0]), 2.0)
    assert a[0] > a[1] and a.sum() == pytest.approx(1.0)


def test_update_a_grid_k2(rng):
    grid = simplex_grid(2)
    m = rng.uniform(0.1, 10, size=2)
    a = update_a(m, 2.0)
    best = (grid ** 2.0 @ m).min()
    assert (a ** 2.0) @ m <= best + 1e-6


@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=6), st.floats(1.01, 10))
def test_update_a_simplex(m, c):
    a = update_a(np.array(m), c)
    assert abs(a.sum() - 1) < 1e-12 and a.min() > 0
    order = np.argsort(m)
    assert np.all(np.diff(a[order]) <= 1e-15)


# --- fit ------------------------------------------------------------------


def test_fit_decreases_objective():
    _, embeds, graph, hp = small_problem(n_per=50, k=2)
    model = fit(embeds, graph, hp, seed=0)
    assert model.objective_trace[-1] <= model.objective_trace[0]


def test_fit_zero_iterations():
    _, embeds, graph, hp = small_problem()
    model = fit(embeds, graph, GmblHyperParams(r=hp.r, max_iters=0), seed=0)
    assert len(model.objective_trace) == 1
    np.testing.assert_array_equal(model.b, init_model(embeds, GmblHyperParams(r=hp.r), 0).b)


def test_fit_single_view_weight_stays_one():
    _, embeds, graph, hp = small_problem(k=1)
    seen = []
    fit(embeds, graph, hp, seed=0, callback=lambda it, m: seen.append(m.a.copy()))
    assert seen and all(a.tolist() == [1.0] for a in seen)


def test_fit_feasibility_every_iteration():
    _, embeds, graph, hp = small_problem(k=3)

    def check(it, m):
        assert set(np.unique(m.b)) <= {-1.0, 1.0}
        assert abs(m.a.sum() - 1) < 1e-12 and m.a.min() > 0

    fit(embeds, graph, hp, seed=3, callback=check)


def test_fit_deterministic():
    _, embeds, graph, hp = small_problem()
    m1 = fit(embeds, graph, hp, seed=9)
    m2 = fit(embeds, graph, hp, seed=9)
    np.testing.assert_array_equal(m1.b, m2.b)
    assert m1.objective_trace == m2.objective_trace


def test_fit_refresh_graph_option():
    from gmbl.graph import build_view_similarities

    _, embeds, _, hp = small_problem(k=2)
    sims = build_view_similarities(embeds, 5)
    graph = fuse_and_laplacian(sims, [0.5, 0.5])
    hp = GmblHyperParams(r=hp.r, refresh_graph_each_iter=True)
    model = fit(embeds, graph, hp, seed=0, view_similarities=sims)
    assert np.isfinite(model.objective_trace).all()
    with pytest.raises(GmblError):
        fit(embeds, graph, hp, seed=0)


def test_fit_permutation_equivariance(rng, monkeypatch):
    import gmbl.optimizer as opt

    d, embeds, graph, hp = small_problem(k=2)
    perm = rng.permutation(d.n_samples)
    hp = GmblHyperParams(r=hp.r, max_iters=5)
    m1 = fit(embeds, graph, hp, seed=0)

    p_embeds = [embedded(ev.g[:, perm]) for ev in embeds]
    p_graph = fuse_and_laplacian([graph.s_fused[perm][:, perm]], [1.0])
    orig_init = opt.init_model

    def permuted_init(e, h, seed=None):
        # same seed stream, codes permuted like the samples
        m = orig_init(embeds, h, seed)
        m.b = m.b[:, perm]
        m.h = [update_h(m.b, ev, h) for ev in e]
        return m

    monkeypatch.setattr(opt, "init_model", permuted_init)
    m2 = opt.fit(p_embeds, p_graph, hp, seed=0)
    np.testing.assert_array_equal(m2.b, m1.b[:, perm])
