import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from htem import _kernels, sampler
from htem.linalg import NotPositiveDefiniteError, spd_factorize, spd_log_det, spd_solve
from htem.sampler import (
    UPDATE_ORDER,
    ChainConfig,
    ChainTrace,
    Hyperparameters,
    InvariantError,
    ModelState,
    alpha_probability,
    check_state,
    draw_alpha,
    draw_beta,
    draw_eta,
    draw_omega,
    draw_pi,
    draw_rho2,
    draw_sigma2,
    draw_tau2,
    eta_probabilities,
    gibbs_step,
    init_state,
    log_model_weight,
    mc3_propose,
    rho2_gig_params,
    run_chain,
    update_gamma_mh,
)
from htem.streams import make_stream

from oracles import gig_cdf_table, ks_against_grid, model_posterior_by_enumeration

SQRT_N_KS = 1.95  # 0.1% critical value of sqrt(n) * D


def make_state(n, p, **kw):
    base = dict(
        gamma=np.zeros(p, dtype=bool),
        beta=np.zeros(p),
        sigma2=np.ones(n),
        tau2=1.0,
        rho2=1.0,
        alpha=0,
        eta=1.0,
        pi_tilde=0.5,
        omega=0.5,
    )
    base.update(kw)
    return ModelState(**base)


def toy(seed, n=4, p=2):
    rng = make_stream(seed)
    X = rng.standard_normal((n, p))
    y = X @ rng.normal(0, 1, p) + rng.standard_normal(n)
    sigma2 = rng.uniform(0.5, 2.0, n)
    return X, y, sigma2


# --- hyperparameters and initialisation -------------------------------------


def test_default_hyperparameters():
    h = Hyperparameters()
    assert (h.nu, h.a, h.b, h.s1, h.m1, h.m2) == (1.0, 2.1, 0.1, 1.0, 1.0, 1.0)
    assert h.resolve(100).s2 == 10.0
    assert h.eta_grid[0] == 0.05 and h.eta_grid[-1] == 50.0 and len(h.eta_grid) == 16


@pytest.mark.parametrize(
    "kw",
    [dict(nu=0), dict(a=-1), dict(s2=0.0), dict(eta_grid=()), dict(eta_grid=(1, 1)), dict(eta_grid=(2, 1)),
     dict(error_mode="xyz"), dict(omega_fixed=1.5)],
)
def test_bad_hyperparameters(kw):
    with pytest.raises(ValueError):
        Hyperparameters(**kw)


def test_init_state(rng):
    s = init_state(5, 100, Hyperparameters(), rng)
    assert s.p_gamma == 0 and np.all(s.beta == 0)
    assert np.all(s.sigma2 == 1) and s.tau2 == 1 and s.rho2 == 1 and s.eta == 1.0
    assert s.pi_tilde == pytest.approx(1 / 11)
    assert s.omega == 0.5
    assert init_state(5, 3, Hyperparameters(error_mode="hem"), rng).alpha == 0
    assert init_state(5, 3, Hyperparameters(error_mode="tem"), rng).alpha == 1


def test_init_alpha_is_fair_coin():
    rng = make_stream(3)
    a = [init_state(2, 2, Hyperparameters(), rng).alpha for _ in range(4000)]
    assert abs(np.mean(a) - 0.5) < 3 * math.sqrt(0.25 / 4000)


def test_check_state_flags_violations():
    h = Hyperparameters(error_mode="hem").resolve(2)
    s = make_state(3, 2, gamma=np.array([False, True]), beta=np.array([0.5, 1.0]))
    with pytest.raises(InvariantError, match="beta nonzero"):
        check_state(s, h)
    with pytest.raises(InvariantError, match="not on the grid"):
        check_state(make_state(3, 2, eta=0.77), h)
    with pytest.raises(InvariantError, match="HEM"):
        check_state(make_state(3, 2, alpha=1), h)
    check_state(make_state(3, 2), h)


# --- model weight ----------------------------------------------------------


def test_null_model_weight():
    X, y, _ = toy(0, p=3)
    lw = log_model_weight(np.zeros(3, bool), np.ones(4), 1.0, 1.0, 0.5, X, y)
    assert lw == pytest.approx(3 * math.log(0.5), rel=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_model_weights_match_enumeration(seed):
    X, y, sigma2 = toy(seed)
    tau2, rho2, pi = 0.7, 1.9, 0.3
    models, exact = model_posterior_by_enumeration(X, y, sigma2, tau2, rho2, pi)
    lw = np.array([log_model_weight(g, sigma2, tau2, rho2, pi, X, y) for g in models])
    w = np.exp(lw - lw.max())
    np.testing.assert_allclose(w / w.sum(), exact, rtol=1e-10)


def test_unit_scale_toy_matches_enumeration():
    X, y, _ = toy(11)
    models, exact = model_posterior_by_enumeration(X, y, np.ones(4), 1.0, 1.0, 0.5)
    lw = np.array([log_model_weight(g, np.ones(4), 1.0, 1.0, 0.5, X, y) for g in models])
    np.testing.assert_allclose(np.exp(lw - special.logsumexp(lw)), exact, rtol=1e-10)


@given(st.integers(0, 2**31), st.floats(0.05, 0.95))
def test_zero_column_only_adds_prior_factor(seed, pi):
    X, y, sigma2 = toy(seed, n=6, p=3)
    g = np.array([True, False, True])
    base = log_model_weight(g, sigma2, 0.8, 1.3, pi, X, y)
    Xz = np.column_stack([X, np.zeros(6)])
    ext = log_model_weight(np.append(g, False), sigma2, 0.8, 1.3, pi, Xz, y)
    assert ext == pytest.approx(base + math.log1p(-pi), rel=1e-12, abs=1e-12)


@given(st.integers(0, 2**31))
def test_kernel_matches_dense_algebra(seed):
    rng = make_stream(seed)
    n, p = 12, 6
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    w = rng.uniform(0.2, 3.0, n)
    idx = np.sort(rng.choice(p, size=int(rng.integers(1, p + 1)), replace=False))
    ridge = float(rng.uniform(0.01, 5.0))
    L, z, ok = _kernels.model_terms(X, y, idx, w, ridge)
    assert ok
    Xg = X[:, idx]
    A = Xg.T @ (w[:, None] * Xg) + ridge * np.eye(idx.size)
    bvec = Xg.T @ (w * y)
    f = spd_factorize(A)
    np.testing.assert_allclose(L, f.lower, rtol=1e-10, atol=1e-12)
    assert float(z @ z) == pytest.approx(float(bvec @ spd_solve(f, bvec)), rel=1e-10)
    np.testing.assert_allclose(_kernels.back_solve(L, z), np.linalg.solve(A, bvec), rtol=1e-9, atol=1e-12)
    assert 2 * np.sum(np.log(np.diag(L))) == pytest.approx(spd_log_det(f), rel=1e-12)


# --- MC3 move --------------------------------------------------------------


def test_propose_single_covariate(rng):
    for _ in range(20):
        prop, k = mc3_propose(np.array([False]), rng)
        assert k == 0 and prop[0]


def test_propose_flips_exactly_one(rng):
    g = rng.random(10) < 0.5
    for _ in range(200):
        prop, k = mc3_propose(g, rng)
        assert np.count_nonzero(prop != g) == 1 and prop[k] != g[k]


def test_propose_uniform_coordinate(rng):
    g = np.zeros(10, bool)
    counts = np.bincount([mc3_propose(g, rng)[1] for _ in range(100_000)], minlength=10) / 100_000
    assert np.all(np.abs(counts - 0.1) < 3 * math.sqrt(0.09 / 100_000))


def test_propose_empty_raises(rng):
    with pytest.raises(ValueError):
        mc3_propose(np.zeros(0, bool), rng)


def test_equal_weights_always_accept(monkeypatch, rng):
    # flipping a zero column leaves the weight unchanged when pi_tilde = 1/2
    X = np.column_stack([rng.standard_normal(5), np.zeros(5)])
    y = rng.standard_normal(5)
    s = make_state(5, 2, gamma=np.array([True, False]), pi_tilde=0.5)
    lw = [log_model_weight(g, s.sigma2, 1.0, 1.0, 0.5, X, y) for g in (s.gamma, np.array([True, True]))]
    assert lw[0] == pytest.approx(lw[1], abs=1e-12)

    def flip_second(gamma, _rng):
        g = gamma.copy()
        g[1] = not g[1]
        return g, 1

    monkeypatch.setattr(sampler, "mc3_propose", flip_second)
    for _ in range(500):
        s.gamma, acc = update_gamma_mh(s, X, y, rng)
        assert acc


def test_detailed_balance_pairwise():
    X, y, sigma2 = toy(4)
    models, exact = model_posterior_by_enumeration(X, y, sigma2, 1.0, 1.0, 0.4)
    lw = np.array([log_model_weight(g, sigma2, 1.0, 1.0, 0.4, X, y) for g in models])
    for i in range(4):
        for j in range(4):
            if np.count_nonzero(models[i] != models[j]) != 1:
                continue
            # proposal prob 1/p is symmetric and cancels
            flow_ij = math.exp(lw[i]) * min(1.0, math.exp(lw[j] - lw[i]))
            flow_ji = math.exp(lw[j]) * min(1.0, math.exp(lw[i] - lw[j]))
            assert flow_ij == pytest.approx(flow_ji, rel=1e-12)


def test_non_pd_proposal_is_rejected(monkeypatch, rng, caplog):
    X, y, sigma2 = toy(1)
    s = make_state(4, 2, sigma2=sigma2)
    real = sampler.log_model_weight

    def fake(gamma, *args):
        if gamma.any():
            raise NotPositiveDefiniteError("forced")
        return real(gamma, *args)

    monkeypatch.setattr(sampler, "log_model_weight", fake)
    for _ in range(10):
        gamma, acc = update_gamma_mh(s, X, y, rng)
        assert not acc and not gamma.any()
    assert "rejecting" in caplog.text


def test_frozen_chain_visits_models_like_enumeration():
    X, y, sigma2 = toy(21)
    tau2, rho2, pi = 1.5, 0.8, 0.45
    _, exact = model_posterior_by_enumeration(X, y, sigma2, tau2, rho2, pi)
    init = make_state(4, 2, sigma2=sigma2, tau2=tau2, rho2=rho2, pi_tilde=pi)
    frozen = ("tau2", "rho2", "alpha", "eta", "sigma2", "pi_tilde", "omega")
    trace = run_chain(X, y, Hyperparameters(), ChainConfig(50_000, seed=5), init=init, frozen=frozen)
    codes = trace.gamma[:, 0] * 2 + trace.gamma[:, 1]
    freq = np.bincount(codes, minlength=4) / len(trace)
    assert 0.5 * np.abs(freq - exact).sum() < 0.02
    assert np.all(trace.tau2 == tau2) and np.all(trace.rho2 == rho2)


# --- coefficients ----------------------------------------------------------


def test_beta_null_model(rng):
    X, y, _ = toy(0)
    assert np.all(draw_beta(make_state(4, 2), X, y, rng) == 0.0)


def test_beta_least_squares_limit(rng):
    x = rng.standard_normal(30)
    x /= np.linalg.norm(x)
    y = 2.5 * x + 0.1 * rng.standard_normal(30)
    s = make_state(30, 1, gamma=np.array([True]), tau2=1e12, rho2=1e12)
    L, z, _ = _kernels.model_terms(x[:, None], y, np.array([0]), np.ones(30), 1e-24)
    assert _kernels.back_solve(L, z)[0] == pytest.approx(float(x @ y), abs=1e-6)
    assert abs(draw_beta(s, x[:, None], y, rng)[0] - float(x @ y)) < 10.0


def test_beta_mean_and_covariance(rng):
    X, y, sigma2 = toy(6, n=8, p=3)
    g = np.array([True, False, True])
    s = make_state(8, 3, gamma=g, sigma2=sigma2, tau2=0.5, rho2=2.0)
    Xg = X[:, g]
    A = Xg.T @ (Xg / sigma2[:, None]) + np.eye(2)
    cov = np.linalg.inv(A)
    mean = cov @ (Xg.T @ (y / sigma2))
    draws = np.array([draw_beta(s, X, y, rng) for _ in range(40_000)])
    assert np.all(draws[:, 1] == 0.0)
    se = np.sqrt(np.diag(cov) / draws.shape[0])
    assert np.all(np.abs(draws[:, g].mean(axis=0) - mean) < 4 * se)
    np.testing.assert_allclose(np.cov(draws[:, g].T), cov, atol=0.03 * np.max(np.abs(cov)))


# --- scale parameters ------------------------------------------------------


def test_rho2_orders():
    gamma = np.zeros(20, bool)
    gamma[:5] = True
    s = make_state(100, 20, gamma=gamma, beta=gamma * 1.0, alpha=0, eta=2.0)
    h = Hyperparameters(a=2.1)
    assert rho2_gig_params(s, h)[0] == pytest.approx(-104.6)
    s.alpha = 1
    assert rho2_gig_params(s, h)[0] == pytest.approx(95.4)


@pytest.mark.parametrize("alpha", [0, 1])
def test_rho2_draws_match_density(alpha):
    rng = make_stream(40 + alpha)
    n, p = 30, 4
    gamma = np.array([True, True, False, False])
    s = make_state(n, p, gamma=gamma, beta=np.array([0.4, -1.1, 0, 0]), sigma2=rng.uniform(0.3, 2.0, n),
                   tau2=0.7, alpha=alpha, eta=2.0)
    h = Hyperparameters()
    order, a, b = rho2_gig_params(s, h)
    draws = np.array([draw_rho2(s, h, rng) for _ in range(100_000)])
    grid, cdf = gig_cdf_table(order, a, b)
    assert ks_against_grid(draws, grid, cdf) < 0.006


def test_tau2_prior_recovered_on_null_model(rng):
    s = make_state(3, 4)
    draws = np.array([draw_tau2(s, Hyperparameters(nu=1.0), rng) for _ in range(100_000)])
    d = stats.kstest(draws, stats.invgamma(0.5, scale=0.5).cdf).statistic
    assert d < SQRT_N_KS / math.sqrt(draws.size)


def test_tau2_shape_with_five_active(rng):
    gamma = np.zeros(8, bool)
    gamma[:5] = True
    beta = np.where(gamma, [0.5, -1, 2, 0.1, 0.3, 0, 0, 0], 0.0)
    s = make_state(3, 8, gamma=gamma, beta=beta, rho2=0.6)
    scale = float(beta @ beta) / 1.2 + 0.5
    draws = np.array([draw_tau2(s, Hyperparameters(nu=1.0), rng) for _ in range(100_000)])
    d = stats.kstest(draws, stats.invgamma(3.0, scale=scale).cdf).statistic
    assert d < SQRT_N_KS / math.sqrt(draws.size)


@pytest.mark.parametrize("k", [0, 10])
def test_pi_conditional_mean(rng, k):
    p = 10
    gamma = np.arange(p) < k
    s = make_state(2, p, gamma=gamma, beta=gamma * 1.0)
    h = Hyperparameters(s1=1.0, s2=3.0)
    draws = np.array([draw_pi(s, h, rng) for _ in range(100_000)])
    a, b = 1.0 + k, 3.0 + p - k
    mean = a / (a + b)
    sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    assert abs(draws.mean() - mean) < 3 * sd / math.sqrt(draws.size)


@pytest.mark.parametrize("alpha, mean", [(0, 1 / 3), (1, 2 / 3)])
def test_omega_conditional_mean(rng, alpha, mean):
    s = make_state(2, 2, alpha=alpha)
    draws = np.array([draw_omega(s, Hyperparameters(), rng) for _ in range(100_000)])
    sd = math.sqrt(2 / (9 * 4))  # Beta(1,2) and Beta(2,1) share this variance
    assert abs(draws.mean() - mean) < 3 * sd / math.sqrt(draws.size)


def test_omega_fixed_is_returned(rng):
    assert draw_omega(make_state(2, 2, alpha=1), Hyperparameters(omega_fixed=0.0), rng) == 0.0


def test_sigma2_student_branch(rng):
    s = make_state(1, 1, alpha=1, eta=3.0, rho2=1.0)
    resid = np.zeros(1)
    draws = np.array([draw_sigma2(s, resid, Hyperparameters(), rng)[0] for _ in range(100_000)])
    # IGamma(2, 1.5): mean 1.5 but infinite variance, so check the law and 1/sigma2 ~ Gamma(2, rate 1.5)
    assert stats.kstest(draws, stats.invgamma(2.0, scale=1.5).cdf).statistic < SQRT_N_KS / math.sqrt(draws.size)
    inv = 1.0 / draws
    assert abs(inv.mean() - 2 / 1.5) < 3 * math.sqrt(2 / 1.5**2 / draws.size)


def test_sigma2_hyperbolic_branch(rng):
    eta, rho2, e = 0.7, 1.6, 0.9
    s = make_state(4, 1, alpha=0, eta=eta, rho2=rho2)
    resid = np.full(4, e)
    draws = np.concatenate([draw_sigma2(s, resid, Hyperparameters(), rng) for _ in range(25_000)])
    grid, cdf = gig_cdf_table(0.5, eta / rho2, e * e + eta * rho2)
    assert ks_against_grid(draws, grid, cdf) < 0.006


def test_sigma2_independent_across_observations(rng):
    s = make_state(2, 1, alpha=0, eta=1.0)
    resid = np.array([0.3, -0.5])
    d = np.log(np.array([draw_sigma2(s, resid, Hyperparameters(), rng) for _ in range(50_000)]))
    r = np.corrcoef(d.T)[0, 1]
    assert abs(r) < 3 / math.sqrt(d.shape[0])


# --- error family and tail parameter ---------------------------------------


def _direct_branch_masses(resid, rho2, omega, grid):
    """Branch masses from scipy densities: hyperbolic via K_1, t via scipy.stats.t."""
    hyp, st_ = [], []
    for eta in grid:
        lh = -np.log(2 * math.sqrt(eta * rho2) * special.kv(1, eta)) - np.sqrt(eta * (eta + resid**2 / rho2))
        hyp.append(lh.sum())
        st_.append(stats.t(df=eta, scale=math.sqrt(rho2)).logpdf(resid).sum())
    return math.log1p(-omega) + special.logsumexp(hyp), math.log(omega) + special.logsumexp(st_)


@pytest.mark.parametrize("omega", [0.2, 0.5, 0.9])
def test_alpha_probability_matches_direct_evaluation(omega):
    resid = np.array([0.4, -2.7, 1.1])
    grid = (0.3, 2.0, 10.0)
    m0, m1 = _direct_branch_masses(resid, 1.3, omega, grid)
    assert alpha_probability(resid, 1.3, omega, grid) == pytest.approx(1 / (1 + math.exp(m0 - m1)), rel=1e-10)


def test_alpha_frequency_matches_probability():
    rng = make_stream(9)
    resid = np.array([0.4, -2.7, 1.1])
    h = Hyperparameters(eta_grid=(0.3, 2.0, 10.0))
    s = make_state(3, 1, rho2=1.3, omega=0.5)
    m0, m1 = _direct_branch_masses(resid, 1.3, 0.5, h.eta_grid)
    prob = 1 / (1 + math.exp(m0 - m1))
    freq = np.mean([draw_alpha(s, resid, h, rng) for _ in range(100_000)])
    assert abs(freq - prob) < 3 * math.sqrt(prob * (1 - prob) / 100_000)


def test_alpha_degenerate_weights(rng):
    resid = np.array([0.1, 5.0])
    h = Hyperparameters()
    assert all(draw_alpha(make_state(2, 1, omega=1.0), resid, h, rng) == 1 for _ in range(100))
    assert all(draw_alpha(make_state(2, 1, omega=0.0), resid, h, rng) == 0 for _ in range(100))


def test_alpha_fixed_in_special_modes(rng):
    resid = np.array([0.1, 50.0])
    assert draw_alpha(make_state(2, 1, alpha=0, omega=0.99), resid, Hyperparameters(error_mode="hem"), rng) == 0
    assert draw_alpha(make_state(2, 1, alpha=1, omega=0.01), resid, Hyperparameters(error_mode="tem"), rng) == 1


def test_alpha_stable_for_large_samples():
    resid = make_stream(2).standard_cauchy(20_000)
    p = alpha_probability(resid, 1.0, 0.5, Hyperparameters().eta_grid)
    assert p == pytest.approx(1.0)


def test_eta_single_point_grid(rng):
    h = Hyperparameters(eta_grid=(2.0,))
    s = make_state(3, 1, eta=2.0)
    assert all(draw_eta(s, np.array([1.0, -3, 0.2]), h, rng) == 2.0 for _ in range(50))


def test_eta_prefers_heavy_tails_for_outliers():
    resid = make_stream(17).standard_cauchy(100)
    resid[:3] = [25.0, -40.0, 60.0]
    for alpha in (0, 1):
        probs = eta_probabilities(resid, 1.0, alpha, (1.0, 50.0))
        assert probs[0] > 0.99


@pytest.mark.parametrize("alpha", [0, 1])
def test_eta_probabilities_two_observations(alpha):
    resid = np.array([0.7, -1.9])
    rho2 = 0.8
    grid = (0.5, 1.0, 5.0)
    logs = []
    for eta in grid:
        if alpha == 0:
            lp = -np.log(2 * math.sqrt(eta * rho2) * special.kv(1, eta)) - np.sqrt(eta * (eta + resid**2 / rho2))
        else:
            lp = stats.t(df=eta, scale=math.sqrt(rho2)).logpdf(resid)
        logs.append(lp.sum())
    expected = np.exp(np.array(logs) - special.logsumexp(logs))
    np.testing.assert_allclose(eta_probabilities(resid, rho2, alpha, grid), expected, rtol=1e-12, atol=1e-14)


def test_eta_draw_frequencies(rng):
    resid = np.array([0.7, -1.9, 3.2])
    h = Hyperparameters(eta_grid=(0.5, 1.0, 5.0))
    s = make_state(3, 1, rho2=0.8, alpha=1, eta=1.0)
    probs = eta_probabilities(resid, 0.8, 1, h.eta_grid)
    draws = np.array([draw_eta(s, resid, h, rng) for _ in range(60_000)])
    freq = np.array([np.mean(draws == e) for e in h.eta_grid])
    assert np.all(np.abs(freq - probs) < 3 * np.sqrt(probs * (1 - probs) / draws.size))


# --- chain driver ----------------------------------------------------------


def smoke_data(seed=0, n=50, p=10):
    rng = make_stream(seed)
    X = rng.standard_normal((n, p))
    X = (X - X.mean(0)) / X.std(0)
    y = X[:, 0] * 1.5 - X[:, p - 1] + rng.standard_normal(n)
    return X, y - y.mean()


def test_smoke_chain():
    X, y = smoke_data()
    trace = run_chain(X, y, Hyperparameters(), ChainConfig(2000, 200, seed=1, debug=True))
    assert 0.0 < trace.acceptance_rate < 1.0
    assert len(trace) == 1800
    assert np.all(trace.beta[~trace.gamma] == 0.0)
    assert trace.gamma[:, 0].mean() > 0.9


def test_retained_row_count():
    X, y = smoke_data()
    for iters, burn, thin in [(100, 10, 1), (100, 10, 7), (101, 0, 4)]:
        trace = run_chain(X, y, Hyperparameters(), ChainConfig(iters, burn, thin, seed=2))
        assert len(trace) == math.ceil((iters - burn) / thin)
        assert trace.iteration[0] == burn and np.all(np.diff(trace.iteration) == thin)


@pytest.mark.parametrize("mode, alpha", [("hem", 0), ("tem", 1)])
def test_fixed_modes_hold_alpha(mode, alpha):
    X, y = smoke_data(3)
    trace = run_chain(X, y, Hyperparameters(error_mode=mode), ChainConfig(1500, seed=4, debug=True))
    assert np.all(trace.alpha == alpha)


def test_omega_stationary_law_in_hem_mode():
    X, y = smoke_data(5, n=20, p=3)
    trace = run_chain(X, y, Hyperparameters(error_mode="hem"), ChainConfig(20_000, 100, seed=6))
    # omega | alpha=0 ~ Beta(1, 2) independently at every sweep
    assert stats.kstest(trace.omega, stats.beta(1, 2).cdf).pvalue > 0.001


def test_update_order(monkeypatch):
    calls = []
    names = {
        "draw_tau2": "tau2", "draw_rho2": "rho2", "draw_alpha": "alpha", "draw_eta": "eta",
        "draw_sigma2": "sigma2", "draw_pi": "pi_tilde", "draw_omega": "omega",
        "update_gamma_mh": "gamma", "draw_beta": "beta",
    }
    for fn, tag in names.items():
        real = getattr(sampler, fn)

        def wrapped(*args, _real=real, _tag=tag):
            calls.append(_tag)
            return _real(*args)

        monkeypatch.setattr(sampler, fn, wrapped)
    X, y = smoke_data()
    state = init_state(50, 10, Hyperparameters().resolve(10), make_stream(0))
    gibbs_step(state, X, y, Hyperparameters().resolve(10), make_stream(1))
    assert tuple(calls) == UPDATE_ORDER
    calls.clear()
    run_chain(X, y, Hyperparameters(), ChainConfig(3, seed=0))
    assert tuple(calls) == UPDATE_ORDER * 3


def test_deterministic_given_seed():
    X, y = smoke_data()
    a = run_chain(X, y, Hyperparameters(), ChainConfig(300, seed=11))
    b = run_chain(X, y, Hyperparameters(), ChainConfig(300, seed=11))
    np.testing.assert_array_equal(a.beta, b.beta)
    np.testing.assert_array_equal(a.eta, b.eta)


def test_unknown_frozen_name():
    X, y = smoke_data()
    with pytest.raises(ValueError):
        run_chain(X, y, Hyperparameters(), ChainConfig(5), frozen=("sigma",))


def test_bad_chain_config():
    with pytest.raises(ValueError):
        ChainConfig(10, burn_in=10)
    with pytest.raises(ValueError):
        ChainConfig(10, thin=0)


def test_response_shape_checked():
    X, y = smoke_data()
    with pytest.raises(ValueError):
        run_chain(X, y[:-1], Hyperparameters(), ChainConfig(5))


@given(st.integers(0, 2**31))
def test_spike_slab_coupling_every_sweep(seed):
    rng = make_stream(seed)
    X, y = smoke_data(seed % 7, n=15, p=5)
    h = Hyperparameters().resolve(5)
    s = init_state(15, 5, h, rng)
    for _ in range(25):
        gibbs_step(s, X, y, h, rng)
        check_state(s, h)
        assert np.all((s.beta != 0) == s.gamma)


def test_trace_round_trips(tmp_path):
    X, y = smoke_data()
    trace = run_chain(X, y, Hyperparameters(), ChainConfig(200, 50, 3, seed=1))
    trace.to_npz(tmp_path / "t.npz")
    back = ChainTrace.from_npz(tmp_path / "t.npz")
    for col in ChainTrace._COLUMNS:
        np.testing.assert_array_equal(getattr(back, col), getattr(trace, col))
    assert (back.n_proposed, back.n_accepted, back.eta_grid) == (trace.n_proposed, trace.n_accepted, trace.eta_grid)

    trace.to_csv(tmp_path / "t.csv")
    import pandas as pd

    df = pd.read_csv(tmp_path / "t.csv", float_precision="round_trip")
    assert list(df.columns[:2]) == ["iteration", "gamma_mask"] and len(df) == len(trace)
    masks = df["gamma_mask"].map(lambda h: int(h, 16))
    for r in range(len(trace)):
        assert [(masks[r] >> j) & 1 for j in range(10)] == list(trace.gamma[r].astype(int))
    np.testing.assert_array_equal(df["beta_1"].to_numpy(), trace.beta[:, 0])
