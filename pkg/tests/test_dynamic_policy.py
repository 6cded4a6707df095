import numpy as np
import pytest

from mvlab.dynamic_policy import (
    CevParams,
    MarketParams,
    anticipated_gain_cev,
    anticipated_gain_gbm,
    cev_anticipated_gain_exact,
    cev_policy,
    cev_policy_multi,
    hedging_covariance_check,
    lattice_equilibrium_oracle,
    multi_policy,
    simple_policy,
)
from mvlab.errors import DefinitenessError, DomainError, HorizonError, ResourceError

MKT = dict(mu=0.125, sigma=np.sqrt(0.2), r=0.025, T=10.0, gamma=1.0)


def single(**over):
    kw = {**MKT, **over}
    return MarketParams.single(kw["mu"], kw["sigma"], kw["r"], kw["T"], kw["gamma"])


class TestSimplePolicy:
    def test_at_horizon_end(self):
        pol = simple_policy(single(), t=10.0)
        assert pol.theta[0] == pytest.approx(0.5, rel=1e-12)
        assert pol.hedging[0] == 0.0

    def test_risk_aversion_scaling(self):
        base = simple_policy(single(gamma=1.0), t=0.0).theta[0]
        tiny = simple_policy(single(gamma=1e6), t=0.0).theta[0]
        assert abs(tiny) <= 1e-6 * base

    def test_discounted_value(self):
        pol = simple_policy(single(), t=0.0)
        assert pol.theta[0] == pytest.approx(0.5 * np.exp(-0.25), rel=1e-12)

    def test_matches_lattice_root(self):
        m = single(T=1.0)
        lat = lattice_equilibrium_oracle(m, steps=512)
        closed = simple_policy(m, t=0.0).theta[0]
        assert abs(lat.root - closed) < 5.0 * (1.0 / 512)

    def test_horizon_error(self):
        with pytest.raises(HorizonError):
            simple_policy(single(), t=10.5)

    def test_discount_consistency(self):
        m = single()
        end = simple_policy(m, t=m.T).theta[0]
        for t in (0.0, 2.5, 7.0):
            assert simple_policy(m, t).theta[0] == pytest.approx(
                end * np.exp(-m.r * (m.T - t)), rel=1e-14)

    def test_time_consistency_restriction(self):
        # policy on [t, T] equals the restriction of the policy on [0, T]
        full = single(T=10.0)
        late = single(T=6.0)  # horizon [0, 6] plays the role of [4, 10]
        assert simple_policy(late, 2.0).theta[0] == simple_policy(full, 6.0).theta[0]


class TestMultiPolicy:
    def test_identity_covariance(self):
        m = MarketParams(mu=[0.125, 0.125], sigma=np.eye(2), r=0.025, T=1.0, gamma=2.0)
        pol = multi_policy(m, t=1.0)
        np.testing.assert_allclose(pol.theta, [0.05, 0.05], rtol=1e-12)

    def test_single_asset_reduction(self):
        m = single()
        for t in (0.0, 5.0):
            assert multi_policy(m, t).theta[0] == simple_policy(m, t).theta[0]

    def test_residual(self, rng):
        a = rng.normal(size=(5, 5))
        m = MarketParams(mu=rng.normal(0.1, 0.05, 5), sigma=a + 2 * np.eye(5),
                         r=0.02, T=3.0, gamma=1.5)
        t = 1.0
        pol = multi_policy(m, t)
        rhs = (m.mu - m.r) / m.gamma * np.exp(-m.r * (m.T - t))
        assert np.max(np.abs(m.cov @ pol.theta - rhs)) <= 1e-10

    def test_decomposition_exact(self, rng):
        m = MarketParams(mu=[0.1, 0.15], sigma=np.eye(2), r=0.02, T=2.0, gamma=1.0)
        pol = multi_policy(m, 0.5)
        np.testing.assert_array_equal(pol.theta, pol.myopic + pol.hedging)


CEV = dict(mu=0.125, sigma_bar=0.2, alpha=1.0, r=0.025, T=1.0, gamma=1.0)


def cev_single(**over):
    kw = {**CEV, **over}
    return CevParams.single(kw["mu"], kw["sigma_bar"], kw["alpha"], kw["r"],
                            kw["T"], kw["gamma"])


class TestCevPolicy:
    def test_gbm_reduction_alpha_zero(self):
        c = cev_single(alpha=0.0)
        m = single(sigma=0.2, T=1.0)
        for t in (0.0, 0.5):
            pol = cev_policy(c, S=1.7, t=t)
            ref = simple_policy(m, t)
            assert pol.hedging[0] == 0.0
            assert pol.theta[0] == pytest.approx(ref.theta[0], rel=1e-14)

    def test_terminal_time(self):
        c = cev_single()
        pol = cev_policy(c, S=2.0, t=1.0)
        assert pol.hedging[0] == 0.0
        assert pol.myopic[0] == pytest.approx(0.1 / (0.04 * 2.0), rel=1e-12)

    def test_negative_price_rejected(self):
        with pytest.raises(DomainError):
            cev_policy(cev_single(), S=-1.0, t=0.0)

    def test_hedging_equals_gain_sensitivity(self):
        # hedging = -S df/dS e^{-r tau} with f the exact anticipated gain
        c = cev_single()
        S, t, h = 1.0, 0.0, 1e-6
        dfdS = (cev_anticipated_gain_exact(c, S + h, t)
                - cev_anticipated_gain_exact(c, S - h, t)) / (2 * h)
        expected = -S * dfdS * np.exp(-c.r * (c.T - t))
        assert cev_policy(c, S, t).hedging[0] == pytest.approx(expected, rel=1e-8)

    def test_zero_rate_limit(self):
        c = cev_single(r=0.0)
        pol = cev_policy(c, S=1.0, t=0.0)
        # (e^{-a r tau} - 1)/r -> -a tau
        expected = -(0.125 / 0.2) ** 2 * (-1.0)
        assert pol.hedging[0] == pytest.approx(expected, rel=1e-12)

    def test_continuity_to_gbm(self):
        m = single(sigma=0.2, T=1.0)
        ref = simple_policy(m, 0.0).theta[0]
        prev_gap = None
        for eps in (1e-4, 1e-6):
            got = cev_policy(cev_single(alpha=eps), S=1.0, t=0.0).theta[0]
            gap = abs(got - ref)
            assert gap < 1.0 * eps  # bounded by C * eps with finite C
            if prev_gap is not None:
                assert gap < prev_gap
            prev_gap = gap


class TestCevPolicyMulti:
    def test_alpha_zero_matches_multi(self):
        corr = np.array([[1.0, 0.3], [0.3, 1.0]])
        c = CevParams(mu=[0.1, 0.12], sigma_bar=[0.2, 0.25], alpha=[0.0, 0.0],
                      corr=corr, r=0.02, T=2.0, gamma=1.0)
        loading = np.linalg.cholesky(np.outer([0.2, 0.25], [0.2, 0.25]) * corr)
        m = MarketParams(mu=[0.1, 0.12], sigma=loading, r=0.02, T=2.0, gamma=1.0)
        pol = cev_policy_multi(c, S=[1.0, 3.0], t=0.5)
        ref = multi_policy(m, 0.5)
        np.testing.assert_allclose(pol.theta, ref.theta, rtol=1e-12)

    def test_single_asset_reduction(self):
        c = cev_single()
        pol = cev_policy_multi(c, S=[1.4], t=0.25)
        ref = cev_policy(c, S=1.4, t=0.25)
        assert pol.myopic[0] == ref.myopic[0]
        assert pol.hedging[0] == ref.hedging[0]

    def test_diagonal_separability(self):
        c = CevParams(mu=[0.1, 0.14], sigma_bar=[0.2, 0.3], alpha=[1.0, -0.5],
                      corr=np.eye(2), r=0.03, T=2.0, gamma=2.0)
        S = np.array([1.2, 0.8])
        pol = cev_policy_multi(c, S, t=0.5)
        for i in range(2):
            ci = CevParams.single(c.mu[i], c.sigma_bar[i], c.alpha[i],
                                  c.r, c.T, c.gamma)
            ref = cev_policy(ci, S[i], 0.5)
            assert pol.myopic[i] == pytest.approx(ref.myopic[0], abs=1e-12)
            assert pol.hedging[i] == pytest.approx(ref.hedging[0], abs=1e-12)

    def test_nonpositive_price(self):
        with pytest.raises(DomainError):
            cev_policy_multi(cev_single(), S=[0.0], t=0.0)


class TestAnticipatedGain:
    def test_gbm_zero_sharpe(self):
        assert anticipated_gain_gbm(single(mu=0.025), 0.0) == 0.0

    def test_gbm_direct(self):
        assert anticipated_gain_gbm(single(), 0.0) == pytest.approx(0.5, rel=1e-12)

    def test_gbm_matches_mc(self):
        from mvlab.simulate import mc_anticipated_gain
        m = single()
        est = mc_anticipated_gain(m, 1.0, 2.0, 1000, 3)
        assert est.stderr == 0.0
        assert est.value == pytest.approx(anticipated_gain_gbm(m, 2.0), rel=1e-12)

    def test_cev_alpha_zero_deterministic(self):
        c = cev_single(alpha=0.0, T=2.0)
        est = anticipated_gain_cev(c, S=1.0, t=0.0, paths=500, seed=1)
        assert est.value == pytest.approx((0.1 / 0.2) ** 2 * 2.0, rel=1e-9)
        assert est.stderr <= 1e-12

    def test_cev_zero_excess(self):
        c = cev_single(mu=0.025)
        est = anticipated_gain_cev(c, S=1.0, t=0.0, paths=500, seed=1)
        assert est.value == 0.0

    def test_cev_matches_ode_oracle(self):
        # independent oracle: numerically integrate the moment ODE
        from scipy.integrate import quad, solve_ivp
        c = cev_single()
        S, t = 1.0, 0.0
        sol = solve_ivp(
            lambda s, h: -c.alpha[0] * c.r * h
            + c.alpha[0] * (c.alpha[0] + 1) * c.sigma_bar[0] ** 2 / 2.0,
            (t, c.T), [S ** (-c.alpha[0])], dense_output=True, rtol=1e-10, atol=1e-12)
        integral = quad(lambda s: sol.sol(s)[0], t, c.T, epsabs=1e-12)[0]
        oracle = (c.mu[0] - c.r) ** 2 / (c.gamma * c.sigma_bar[0] ** 2) * integral
        assert cev_anticipated_gain_exact(c, S, t) == pytest.approx(oracle, rel=1e-8)
        est = anticipated_gain_cev(c, S, t, paths=40_000, seed=9)
        assert abs(est.value - oracle) <= 3.0 * max(est.stderr, 1e-12) + 2e-4

    def test_requires_minimum_paths(self):
        with pytest.raises(ValueError):
            anticipated_gain_cev(cev_single(), 1.0, 0.0, paths=10, seed=0)


class TestHedgingCovariance:
    def test_alpha_zero_uncorrelated(self):
        rep = hedging_covariance_check(cev_single(alpha=0.0), S=1.0, t=0.0,
                                       paths=10_000, seed=4)
        assert abs(rep.correlation) <= 0.05
        assert rep.hedging_sign == 0
        assert rep.consistent

    def test_alpha_positive(self):
        rep = hedging_covariance_check(cev_single(alpha=1.0), S=1.0, t=0.0,
                                       paths=4000, seed=4)
        assert rep.covariance_sign == -1
        assert rep.hedging_sign == 1
        assert rep.consistent

    def test_alpha_negative(self):
        rep = hedging_covariance_check(cev_single(alpha=-1.0), S=1.0, t=0.0,
                                       paths=4000, seed=4)
        assert rep.covariance_sign == 1
        assert rep.hedging_sign == -1
        assert rep.consistent


class TestLattice:
    def test_zero_excess_return_zero_policy(self):
        m = single(mu=0.025, T=1.0)
        lat = lattice_equilibrium_oracle(m, steps=32)
        for level in lat.thetas:
            np.testing.assert_array_equal(level, np.zeros_like(level))

    def test_gamma_scaling(self):
        m1 = single(T=1.0, gamma=1.0)
        m2 = single(T=1.0, gamma=2.0)
        r1 = lattice_equilibrium_oracle(m1, 64).root
        r2 = lattice_equilibrium_oracle(m2, 64).root
        assert r2 == pytest.approx(r1 / 2.0, rel=1e-12)

    def test_first_order_convergence(self):
        m = single(T=1.0)
        closed = simple_policy(m, 0.0).theta[0]
        errs = [abs(lattice_equilibrium_oracle(m, s).root - closed)
                for s in (64, 128, 256, 512)]
        for e1, e2 in zip(errs, errs[1:]):
            assert 0.35 <= e2 / e1 <= 0.65  # halves within +/- 30%

    def test_step_limit(self):
        with pytest.raises(ResourceError):
            lattice_equilibrium_oracle(single(), steps=1 << 16)

    def test_too_few_steps(self):
        with pytest.raises(ValueError):
            lattice_equilibrium_oracle(single(), steps=1)


class TestValidation:
    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            MarketParams.single(0.1, 0.2, 0.02, 1.0, gamma=0.0)

    def test_bad_corr(self):
        with pytest.raises(ValueError):
            CevParams(mu=[0.1, 0.1], sigma_bar=[0.2, 0.2], alpha=[0.0, 0.0],
                      corr=np.array([[1.0, 0.5], [0.4, 1.0]]),
                      r=0.02, T=1.0, gamma=1.0)

    def test_zero_volatility_policy_rejected(self):
        m = MarketParams.single(0.1, 0.0, 0.02, 1.0, 1.0)
        with pytest.raises(DefinitenessError):
            simple_policy(m, 0.0)
