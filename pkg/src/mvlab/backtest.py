"""Weekly rolling-estimation backtest with a bond-balanced ledger.

The loop: at each decision week, estimate mean/covariance from the previous
26-week batch, evaluate the chosen strategy to a money vector, convert to
shares at current prices (self-financing, bond account absorbs the balance),
then accrue bond interest and stock P&L to the next week.  Initial wealth is
zero and short selling is allowed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from . import dynamic_policy, estimate, static_mvo
from .errors import DataError, WarmupError
from .simulate import PriceSeries

Array = NDArray[np.float64]

STRATEGIES = ("static", "simple", "multi", "cev")


@dataclass(frozen=True)
class BacktestConfig:
    # one of STRATEGIES, or a callable (est, prices_now, t_years, horizon) -> theta
    strategy: object = "simple"
    target: float = 0.15          # static strategy: required annual return
    alpha: float = 0.0            # cev strategy: elasticity exponent
    gamma: float = 1.0
    r: float = 0.025
    batch_len: int = estimate.DEFAULT_BATCH_LEN
    dt: float = 1.0 / 52.0
    notional: float = 1.0         # static strategy: money run through omega

    def __post_init__(self):
        if not callable(self.strategy) and self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.r < 0:
            raise ValueError("riskless rate must be nonnegative")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.batch_len < 2:
            raise ValueError("batch_len must be at least 2")


@dataclass
class Ledger:
    bond_cash: float
    shares: Array
    wealth: float

    def check(self, prices: Array, tol: float = 1e-9):
        stock = float(self.shares @ prices)
        scale = max(1.0, abs(self.wealth))
        if abs(self.bond_cash + stock - self.wealth) > tol * scale:
            raise AssertionError("ledger identity violated")


@dataclass(frozen=True)
class WealthPath:
    times: Array
    wealth: Array
    bond: Array
    stock_value: Array
    week_index: Array


def rebalance_step(ledger: Ledger, prices_now: Array, theta_money: Array) -> Ledger:
    """Move to the target money allocation; wealth is unchanged."""
    prices_now = np.asarray(prices_now, dtype=np.float64)
    if np.any(prices_now <= 0):
        raise DataError("prices must be positive at rebalancing")
    theta_money = np.asarray(theta_money, dtype=np.float64)
    shares = theta_money / prices_now
    bond_cash = ledger.wealth - float(np.sum(theta_money))
    return Ledger(bond_cash=bond_cash, shares=shares, wealth=ledger.wealth)


def accrue_step(ledger: Ledger, prices_next: Array, dt: float, r: float) -> Ledger:
    """One period of bond interest and stock P&L at fixed shares."""
    prices_next = np.asarray(prices_next, dtype=np.float64)
    bond_cash = ledger.bond_cash * np.exp(r * dt)
    wealth = bond_cash + float(ledger.shares @ prices_next)
    return Ledger(bond_cash=float(bond_cash), shares=ledger.shares, wealth=float(wealth))


def _strategy_theta(cfg: BacktestConfig, est: estimate.ParamEstimate,
                    prices_now: Array, t_years: float, horizon: float) -> Array:
    if callable(cfg.strategy):
        return np.asarray(cfg.strategy(est, prices_now, t_years, horizon), float)
    sigma = estimate.regularize_covariance(est.sigma_hat)
    n = sigma.shape[0]
    if cfg.strategy == "static":
        problem = static_mvo.StaticProblem(mu=est.mu_hat, sigma=sigma,
                                           target=cfg.target)
        if n == 1:
            # A single asset cannot generally hit the target; invest fully.
            omega = np.ones(1)
        else:
            omega = static_mvo.solve_static_mvo(problem).omega
        return cfg.notional * omega
    if cfg.strategy in ("simple", "multi"):
        m = dynamic_policy.MarketParams(
            mu=est.mu_hat, sigma=static_mvo.robust_cholesky(sigma),
            r=cfg.r, T=horizon, gamma=cfg.gamma,
        )
        return dynamic_policy.multi_policy(m, t_years).theta
    # cev: read the estimated covariance as the instantaneous covariance of
    # dS/S at current prices, so sigma_bar_i = sqrt(Sigma_ii) / S_i^(alpha/2).
    alpha = np.full(n, cfg.alpha)
    vols = np.sqrt(np.diag(sigma))
    corr = sigma / np.outer(vols, vols)
    np.fill_diagonal(corr, 1.0)
    corr = 0.5 * (corr + corr.T)
    sigma_bar = vols / prices_now ** (cfg.alpha / 2.0)
    c = dynamic_policy.CevParams(mu=est.mu_hat, sigma_bar=sigma_bar, alpha=alpha,
                                 corr=corr, r=cfg.r, T=horizon, gamma=cfg.gamma)
    return dynamic_policy.cev_policy_multi(c, prices_now, t_years).theta


def run_backtest(prices: PriceSeries, cfg: BacktestConfig) -> WealthPath:
    """Full weekly loop; returns the recorded wealth path (initial wealth 0)."""
    n_rows = prices.prices.shape[0]
    if n_rows < cfg.batch_len + 3:
        raise WarmupError(
            f"need at least {cfg.batch_len + 3} price rows, got {n_rows}"
        )
    panel = estimate.to_returns(prices)
    horizon = (n_rows - 1) * cfg.dt
    first = cfg.batch_len + 1
    ledger = Ledger(bond_cash=0.0, shares=np.zeros(prices.n_assets), wealth=0.0)
    idx = [first]
    wealth = [0.0]
    bond = [0.0]
    stock = [0.0]
    for t in range(first, n_rows - 1):
        est = estimate.rolling_estimate(panel, t, cfg.batch_len)
        prices_now = prices.prices[t]
        theta = _strategy_theta(cfg, est, prices_now, t * cfg.dt, horizon)
        ledger = rebalance_step(ledger, prices_now, theta)
        ledger.check(prices_now)
        ledger = accrue_step(ledger, prices.prices[t + 1], cfg.dt, cfg.r)
        ledger.check(prices.prices[t + 1])
        idx.append(t + 1)
        wealth.append(ledger.wealth)
        bond.append(ledger.bond_cash)
        stock.append(float(ledger.shares @ prices.prices[t + 1]))
    return WealthPath(
        times=np.array(idx, dtype=float) * cfg.dt,
        wealth=np.array(wealth),
        bond=np.array(bond),
        stock_value=np.array(stock),
        week_index=np.array(idx),
    )
