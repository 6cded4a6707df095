"""Mean-variance portfolio laboratory.

Static Markowitz solutions with a KKT oracle, time-consistent dynamic
mean-variance policies under GBM and CEV economies, precommitment analytics,
seeded market simulators, a rolling-estimation weekly backtest engine, and
equity-curve performance metrics.
"""

from .backtest import BacktestConfig, Ledger, WealthPath, accrue_step, rebalance_step, run_backtest
from .dynamic_policy import (
    CevParams,
    MarketParams,
    Policy,
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
from .estimate import ParamEstimate, ReturnsPanel, regularize_covariance, rolling_estimate, to_returns
from .metrics import PerfStats, max_drawdown, perf_stats
from .simulate import (
    PriceSeries,
    SimConfig,
    cev_paths,
    correlated_normals,
    gbm_ensemble,
    gbm_paths,
    mc_anticipated_gain,
    rn_weight,
    rn_weights,
)
from .static_mvo import (
    FrontierConstants,
    StaticProblem,
    Weights,
    frontier_constants,
    frontier_variance,
    kkt_oracle,
    solve_static_mvo,
)
from .wealth_analysis import (
    DensitySample,
    WealthStats,
    analytic_gap,
    compare_strategies_mc,
    precommitment_wealth,
    price_density_sample,
    tc_terminal_wealth_sample,
    tc_wealth_stats,
)

__version__ = "0.1.0"
