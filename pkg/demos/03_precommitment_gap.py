"""Precommitment vs time-consistent investing, in money terms.

A precommitted investor optimizes the time-0 mean-variance objective once
and never revisits it; the time-consistent investor re-derives the policy
at every instant.  Precommitment wins in time-0 expectation by exactly
(1/gamma)(e^{kappa^2 T} - 1 - kappa^2 T) -- but never pathwise, and the
edge is third-order small for short horizons.
"""

import numpy as np

from mvlab import MarketParams, analytic_gap, compare_strategies_mc

print(f"{'T':>4} {'gap analytic':>13} {'gap MC':>10} {'stderr':>9}")
for T in (0.5, 1.0, 2.0, 5.0, 10.0):
    m = MarketParams.single(mu=0.125, sigma=np.sqrt(0.2), r=0.025, T=T,
                            gamma=1.0)
    cmp_ = compare_strategies_mc(m, W0=1.0, paths=200_000, seed=42)
    print(f"{T:4.1f} {cmp_.gap_analytic:13.5f} {cmp_.gap:10.5f} "
          f"{cmp_.gap_stderr:9.5f}")

m = MarketParams.single(mu=0.125, sigma=np.sqrt(0.2), r=0.025, T=10.0,
                        gamma=1.0)
cmp_ = compare_strategies_mc(m, W0=1.0, paths=200_000, seed=42)
print(f"\nAt T=10 the mean edge is {cmp_.gap_analytic:.4f} "
      f"(MC {cmp_.gap:.4f} +/- {cmp_.gap_stderr:.4f}).")
print("kappa^2 T = 0.5 here, so e^0.5 - 1.5 ~ 0.1487: the textbook value.")

# the edge vanishes with the Sharpe ratio
flat = MarketParams.single(mu=0.025, sigma=np.sqrt(0.2), r=0.025, T=10.0,
                           gamma=1.0)
print(f"With zero excess return the gap is exactly {analytic_gap(flat)}: "
      "both strategies hold only the bond.")
