"""Change of measure: pricing under the physical measure with RN weights.

The hedge-neutral measure turns the stock drift into the riskless rate.
We verify the two defining identities by Monte Carlo -- the weights
average to one, and weighting physical-measure payoffs reproduces
hedge-neutral expectations -- then use the machinery to price a call.
"""

import numpy as np

from mvlab import MarketParams, gbm_ensemble, rn_weights

mu, sigma, r, T = 0.125, np.sqrt(0.2), 0.025, 1.0
m = MarketParams.single(mu, sigma, r, T, gamma=1.0)
n_paths = 200_000

times, s = gbm_ensemble(mu, sigma, r, T, n_steps=52, n_paths=n_paths, seed=1)
w = rn_weights(m, times, s)

print(f"E[weight]          = {np.mean(w):.4f}   (should be 1)")
print(f"E[weight * S_T]    = {np.mean(w * s[:, -1]):.4f}   "
      f"(should be e^rT = {np.exp(r * T):.4f})")

# price an at-the-money call two ways
strike = 1.0
payoff = np.maximum(s[:, -1] - strike, 0.0)
price_reweighted = np.exp(-r * T) * np.mean(w * payoff)

_, s_star = gbm_ensemble(mu, sigma, r, T, n_steps=52, n_paths=n_paths,
                         seed=2, measure="hedge_neutral")
payoff_star = np.maximum(s_star[:, -1] - strike, 0.0)
price_direct = np.exp(-r * T) * np.mean(payoff_star)

from scipy.stats import norm

d1 = (np.log(1.0 / strike) + (r + sigma**2 / 2) * T) / (sigma * np.sqrt(T))
d2 = d1 - sigma * np.sqrt(T)
price_bs = norm.cdf(d1) - strike * np.exp(-r * T) * norm.cdf(d2)

print(f"\nATM call, physical paths + RN weights : {price_reweighted:.4f}")
print(f"ATM call, hedge-neutral paths         : {price_direct:.4f}")
print(f"ATM call, closed form                 : {price_bs:.4f}")
print("\nReweighting physical draws and simulating under the hedge-neutral "
      "measure agree to Monte Carlo error.")
