"""Walk the efficient frontier of a small equity universe.

We build a five-asset market, solve the minimum-variance problem for a
range of target returns, and print the resulting frontier together with
the two Lagrange multipliers.  An independent dense KKT solve confirms
each closed-form answer.
"""

import numpy as np

from mvlab import (
    StaticProblem,
    frontier_constants,
    frontier_variance,
    kkt_oracle,
    solve_static_mvo,
)

rng = np.random.default_rng(7)

n = 5
a = rng.normal(size=(n, n)) * 0.1
sigma = a @ a.T + 0.02 * np.eye(n)
mu = rng.normal(0.10, 0.04, size=n)

print("asset expected returns:", np.round(mu, 4))

fc = frontier_constants(StaticProblem(mu=mu, sigma=sigma, target=0.1))
vertex = fc.b / fc.a
print(f"frontier constants: a={fc.a:.3f} b={fc.b:.3f} c={fc.c:.3f}")
print(f"global minimum-variance return: {vertex:.4f} "
      f"(variance {1.0 / fc.a:.5f})\n")

print(f"{'target':>8} {'stdev':>8} {'lambda1':>9} {'lambda2':>9}  weights")
for target in np.linspace(vertex, vertex + 0.10, 6):
    p = StaticProblem(mu=mu, sigma=sigma, target=float(target))
    w = solve_static_mvo(p)
    var = frontier_variance(fc, float(target))
    # cross-check against the dense KKT system
    assert np.allclose(w.omega, kkt_oracle(p).omega, atol=1e-9)
    print(f"{target:8.4f} {np.sqrt(var):8.4f} {w.lambda1:9.4f} "
          f"{w.lambda2:9.4f}  {np.round(w.omega, 3)}")

print("\nVariance grows quadratically once the target return leaves the "
      "vertex; short positions appear as the target gets ambitious.")
