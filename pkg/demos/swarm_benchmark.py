"""
Swarm on a benchmark
====================

The optimizer is first exercised on the 30-dimensional sphere with the
default parameters (omega = 0.8, xi = 1, c1 = c2 = 1), once with one random
pair per particle and once with independent draws per component, and then
in constriction mode with c1 = c2 = 2.05.
"""

import numpy as np

from etef import SwarmConfig, cca_multiplier, run


def sphere(X):
    return np.sum(X * X, axis=1)


for granularity in ("scalar", "component"):
    best = []
    for seed in range(5):
        cfg = SwarmConfig(n_pop=50, max_iters=200, bounds=(-5.0, 5.0), seed=seed,
                          random_granularity=granularity)
        best.append(run(sphere, cfg, dim=30, vectorized=True).best_value)
    print(f"{granularity:>9} draws: best values {np.round(best, 4)}")

print(f"constriction multiplier K = {cca_multiplier(2.05, 2.05):.6f}")
cfg = SwarmConfig(n_pop=50, max_iters=200, mode="constriction", c1=2.05, c2=2.05,
                  bounds=(-5.0, 5.0), random_granularity="component")
res = run(sphere, cfg, dim=30, vectorized=True)
print(f"constriction mode: best {res.best_value:.3e}, redraws in last iteration {res.log[-1].redraws}")
