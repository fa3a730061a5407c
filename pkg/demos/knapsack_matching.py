"""How many vertices can be matched within a cost budget?

Sweeps the budget from 10% to 100% of the perfect-matching cost and shows
the estimated max matching size against the exact parametric answer.  The
decision rule behind the estimate: an estimator run on the window
(xi - gamma/4, xi) returning a value within budget certifies that a
size-(xi - gamma/4) n matching fits.
"""

import numpy as np

from submatch import baseline
from submatch.generators import uniform_instance
from submatch.mcm import Backend
from submatch.pipeline import max_matching_under_budget

n = 80
gamma = 0.1
inst = uniform_instance(n, seed=12)
dense = inst.cost.peek_block(np.arange(n), np.arange(n))
sweep = baseline.min_weight_matching_sweep(dense)
perfect = sweep[n]
print(f"n = {n}, perfect-matching cost = {perfect:.3f}, gamma = {gamma}\n")
print(f"{'budget':>8}  {'exact max size':>14}  {'estimate':>9}")

for frac in (0.1, 0.25, 0.5, 0.75, 1.0):
    budget = frac * perfect
    exact = int(np.max(np.nonzero(sweep <= budget)[0]))
    s_hat = max_matching_under_budget(inst, budget, gamma,
                                      Backend.exact(seed=12), seed=12)
    print(f"{budget:8.3f}  {exact:14d}  {s_hat:9.1f}")

print(f"\n(tolerance: +- gamma * n = {gamma * n:.0f} vertices)")
