"""
Alternating minimization on a two-component problem
====================================================

Draw a noiseless mixture of two linear models, start close to the truth and
watch the error collapse within a handful of rounds.
"""

import numpy as np

from mixedlr import AmConfig, boundary_radius, fit_convergence_exponent, perturbed_init
from mixedlr import random_truth, run_am, sample_instance

# %%
# Six samples per dimension is enough for exact recovery here.
d = 200
n = 6 * d
truth = random_truth(2, d, seed=1)
inst = sample_instance(truth, n, seed=1)
print(f"{n} samples in {d} dimensions, component sizes {np.bincount(inst.z)}")

# %%
# Start at a fixed distance from the truth. The radius scales with the gap
# between the two regressors and shrinks slowly as n grows.
radius = boundary_radius(truth, n)
init = perturbed_init(truth, radius, seed=1)

trace = run_am(inst, init, AmConfig(max_rounds=10))
for t, (err, obj) in enumerate(zip(trace.dist_to_truth, trace.loss_seq)):
    print(f"iter {t:2d}   dist {err:9.3e}   loss {obj:9.3e}")

# %%
# Each step roughly squares the error, so log(dist_{t+1}) against
# log(dist_t) has slope well above one.
fit = fit_convergence_exponent(trace.dist_to_truth)
print(f"slope {fit.slope:.2f} over {fit.points_used} pairs (R^2 = {fit.r_squared:.3f})")
