"""
Noise and the shape of the convergence curve
============================================

With noisy responses the iterates stop at some distance from the truth, so
progress is measured against the last iterate instead. The noisy runs still
lock onto their final labelling within a few rounds. The step just before
that point is larger than in the noiseless case, since samples near the
decision boundary are the last to settle and their residuals are dominated
by noise. That one step pulls the fitted slope down.
"""

import numpy as np

from mixedlr import AmConfig, boundary_radius, fit_convergence_exponent, optimization_error_seq
from mixedlr import perturbed_init, random_truth, run_am, sample_instance

d = 250
for sigma in (0.0, 0.1, 0.2):
    curves = []
    for trial in range(10):
        truth = random_truth(2, d, seed=(trial,), sigma=sigma)
        inst = sample_instance(truth, 6 * d, seed=(trial,))
        init = perturbed_init(truth, boundary_radius(truth, inst.n), seed=(trial,))
        trace = run_am(inst, init, AmConfig(max_rounds=50, tol=0.0))
        curves.append(optimization_error_seq(trace))
    mean = np.mean(curves, axis=0)
    fit = fit_convergence_exponent(mean)
    head = " ".join(f"{v:.1e}" for v in mean[:8])
    print(f"sigma={sigma}: {head} ...  slope {fit.slope:.2f} ({fit.points_used} pairs)")
