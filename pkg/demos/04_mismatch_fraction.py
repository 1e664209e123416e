"""
How many samples does a perturbed estimate mislabel?
====================================================

Count the samples from the second component that look closer to the first
estimated regressor. The fraction grows linearly with the distance of the
estimate from the truth.
"""

from mixedlr.bench import lemma1_sweep

result = lemma1_sweep(d=20, n=2000, radii=[1.0, 0.5, 0.25, 0.125], trials=50, seed=0)

print("   dist   mismatched fraction")
for r, frac in zip(result.dists, result.mean_fracs):
    print(f"{r:7.4f}   {frac:.4f}")

print(f"\nfit: fraction = {result.slope:.4f} * dist + {result.intercept:.1e}"
      f"   (R^2 = {result.r_squared:.4f})")
