"""
Noise mechanisms
================

Laplace, Gaussian, exponential, sparse-vector and sample-and-aggregate
releases on toy queries.
"""

# %%
import math

import numpy as np

from dpfair import mechanisms as mech

rng = np.random.default_rng(0)

# %%
# A counting query has sensitivity 1. At epsilon = 1 the Laplace noise has
# scale 1, so the spread of many releases should be close to sqrt(2).
draws = mech.laplace_mechanism(100.0, mech.COUNTING, 1.0, rng, size=100_000).value
print(f"laplace: mean {draws.mean():.3f}, std {draws.std():.3f} (expected {math.sqrt(2):.3f})")

# %%
# The neighbouring count 101 produces a shifted copy of the same density.
# The ratio of the two densities never leaves [e^-eps, e^eps].
x = np.linspace(90, 110, 9)
ratio = mech.laplace_density(x - 100, 1.0) / mech.laplace_density(x - 101, 1.0)
print("density ratios:", np.round(ratio, 3), "bound", round(math.e, 3))

# %%
sigma = mech.gaussian_sigma(1.0, 1e-5, 1.0)
g = mech.gaussian_mechanism(0.0, 1.0, mech.PrivacyBudget(1.0, 1e-5), rng, size=100_000).value
print(f"gaussian: sigma {sigma:.4f}, sample std {g.std():.4f}")

# %%
# The exponential mechanism picks a candidate with probability
# proportional to exp(eps * u / 2).
cands = [mech.Candidate(name, u) for name, u in [("a", 0.0), ("b", 0.5), ("c", 1.0), ("d", 2.0)]]
probs = mech.exponential_probabilities([c.utility for c in cands], 1.0, 1.0)
picks = [mech.exponential_mechanism(cands, 1.0, 1.0, rng).id for _ in range(20_000)]
for c, p in zip(cands, probs):
    print(f"  {c.id}: closed form {p:.3f}, observed {picks.count(c.id) / len(picks):.3f}")

# %%
# Sparse vector: report which queries cross a threshold, stopping after two.
answers = [3, 80, 5, 120, 95, 2]
print("sparse vector flags:", mech.sparse_vector(answers, 50.0, 1.0, 2, rng))

# %%
# Sample and aggregate: split the records into blocks, run the estimator on
# each block, clamp, average and add noise scaled to one block's influence.
data = rng.normal(loc=3.0, scale=1.0, size=2_000)
out = mech.sample_and_aggregate(data, 20, np.median, (0.0, 6.0), 1.0, rng)
print(f"private median estimate {out.value:.3f} (true sample median {np.median(data):.3f})")
