"""
Privacy, utility and fairness frontier
======================================

Closed-form bounds, the critical sample size and the Pareto front of a
small (epsilon, n) grid.
"""

# %%
from dpfair import frontier

# Noise relative to sampling error for a subgroup proportion
for n_p in (100, 1_000, 10_000):
    s, d, r = frontier.se_ratio(0.5, n_p, 1.0)
    print(f"n_p={n_p:>6}: sampling se {s:.4f}, privacy se {d:.5f}, ratio {r:.3f}")

# %%
# Estimation error for a large and a small group at the same epsilon
big, small = frontier.group_noise_se(5000, 1.0), frontier.group_noise_se(500, 1.0)
print(f"group se: {big:.4f} vs {small:.4f}, the small group is {small / big:.2f}x noisier")

# %%
spec = frontier.FeasibilitySpec(u0=0.9, f_target=0.05, d=10, p=0.1)
for eps in (0.5, 1.0, 2.0):
    print(f"eps={eps}: need n >= {frontier.critical_sample_size(spec, eps):,.0f}")

# %%
points = frontier.sweep([0.5, 1.0, 2.0], [1_000, 10_000, 100_000], spec)
front = frontier.pareto_front(points)
print(frontier.sweep_csv(points))
print(f"{len(front)} of {len(points)} grid cells are Pareto-optimal")
