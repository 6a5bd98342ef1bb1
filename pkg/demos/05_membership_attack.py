"""
Membership inference from a released count
==========================================

An attacker who knows that carriers of a marker nearly always smoke reads
a published smoker count and updates their belief that the target is in
the database. Laplace noise caps that update at a factor of e^epsilon.
"""

# %%
import math

import numpy as np

from dpfair.attack import Scenario, smoking_demo

rng = np.random.default_rng(0)

# %%
# Nobody else in the database smokes, so an exact count gives the target away.
sharp = Scenario.strongly_separating()
rep = smoking_demo(sharp, "deterministic", rng=rng)
print(f"exact release: posterior {rep.posterior:.4f} from prior {rep.prior}")

# %%
# With a 30% background rate one extra smoker is much harder to spot.
rep = smoking_demo(Scenario(), "deterministic", rng=rng)
print(f"exact release, noisy background: posterior {rep.posterior:.4f}")

# %%
for eps in (0.1, 1.0, 5.0):
    rep = smoking_demo(sharp, "laplace", eps, rng=rng)
    print(f"laplace eps={eps}: posterior {rep.posterior:.4f}, "
          f"per-trial odds ratio up to {rep.max_trial_odds_ratio:.4f} (bound {math.exp(eps):.4f})")
