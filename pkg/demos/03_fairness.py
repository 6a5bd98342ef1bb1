"""
Group fairness metrics
======================

Per-group confusion counts, the demographic-parity gap and the
equalized-odds gap on a small hand-made dataset.
"""

# %%
import numpy as np

from dpfair.fairness import LabeledDataset, confusion_by_group, demographic_parity_gap, equalized_odds_gap

labels = np.array([1, 0, 0, 1, 0, 1, 1, 0, 0, 1])
groups = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1])
preds = np.array([1, 1, 0, 1, 0, 1, 0, 0, 0, 0])
data = LabeledDataset(np.zeros((10, 1)), labels, groups)

# %%
conf = confusion_by_group(preds, data)
for g in (0, 1):
    c = conf[g]
    print(f"group {g}: tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn} "
          f"positive rate {c.positive_rate:.2f} fpr {c.fpr:.2f} tpr {c.tpr:.2f}")

# %%
print(f"demographic parity gap {demographic_parity_gap(preds, data):.3f}")
print(f"equalized odds gap     {equalized_odds_gap(preds, data):.3f}")
