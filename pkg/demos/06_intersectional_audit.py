"""Intersectional auditing: parity per attribute can hide subgroup bias.

Decisions below are constructed so that acceptance rates are equal across
gender AND equal across age band, yet one intersection (young women, old
men) is systematically disfavoured. Auditing each attribute alone misses
it; auditing the composite attribute exposes it.
"""

import numpy as np

from fairaudit.data import Dataset, PredictionSet, SensitiveAttribute, intersect_sensitive
from fairaudit.group_metrics import demographic_parity

rng = np.random.default_rng(11)
n = 8000
gender = rng.integers(0, 2, n)   # 0 = f, 1 = m
age = rng.integers(0, 2, n)      # 0 = young, 1 = old

# accept 60% of (f, old) and (m, young), 20% of the other two cells:
# each attribute's marginal acceptance is 40% on both sides
favoured = (gender == 0) & (age == 1) | (gender == 1) & (age == 0)
dec = np.where(favoured, rng.random(n) < 0.6, rng.random(n) < 0.2).astype(int)

g_attr = SensitiveAttribute("gender", gender, ("f", "m"))
a_attr = SensitiveAttribute("age", age, ("young", "old"))
preds = PredictionSet(decisions=dec)

for attr in (g_attr, a_attr):
    ds = Dataset((), attr)
    rep = demographic_parity(ds, preds)
    print(f"acceptance by {attr.name}: "
          + ", ".join(f"{k}={v:.3f}" for k, v in rep.groups.items())
          + f"  (gap {rep.gap:.3f})")

both = intersect_sensitive([g_attr, a_attr])
rep = demographic_parity(Dataset((), both), preds)
print(f"\nacceptance by {both.name}:")
for label, value in rep.groups.items():
    print(f"  {label:10s} {value:.3f}")
print(f"intersectional gap: {rep.gap:.3f}, ratio: {rep.ratio:.3f}")
print()
print("Each attribute audits clean on its own; the cross-classified audit")
print("shows a three-fold acceptance difference between cells. With many")
print("attributes the cells multiply and thin out fast, which is why the")
print("composite attribute keeps only the occupied cells and stratified")
print("reports flag small cells instead of trusting their estimates.")
