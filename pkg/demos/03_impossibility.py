"""Why you cannot have every parity at once.

The three observational criteria families (independence, separation,
sufficiency) are mutually exclusive away from trivial cases. This demo
measures all three gaps on one model, then uses the algebraic identities
to show how much demographic disparity is *forced* by exact error-rate
parity (or exact predictive-value parity) whenever base rates differ.
"""

import numpy as np

from fairaudit.data import Dataset, PredictionSet, SensitiveAttribute
from fairaudit.incompatibility import (
    check_sep_suff_exclusion,
    gaps,
    separation_implies_dp_gap,
    sufficiency_implies_dp_gap,
)

rng = np.random.default_rng(3)
n = 4000
group = rng.integers(0, 2, n)
# unequal base rates: 55% vs 35% positives
truth = (rng.random(n) < np.where(group == 1, 0.55, 0.35)).astype(int)
# a noisy predictor of the truth
dec = np.where(rng.random(n) < 0.25, 1 - truth, truth)

ds = Dataset(
    (),
    SensitiveAttribute("group", group, ("blue", "orange")),
    target=truth,
)
preds = PredictionSet(decisions=dec)

g = gaps(ds, preds)
print("criteria gaps on one model:")
print(f"  independence (acceptance) gap: {g.indep_gap:.3f}")
print(f"  separation (error-rate) gap:   {g.sep_gap:.3f}")
print(f"  sufficiency (pred-value) gap:  {g.suff_gap:.3f}")
print(f"  base-rate gap:                 {g.base_rate_gap:.3f}")
print(f"  usefulness U(truth; decision): {g.usefulness:.3f}")
print()

print("if error rates were exactly equal (tpr=0.75, fpr=0.25):")
forced = separation_implies_dp_gap(0.75, 0.25, [0.55, 0.35])
print(f"  the acceptance gap would necessarily be {forced:.3f}")
print("if predictive values were exactly equal (ppv=npv=0.8):")
forced = sufficiency_implies_dp_gap(0.8, 0.8, [0.55, 0.35])
print(f"  the acceptance gap would necessarily be {forced:.3f}")
print()

v = check_sep_suff_exclusion(ds, preds)
print("separation+sufficiency exclusion check:")
print(f"  verdict: {v.verdict}")
print(f"  (sep gap {v.sep_gap:.3f}, suff gap {v.suff_gap:.3f}, "
      f"base-rate gap {v.base_rate_gap:.3f}, {v.false_positives} false positives)")
print()
print("Escape hatches: equal base rates, or a predictor carrying no")
print("information (tpr = fpr), or a perfect one (no false positives).")
