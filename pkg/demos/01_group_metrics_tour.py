"""Tour of the observational group-fairness criteria.

Builds a small credit-style dataset by hand, scores it with a simple rule,
and walks through acceptance-rate parity, error-rate parity, predictive
value parity and their score-based cousins. Ends with the classic
stratification surprise: per-stratum parity with an overall disparity.
"""

import json

import numpy as np

from fairaudit.data import Dataset, FeatureColumn, PredictionSet, SensitiveAttribute
from fairaudit import group_metrics as gm

rng = np.random.default_rng(42)
n = 2000

# two groups with different rating distributions, repayment driven by rating
group = rng.integers(0, 2, n)
rating = rng.normal(0.0, 1.0, n) + 0.6 * group
repaid = (rating + rng.normal(0.0, 1.2, n) > 0.2).astype(int)

ds = Dataset(
    features=(FeatureColumn("rating", "continuous", rating),),
    sensitive=SensitiveAttribute("group", group, ("blue", "orange")),
    target=repaid,
)

# lender policy: approve above a single global rating cutoff
score = 1.0 / (1.0 + np.exp(-2.0 * rating))
preds = PredictionSet(decisions=(rating > 0.3).astype(int), scores=score)

print("=== acceptance-rate parity (independence) ===")
dp = gm.demographic_parity(ds, preds)
print(json.dumps(dp.to_json_dict(), indent=2))
print(f"-> gap {dp.gap:.3f}, ratio {dp.ratio:.3f}: one global cutoff favours the")
print("   group whose ratings sit higher.\n")

print("=== error-rate parity (separation) ===")
eo = gm.equality_of_odds(ds, preds)
print("fpr per group:", eo.components["fpr"].groups)
print("fnr per group:", eo.components["fnr"].groups)
print(f"-> worst error-rate gap {eo.gap:.3f}\n")

print("=== predictive-value parity (sufficiency) ===")
suff = gm.sufficiency(ds, preds)
print("ppv per group:", suff.components["ppv"].groups)
print("npv per group:", suff.components["npv"].groups)
print(f"-> worst predictive-value gap {suff.gap:.3f}\n")

print("=== score-based criteria ===")
print("balance (positive class):", gm.balance_positive_class(ds, preds).groups)
print("balance (negative class):", gm.balance_negative_class(ds, preds).groups)
print("per-group AUC:", gm.auc_parity(ds, preds).groups)
cal = gm.calibration_within_groups(ds, preds, bins=10, min_count=30)
print("calibration error per group:", cal.report.groups)

print("\n=== conditional parity: the stratification surprise ===")
# construct decisions that are at parity inside each rating band yet
# unequal overall, because the bands have opposite group mixes
band = (rating > 0.3).astype(int)
banded = Dataset(
    features=(FeatureColumn("band", "categorical", band, ("low", "high")),),
    sensitive=ds.sensitive,
    target=ds.target,
)
accept_rate = {0: 0.1, 1: 0.8}
dec = np.array([rng.random() < accept_rate[b] for b in band], dtype=int)
ppreds = PredictionSet(decisions=dec)
cdp = gm.conditional_demographic_parity(banded, ppreds, "band", min_count=30)
overall = gm.demographic_parity(banded, ppreds)
print(f"overall acceptance gap: {overall.gap:.3f}")
print(f"max within-band gap:    {cdp.max_gap:.3f}")
print("-> the overall disparity is fully explained by the band variable;")
print("   whether that makes it fair depends on whether the band itself is fair.")
