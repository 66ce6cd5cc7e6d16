"""Similarity-based and flip-based individual fairness measures.

"Similar individuals should get similar decisions" needs a distance on
feature space; no universally right one exists, so the distance is
pluggable. The default is Euclidean distance on z-score-standardised
features (categoricals one-hot encoded first), which at least removes
arbitrary units; raw Euclidean and user-weighted variants are available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import CATEGORICAL, Dataset, PredictionSet, SensitiveAttribute

EUCLIDEAN_STANDARDIZED = "euclidean_standardized"
EUCLIDEAN_RAW = "euclidean_raw"
USER_WEIGHTED = "user_weighted"


@dataclass(frozen=True)
class DistanceSpec:
    """How to measure distance between individuals in feature space.

    ``user_weighted`` applies one nonnegative weight per original feature
    (all one-hot columns of a categorical feature share its weight) on top
    of the standardised encoding.
    """

    kind: str = EUCLIDEAN_STANDARDIZED
    weights: tuple | None = None

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN_STANDARDIZED, EUCLIDEAN_RAW, USER_WEIGHTED):
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.kind == USER_WEIGHTED:
            if self.weights is None:
                raise ValueError("user_weighted distance needs weights")
            w = tuple(float(x) for x in self.weights)
            if any(x < 0 for x in w) or not any(x > 0 for x in w):
                raise ValueError("weights must be nonnegative with at least one positive")
            object.__setattr__(self, "weights", w)


def encode_for_distance(ds, spec, include_sensitive=False):
    """Feature matrix under a distance spec.

    Categorical features are one-hot encoded; standardisation (when the
    spec asks for it) uses per-column mean/std with zero-variance columns
    left centred. ``include_sensitive`` appends a one-hot of the group
    codes, for audits over the full feature-plus-attribute space.
    """
    if spec.kind == USER_WEIGHTED and len(spec.weights) != len(ds.features):
        raise ValueError(
            f"got {len(spec.weights)} weights for {len(ds.features)} features"
        )
    blocks, block_weights = [], []
    for j, col in enumerate(ds.features):
        if col.kind == CATEGORICAL:
            m = int(col.values.max(initial=0)) + 1
            block = np.zeros((ds.n, m))
            if ds.n:
                block[np.arange(ds.n), col.values] = 1.0
        else:
            block = col.values.reshape(-1, 1).astype(float)
        blocks.append(block)
        w = spec.weights[j] if spec.kind == USER_WEIGHTED else 1.0
        block_weights.extend([w] * block.shape[1])
    if include_sensitive:
        g = ds.sensitive.n_groups
        block = np.zeros((ds.n, max(g, 1)))
        if ds.n:
            block[np.arange(ds.n), ds.sensitive.values] = 1.0
        blocks.append(block)
        block_weights.extend([1.0] * block.shape[1])
    x = np.hstack(blocks) if blocks else np.zeros((ds.n, 0))
    if spec.kind in (EUCLIDEAN_STANDARDIZED, USER_WEIGHTED) and ds.n:
        mu = x.mean(axis=0)
        sd = x.std(axis=0)
        sd[sd == 0] = 1.0
        x = (x - mu) / sd
    return x * np.asarray(block_weights)


def _block_distances(x, rows):
    """Pairwise Euclidean distances of x[rows] against all of x.

    cdist computes exact coordinate differences, so identical rows get a
    distance of exactly zero; the all-ties-included neighbourhood rule
    depends on that.
    """
    return cdist(x[rows], x)


def consistency(ds, preds, k=5, dist=DistanceSpec()):
    """One minus the mean decision deviation from the k nearest neighbours.

    Neighbours are found on the non-sensitive features only. Ties at the
    k-th distance are all included, so the neighbourhood is deterministic
    without arbitrary ordering. Equals 1 for any constant decision rule.
    """
    if preds is None or preds.decisions is None:
        raise ValueError("consistency needs binary decisions")
    if preds.n != ds.n:
        raise ValueError(f"predictions cover {preds.n} rows, dataset has {ds.n}")
    n = ds.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}]")
    x = encode_for_distance(ds, dist)
    dec = preds.decisions.astype(float)
    total = 0.0
    for start in range(0, n, 512):
        rows = np.arange(start, min(start + 512, n))
        d = _block_distances(x, rows)
        d[np.arange(len(rows)), rows] = np.inf  # exclude self
        kth = np.partition(d, k - 1, axis=1)[:, k - 1]
        nb = d <= kth[:, None]
        means = (nb * dec).sum(axis=1) / nb.sum(axis=1)
        total += float(np.abs(dec[rows] - means).sum())
    return 1.0 - total / n


def similarity_weighted_disparity(ds, preds, dist=DistanceSpec()):
    """Cross-group decision differences weighted by feature similarity.

    Averages ``exp(-distance) * |decision difference|`` over all pairs with
    one member in each of the two groups; high values mean similar people
    on opposite sides of the attribute are treated differently. Requires a
    binary sensitive attribute (intersect or recode first).
    """
    if preds is None or preds.decisions is None:
        raise ValueError("similarity_weighted_disparity needs binary decisions")
    if preds.n != ds.n:
        raise ValueError(f"predictions cover {preds.n} rows, dataset has {ds.n}")
    if ds.sensitive.n_groups != 2:
        raise ValueError("binary sensitive attribute required; intersect/recode first")
    a = ds.sensitive.values
    i1 = np.flatnonzero(a == 1)
    i0 = np.flatnonzero(a == 0)
    if len(i1) == 0 or len(i0) == 0:
        raise ValueError("both groups must be nonempty")
    x = encode_for_distance(ds, dist)
    dec = preds.decisions.astype(float)
    total = 0.0
    for start in range(0, len(i1), 512):
        rows = i1[start : start + 512]
        d = cdist(x[rows], x[i0])
        dy = np.abs(dec[rows][:, None] - dec[i0][None, :])
        total += float((np.exp(-d) * dy).sum())
    return total / (len(i1) * len(i0))


@dataclass(frozen=True)
class FlipReport:
    """Outcome of re-scoring a dataset with the sensitive attribute flipped."""

    flip_rate: float
    flip_consistency: float

    def __post_init__(self):
        if abs(self.flip_rate + self.flip_consistency - 1.0) > 1e-12:
            raise ValueError("flip_rate and flip_consistency must sum to 1")


def flip_assessment(ds, model, flip_map=None):
    """Fraction of decisions that change when the sensitive attribute flips.

    ``model`` is any callable mapping a Dataset to binary decisions (an
    array or a PredictionSet); it must accept the sensitive attribute as an
    input, which attribute-blind models simply ignore. A binary attribute
    flips 0<->1 by default; multi-group attributes need an explicit
    permutation of the group codes.

    Both directions are reported: ``flip_rate`` is the mean absolute
    decision change, ``flip_consistency`` its complement (1 = no decision
    ever changes).
    """
    g = ds.sensitive.n_groups
    if flip_map is None:
        if g != 2:
            raise ValueError("non-binary attribute: pass an explicit flip_map")
        flip_map = np.array([1, 0])
    else:
        flip_map = np.asarray(flip_map, dtype=int)
        if sorted(flip_map.tolist()) != list(range(g)):
            raise ValueError("flip_map must be a permutation of the group codes")
    flipped = Dataset(
        ds.features,
        SensitiveAttribute(
            ds.sensitive.name, flip_map[ds.sensitive.values], ds.sensitive.group_labels
        ),
        ds.target,
        ds.target_name,
    )
    y0 = _decisions_of(model(ds))
    y1 = _decisions_of(model(flipped))
    rate = float(np.mean(np.abs(y0.astype(float) - y1.astype(float)))) if ds.n else 0.0
    return FlipReport(rate, 1.0 - rate)


def _decisions_of(out):
    if isinstance(out, PredictionSet):
        if out.decisions is None:
            raise ValueError("model returned scores only; flip assessment needs decisions")
        return out.decisions
    return np.asarray(out)


@dataclass(frozen=True)
class LipschitzReport:
    """Sampled audit of the Lipschitz-style similar-treatment condition."""

    constant: float
    pairs_examined: int
    violations: int
    violation_rate: float
    max_ratio: float
    worst_pairs: tuple
    zero_distance_witnesses: tuple

    def to_json_dict(self):
        return {
            "metric": "lipschitz_audit",
            "constant": self.constant,
            "pairs_examined": self.pairs_examined,
            "violations": self.violations,
            "violation_rate": self.violation_rate,
            "max_ratio": self.max_ratio,
            "worst_pairs": [list(p) for p in self.worst_pairs],
            "zero_distance_witnesses": [list(p) for p in self.zero_distance_witnesses],
        }


def lipschitz_audit(ds, preds, dist=DistanceSpec(), constant=1.0, max_pairs=10000, seed=0):
    """Count pairs whose outcome distance reaches ``constant`` times their
    feature distance.

    Distances are taken over the full feature-plus-attribute space; outcome
    distance is the absolute difference of decisions (or of scores when no
    decisions are present). Pairs at zero feature distance with differing
    outcomes cannot satisfy any finite constant and are reported separately
    as infinite-ratio witnesses. When ``max_pairs`` covers all n(n-1)/2
    pairs the audit is exhaustive; otherwise pairs are sampled uniformly
    (with replacement) under the given seed. Also reports the empirical
    minimal constant (the largest outcome/feature distance ratio seen).
    """
    if constant <= 0:
        raise ValueError("the Lipschitz constant must be positive")
    if preds is None:
        raise ValueError("lipschitz_audit needs decisions or scores")
    if preds.n != ds.n:
        raise ValueError(f"predictions cover {preds.n} rows, dataset has {ds.n}")
    outcome = preds.decisions if preds.decisions is not None else preds.scores
    outcome = np.asarray(outcome, dtype=float)
    n = ds.n
    if n < 2:
        raise ValueError("need at least two rows")
    x = encode_for_distance(ds, dist, include_sensitive=True)
    total_pairs = n * (n - 1) // 2
    if max_pairs >= total_pairs:
        ii, jj = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, size=max_pairs)
        jj = rng.integers(0, n - 1, size=max_pairs)
        jj = np.where(jj >= ii, jj + 1, jj)  # j != i, uniform over ordered pairs
    dx = np.sqrt(((x[ii] - x[jj]) ** 2).sum(axis=1))
    dy = np.abs(outcome[ii] - outcome[jj])
    zero = dx == 0
    witnesses = tuple(
        (int(i), int(j)) for i, j in zip(ii[zero & (dy > 0)], jj[zero & (dy > 0)])
    )
    if zero.all():
        raise ValueError("all sampled pairwise distances are zero")
    ii, jj, dx, dy = ii[~zero], jj[~zero], dx[~zero], dy[~zero]
    ratio = dy / dx
    viol = dy >= constant * dx
    order = np.argsort(ratio)[::-1][:5]
    worst = tuple(
        (int(ii[k]), int(jj[k]), float(dx[k]), float(dy[k]), float(ratio[k]))
        for k in order
        if ratio[k] > 0
    )
    return LipschitzReport(
        constant=float(constant),
        pairs_examined=int(len(dx)),
        violations=int(viol.sum()),
        violation_rate=float(viol.mean()),
        max_ratio=float(ratio.max()),
        worst_pairs=worst,
        zero_distance_witnesses=witnesses,
    )
