"""fairaudit: fairness metrics, counterfactual audits and bias mitigation
for tabular binary classification.

Submodules:

- ``data``: dataset containers, CSV ingestion, splits, intersections
- ``group_metrics``: observational group criteria over decisions/scores
- ``individual_metrics``: consistency, similarity disparity, flips, Lipschitz
- ``info_theory``: entropy, mutual information, symmetric uncertainty
- ``incompatibility``: mutual-exclusion diagnostics of the group criteria
- ``causal``: structural causal models, interventions, counterfactual gaps
- ``modeling``: deterministic logistic classifier and mitigation strategies
- ``synth_experiment``: synthetic benchmark and the mitigation comparison
- ``cli``: command-line entry points
"""

from .data import (
    Dataset,
    FeatureColumn,
    PredictionSet,
    SensitiveAttribute,
    intersect_sensitive,
    load_csv,
    load_schema,
    quantile_bin,
    split,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FeatureColumn",
    "PredictionSet",
    "SensitiveAttribute",
    "intersect_sensitive",
    "load_csv",
    "load_schema",
    "quantile_bin",
    "split",
    "__version__",
]
