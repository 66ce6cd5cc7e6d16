"""Synthetic benchmark generator and the end-to-end mitigation comparison.

The generator is a five-node structural causal model: a fair-coin group
attribute ``A``; a continuous feature ``X1`` shifted by ``A/2``; an
independent continuous feature ``X2``; a binary feature
``X3 = 1[A + U3 >= 1]``; and a binary target thresholding
``X1 + 2*X2 + X3/2 (+ 4*A) + noise`` at its analytic population mean.
The ``4*A`` term is present for the "high" target (strong group
dependence) and absent for the "low" target. Continuous noise terms are
centred gaussians written as Norm(0, 1/2) in the source material, which
is ambiguous between std = 1/2 and variance = 1/2; the toolkit measures
both readings against the reference dependence values and picks the
closer one (see :func:`calibrate_noise_interpretation`).

The experiment harness trains five mitigation approaches per dataset
(FTU, two suppression variants, CDP and DP post-processing), evaluates
them on a held-out split, and reports dependence U(decisions; group),
ROC AUC, flip consistency and the demographic-parity ratio, all as
percentages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import causal
from .causal import Assignment, Dag, NoiseSpec, Scm
from .data import split
from .group_metrics import demographic_parity
from .individual_metrics import flip_assessment
from .info_theory import symmetric_uncertainty_codes
from .modeling import (
    CDP_POST,
    DP_POST,
    FTU,
    SUPPRESSION,
    MitigationSpec,
    fit_cdp_threshold,
    fit_dp_threshold,
    predict,
    train,
)
from .seeding import derive_seed

STD = "std"
VARIANCE = "variance"
DEFAULT_NOISE_INTERPRETATION = STD  # what calibrate_noise_interpretation selects

# external benchmark reference for U(Y_high, A) and U(Y_low, A), in percent
REFERENCE_U = (93.1, 20.9)

APPROACHES = ("FTU", "Supp_l", "Supp_h", "CDP", "DP")


@dataclass(frozen=True)
class SynthConfig:
    """Settings of one synthetic dataset draw."""

    n: int = 15000
    target: str = "high"
    noise_scale_interpretation: str = STD
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.target not in ("high", "low"):
            raise ValueError("target must be 'high' or 'low'")
        if self.noise_scale_interpretation not in (STD, VARIANCE):
            raise ValueError("noise interpretation must be 'std' or 'variance'")


def _sigma(interpretation):
    return 0.5 if interpretation == STD else math.sqrt(0.5)


def build_synth_scm(cfg):
    """The generator as a structural causal model.

    The target's cutoff is the analytic population mean of the inner
    linear expression (0.25 from X1, 0.375 from X3/2, plus 2 when the 4*A
    term is present), so targets are deterministic functions of the draw
    and never depend on sample noise.
    """
    sigma = _sigma(cfg.noise_scale_interpretation)
    high = cfg.target == "high"
    y_coeffs = {"X1": 1.0, "X2": 2.0, "X3": 0.5}
    if high:
        y_coeffs["A"] = 4.0
    e_zeta = 0.25 + 0.375 + (2.0 if high else 0.0)
    edges = [("A", "X1"), ("A", "X3"), ("X1", "Y"), ("X2", "Y"), ("X3", "Y")]
    if high:
        edges.append(("A", "Y"))
    # node order is topological; Y's noise is the zeta disturbance
    dag = Dag(("A", "X1", "X2", "X3", "Y"), tuple(edges))
    assignments = {
        "A": Assignment(causal.EXOGENOUS),
        "X1": Assignment(causal.LINEAR, coeffs={"A": 0.5}),
        "X2": Assignment(causal.EXOGENOUS),
        "X3": Assignment(causal.THRESHOLD, coeffs={"A": 1.0}, cutoff=1.0),
        "Y": Assignment(causal.THRESHOLD, coeffs=y_coeffs, cutoff=e_zeta, strict=True),
    }
    noises = {
        "A": NoiseSpec.bernoulli(0.5),
        "X1": NoiseSpec.gaussian(0.0, sigma),
        "X2": NoiseSpec.gaussian(0.0, sigma),
        "X3": NoiseSpec.bernoulli(0.5),
        "Y": NoiseSpec.gaussian(0.0, sigma),
    }
    return Scm(dag, assignments, noises, sensitive="A", target="Y")


def generate(cfg):
    """Sample a synthetic dataset; the generator *is* the causal model."""
    return causal.sample(build_synth_scm(cfg), cfg.n, cfg.seed)


def bundled_scm(target):
    """Load one of the two bundled generator models ('high' or 'low')."""
    from importlib import resources

    if target not in ("high", "low"):
        raise ValueError("target must be 'high' or 'low'")
    ref = resources.files("fairaudit").joinpath(f"scm_models/synthetic_{target}.json")
    return causal.Scm.from_json(ref.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class CalibrationResult:
    """Which noise reading better matches the reference dependence values."""

    chosen: str
    measured: dict  # interpretation -> (U_high, U_low) in percent
    reference: tuple = REFERENCE_U

    def to_json_dict(self):
        return {
            "chosen": self.chosen,
            "measured": {k: list(v) for k, v in self.measured.items()},
            "reference": list(self.reference),
        }


def _u_target_attr(ds):
    return 100.0 * symmetric_uncertainty_codes(ds.target, ds.sensitive.values)


def calibrate_noise_interpretation(seed=0, n=15000):
    """Simulate both readings of the gaussian scale and keep the closer one.

    Distance is the max-norm between the measured (U_high, U_low) pair and
    the reference pair; ties resolve to 'std'. Deterministic given the seed.
    """
    measured = {}
    for interp in (STD, VARIANCE):
        us = []
        for target in ("high", "low"):
            cfg = SynthConfig(
                n=n,
                target=target,
                noise_scale_interpretation=interp,
                seed=derive_seed(seed, f"calibrate:{interp}:{target}"),
            )
            us.append(_u_target_attr(generate(cfg)))
        measured[interp] = tuple(us)
    dist = {
        k: max(abs(v[0] - REFERENCE_U[0]), abs(v[1] - REFERENCE_U[1]))
        for k, v in measured.items()
    }
    chosen = STD if dist[STD] <= dist[VARIANCE] else VARIANCE
    return CalibrationResult(chosen, measured)


@dataclass(frozen=True)
class ApproachMetrics:
    """One table cell: all values in percent."""

    u_pred_attr: float
    auc: float
    flip_consistency: float
    flip_rate: float
    dp_ratio: float
    auc_basis: str  # "scores" or "decisions"

    def to_json_dict(self):
        return {
            "U(pred;attr)": self.u_pred_attr,
            "ROC AUC": self.auc,
            "Flip": self.flip_consistency,
            "flip_rate": self.flip_rate,
            "DP-ratio": self.dp_ratio,
            "auc_basis": self.auc_basis,
        }


@dataclass(frozen=True)
class DatasetBlock:
    name: str
    u_target_attr: float
    approaches: dict

    def to_json_dict(self):
        return {
            "U(target;attr)": self.u_target_attr,
            "approaches": {k: v.to_json_dict() for k, v in self.approaches.items()},
        }


@dataclass(frozen=True)
class ExperimentReport:
    """Table of metric percentages per (dataset, approach)."""

    blocks: tuple
    seed: int
    split_fraction: float
    noise_interpretation: str
    calibration: CalibrationResult | None
    notes: tuple

    def to_json_dict(self):
        return {
            "seed": self.seed,
            "split_fraction": self.split_fraction,
            "noise_interpretation": self.noise_interpretation,
            "calibration": None
            if self.calibration is None
            else self.calibration.to_json_dict(),
            "notes": list(self.notes),
            "datasets": {b.name: b.to_json_dict() for b in self.blocks},
        }

    def to_csv(self):
        """One block per dataset: metric rows, approach columns, one decimal."""
        names = list(self.blocks[0].approaches) if self.blocks else []
        lines = ["dataset,metric," + ",".join(names)]
        for b in self.blocks:
            pad = "," * (len(names) - 1)
            lines.append(f"{b.name},U(Y;A),{b.u_target_attr:.1f}{pad}")
            for metric, attr in (
                ("U(Yhat;A)", "u_pred_attr"),
                ("ROC AUC", "auc"),
                ("Flip", "flip_consistency"),
                ("DP-ratio", "dp_ratio"),
            ):
                cells = ",".join(
                    f"{getattr(b.approaches[a], attr):.1f}" for a in names
                )
                lines.append(f"{b.name},{metric},{cells}")
        return "\n".join(lines) + "\n"


def approach_spec(approach, conditioning=None, synthetic=True):
    """Mitigation settings per approach, mirroring the benchmark recipe.

    The low suppression threshold (5%) drops every group-correlated
    feature. The high variant keeps more: on the synthetic data it is
    pinned to drop exactly X1 (a pure threshold cannot reproduce that
    split, since X3 correlates with the attribute at least as strongly as
    X1 under either noise reading); on other data it uses a 10% threshold.
    """
    if approach == "FTU":
        return MitigationSpec(FTU)
    if approach == "Supp_l":
        return MitigationSpec(SUPPRESSION, threshold=0.05)
    if approach == "Supp_h":
        if synthetic:
            return MitigationSpec(SUPPRESSION, threshold=0.66, drop_features=("X1",))
        return MitigationSpec(SUPPRESSION, threshold=0.10)
    if approach == "CDP":
        if conditioning is None:
            raise ValueError("the CDP approach needs a conditioning column")
        return MitigationSpec(CDP_POST, conditioning=conditioning)
    if approach == "DP":
        return MitigationSpec(DP_POST)
    raise ValueError(f"unknown approach {approach!r}")


def _auc_pooled(y, s):
    from scipy.stats import rankdata

    npos = int(np.sum(y))
    nneg = len(y) - npos
    if npos == 0 or nneg == 0:
        return float("nan")
    r = rankdata(s)
    return float((r[np.asarray(y) == 1].sum() - npos * (npos + 1) / 2) / (npos * nneg))


def evaluate_approach(name, train_ds, test_ds, conditioning, seed, synthetic=True):
    """Train one approach and measure the four table metrics on the test part."""
    spec = approach_spec(name, conditioning, synthetic)
    model = train(train_ds, spec, seed=derive_seed(seed, f"train:{name}"))
    policy = None
    if spec.strategy == DP_POST:
        policy = fit_dp_threshold(train_ds, model)
    elif spec.strategy == CDP_POST:
        policy = fit_cdp_threshold(train_ds, model, conditioning)
    preds = predict(model, test_ds, policy)
    a_codes = test_ds.sensitive.values
    u = 100.0 * symmetric_uncertainty_codes(preds.decisions, a_codes)
    if policy is None:
        auc, basis = _auc_pooled(test_ds.target, preds.scores), "scores"
    else:
        # post-processing emits decisions, not scores: rank on the final output
        auc, basis = _auc_pooled(test_ds.target, preds.decisions), "decisions"
    flip = flip_assessment(test_ds, lambda d: predict(model, d, policy))
    dp = demographic_parity(test_ds, preds)
    ratio = 0.0 if dp.ratio is None else dp.ratio
    return ApproachMetrics(
        u_pred_attr=u,
        auc=100.0 * auc,
        flip_consistency=100.0 * flip.flip_consistency,
        flip_rate=100.0 * flip.flip_rate,
        dp_ratio=100.0 * ratio,
        auc_basis=basis,
    )


def run_experiment(
    datasets=None,
    approaches=APPROACHES,
    seed=0,
    split_fraction=0.7,
    noise_interpretation=None,
    n=15000,
):
    """Full mitigation comparison; returns an :class:`ExperimentReport`.

    ``datasets`` is a sequence of ``(name, Dataset, cdp_conditioning)``
    triples; by default the two built-in synthetic datasets are generated
    (under the calibrated noise reading unless one is forced) and
    conditioned on X3 for CDP. All randomness derives from ``seed``.
    """
    calibration = None
    notes = [
        "AUC uses model scores for FTU/suppression and final decisions for "
        "post-processed approaches (their output is binary).",
        "Flip is reported as flip consistency in percent: 100 = decisions "
        "never change when the sensitive attribute is flipped.",
        "Metrics are computed on a held-out split.",
    ]
    if datasets is None:
        if noise_interpretation is None:
            calibration = calibrate_noise_interpretation(derive_seed(seed, "calibration"))
            noise_interpretation = calibration.chosen
        else:
            notes.append(f"noise interpretation forced to {noise_interpretation!r}")
        datasets = []
        for label, target in (("synthetic#1", "high"), ("synthetic#2", "low")):
            cfg = SynthConfig(
                n=n,
                target=target,
                noise_scale_interpretation=noise_interpretation,
                seed=derive_seed(seed, f"generate:{target}"),
            )
            datasets.append((label, generate(cfg), "X3"))
    elif noise_interpretation is None:
        noise_interpretation = DEFAULT_NOISE_INTERPRETATION
    blocks = []
    for name, ds, conditioning in datasets:
        synthetic = name.startswith("synthetic")
        train_ds, test_ds = split(
            ds, fraction=split_fraction, seed=derive_seed(seed, f"split:{name}")
        )
        cells = {}
        for approach in approaches:
            cells[approach] = evaluate_approach(
                approach,
                train_ds,
                test_ds,
                conditioning,
                derive_seed(seed, f"cell:{name}:{approach}"),
                synthetic,
            )
        blocks.append(DatasetBlock(name, _u_target_attr(ds), cells))
    return ExperimentReport(
        tuple(blocks),
        seed,
        split_fraction,
        noise_interpretation,
        calibration,
        tuple(notes),
    )
