"""The end-to-end mitigation comparison on the built-in synthetic data.

Trains five approaches per dataset (attribute-blind FTU, two suppression
variants, per-stratum and global threshold post-processing), then reports
dependence between decisions and the attribute, ranking quality, flip
consistency and the demographic-parity ratio on a held-out split.

Run with a larger n (15000) to reproduce the full-size table; this demo
uses a smaller draw to stay fast.
"""

from fairaudit.synth_experiment import run_experiment

report = run_experiment(seed=0, n=4000)

print(f"noise interpretation: {report.noise_interpretation}")
if report.calibration is not None:
    for interp, pair in report.calibration.measured.items():
        print(
            f"  calibration {interp}: U(Y_high,A)={pair[0]:.1f} "
            f"U(Y_low,A)={pair[1]:.1f} (reference {report.calibration.reference})"
        )
print()
print(report.to_csv())

print("How to read the table:")
print("- FTU keeps all features: best AUC, but its decisions stay strongly")
print("  associated with the attribute (low DP-ratio, high U).")
print("- Low-threshold suppression drops every attribute-correlated feature:")
print("  near-zero dependence, at a real cost in AUC.")
print("- DP post-processing equalises acceptance rates almost exactly, while")
print("  CDP equalises them only inside each stratum of X3.")
print("- Flip = 100.0 for the attribute-blind approaches is structural: the")
print("  attribute is simply not an input.")
