"""
Imperfect counters and false heralds
====================================

With finite efficiency or no photon-number resolution, the single-stage
gate sometimes heralds while an output path is empty. The closed-form
rates are printed next to exact enumeration.
"""

from photonsim import analysis, gates
from photonsim.detect import DetectorModel, response_distribution

# Two photons on one counter
for eta2 in (0.0, 0.5, 1.0):
    print(f"eta2={eta2}:", response_distribution(2, DetectorModel(0.9, eta2)))

print()
print(" eta  eta2   p_true   p_false(formula)  p_false(exact)")
for r in analysis.compare_sweep(1, [0.6, 0.9, 1.0], [0.0, 1.0]):
    print(f"{r.eta:4.1f} {r.eta2:5.1f} {r.p_true_sim:8.5f} {r.p_false:17.5f} {r.p_false_sim:15.5f}")

# The exact value factorizes per side of the gate
print("\nside count at (1, 0):", analysis.scheme1_false_rate_by_sides(1.0, 0.0))

# Dropping runs without one photon per output removes all errors
out = gates.run_scheme1(gates.QubitPairAmplitudes.basis("HH"), DetectorModel(1.0, 0.0))
kept = gates.postselect_final(out.conditional_output)
print("kept after postselection:", kept.total_weight(), "of the heralded runs")
