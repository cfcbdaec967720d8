"""
CNOT by conjugation, and loss on the inputs
===========================================

Rotating the target polarization by -45 and +45 degrees around the
controlled-phase gate gives a CNOT. A lossy input line only changes how
often the gate heralds a complete output.
"""

from photonsim import elements, gates
from photonsim.cli import truth_table
from photonsim.detect import DetectorModel
from photonsim.fock import Ensemble

for row in truth_table("cnot", DetectorModel.ideal()):
    print(row["input"], "->", gates.QUBIT_BASIS[abs(row["output"]).argmax()], f"p={row['p_accept']:.4f}")

q = gates.QubitPairAmplitudes((0.5, 0.5, 0.5, 0.5))
target = gates.ideal_output(q)
for t in (1.0, 0.9, 0.5):
    lossy = elements.spatial_loss("1a", t, Ensemble.pure(q.state()))
    out = gates.run_scheme2(lossy, ideal=None)
    kept = gates.postselect_final(out.conditional_output)
    f = sum(w * abs(gates.inner_product(target, s)) ** 2 for w, s in kept) / kept.total_weight()
    print(f"T={t}: p_accept {out.p_accept:.4f}, complete-output fidelity {f:.12f}")
