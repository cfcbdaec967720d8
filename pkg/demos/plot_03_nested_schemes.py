"""
Heralding the resource with a smaller gate
==========================================

Feeding halves of two Bell pairs through the single-stage gate, and keeping
only heralded runs, prepares the resource without wrong photon numbers.
Doing it once more makes the prepared resource independent of the inner
counters.
"""

from photonsim import gates
from photonsim.detect import DetectorModel

q = gates.QubitPairAmplitudes((0.5, 0.5, 0.5, 0.5))

for level, run in gates.SCHEMES.items():
    out = run(q)
    print(f"level {level}: ideal p_accept {out.p_accept:.4f}")

apd = DetectorModel(1.0, 0.0)
for level in (2, 3):
    res = gates.heralded_resource(level, (apd,) * (level - 1))
    print(f"level {level} resource with on/off inner counters: {len(res)} branches")

# The outer stage sees only its own efficiency
for eta in (0.5, 0.8, 1.0):
    out = gates.run_scheme3(q, DetectorModel(eta, 0.0))
    print(f"eta={eta}: p_accept {out.p_accept:.6f}  eta^4/4 {eta**4 / 4:.6f}  p_false {out.p_false}")
