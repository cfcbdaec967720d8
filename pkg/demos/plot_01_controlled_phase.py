"""
A heralded controlled-phase gate from linear optics
===================================================

Two polarization qubits on paths 1a and 1b meet a prepared four-mode
resource on two 50/50 beam splitters. Four photon counters herald success
and a sign correction is fed forward onto the outputs 8a and 8b.
"""

import numpy as np

from photonsim import gates, fock
from photonsim.detect import DetectorModel

# The resource comes out of wave plates and two polarizing beam splitters.
# Only a quarter of it is the useful four-mode state; the rest has the
# wrong photon numbers on 4a/4b.
res = gates.passive_resource()
print("useful sector weight:", gates.beta_sector(res).norm2())
print("photons on 4a:", fock.total_number_distribution(res, fock.modes_of("4a")))

# Sign corrections found by searching over {0, pi} phases per side
print("feed-forward table:", {k.value: v for k, v in gates.default_table().items()})

# Run the gate on a random input with ideal detectors
q = gates.QubitPairAmplitudes.random(np.random.default_rng(0))
out = gates.run_scheme1(q)
print("p_accept:", out.p_accept)
print("heralding patterns:", len(out.accepted()))

amps = gates.qubit_amplitudes(out.conditional_output.branches[0][1], "8a", "8b")
phase = np.vdot(np.array([-1, 1, 1, 1]) * q.alpha, amps)
print("input   :", np.round(q.alpha, 4))
print("output  :", np.round(amps / phase, 4))  # VV picks up the sign
