"""Exact simulation of heralded linear-optical gates on polarization qubits."""

from .fock import Ensemble, ModeId, Pol, PureState, H, V, basis_state, inner_product, superpose, tensor
from .elements import Element, LossChannel, beam_splitter, pbs, phase_modulator, wave_plate, apply, loss
from .detect import DetectorModel, ReportedPattern, classify, measure, response_distribution
from .gates import (
    GateOutcome,
    QubitPairAmplitudes,
    run_cnot,
    run_scheme1,
    run_scheme2,
    run_scheme3,
    postselect_final,
)

__version__ = "0.1.0"
