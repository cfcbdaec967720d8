"""Heralded controlled-phase and controlled-NOT gates on polarization qubits.

Mode labels follow the layout of the controlled-phase circuit: qubit inputs
on paths ``1a``/``1b``, ancilla photons on ``2a``/``2b``, the entangled pair
on ``3a``/``3b``, the prepared resource on ``4a``/``4b`` (measured side) and
``5a``/``5b`` (kept side), detectors on ``6a``/``7a``/``6b``/``7b`` and
outputs on ``8a``/``8b``. Qubit convention: ``|0> = |H>``, ``|1> = |V>``.

Scheme 1 prepares its resource passively and only succeeds when the resource
happens to carry one photon per side. Schemes 2 and 3 prepare the resource
by running the previous scheme on halves of two entangled pairs and keep it
only when that inner run heralds success.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .detect import (
    AcceptClass,
    DetectorModel,
    Projection,
    ReportedPattern,
    Side,
    SideClass,
    classify,
    default_sides,
    detector_channels,
    measure_projection,
    project,
)
from .elements import Element, apply, beam_splitter, pbs, phase_modulator, rotator, wave_plate
from .fock import (
    Ensemble,
    H,
    ModeId,
    PureState,
    V,
    basis_state,
    ensemble_tensor,
    fock_basis,
    inner_product,
    relabel,
    split_by_counts,
    superpose,
    tensor,
)

QUBIT_BASIS = ("VV", "VH", "HV", "HH")

CZ = np.diag([-1.0, 1.0, 1.0, 1.0]).astype(complex)
# control a, target b, rows/columns in QUBIT_BASIS order
CNOT = np.array(
    [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=complex
)
IDEAL_MAPS = {"cz": CZ, "cnot": CNOT}

PhaseTable = Mapping[SideClass, tuple[float, float]]


# ---------------------------------------------------------------- sources

def singlet(x: str, y: str) -> PureState:
    """(|H>_x |V>_y - |V>_x |H>_y) / sqrt2"""
    r = 1 / math.sqrt(2)
    return superpose([(r, basis_state({H(x): 1, V(y): 1})), (-r, basis_state({V(x): 1, H(y): 1}))])


def phi_minus(x: str, y: str) -> PureState:
    """(|H>_x |H>_y - |V>_x |V>_y) / sqrt2"""
    r = 1 / math.sqrt(2)
    return superpose([(r, basis_state({H(x): 1, H(y): 1})), (-r, basis_state({V(x): 1, V(y): 1}))])


@dataclass(frozen=True)
class BellSource:
    kind: str  # "singlet" or "phi_minus"
    modes: tuple[str, str]

    def state(self) -> PureState:
        if self.kind == "singlet":
            return singlet(*self.modes)
        if self.kind == "phi_minus":
            return phi_minus(*self.modes)
        raise ValueError(f"unknown Bell source kind {self.kind!r}")


@dataclass(frozen=True)
class QubitPairAmplitudes:
    """Amplitudes on |VV>, |VH>, |HV>, |HH> of paths (1a, 1b)."""

    alpha: tuple[complex, complex, complex, complex]

    def __post_init__(self):
        a = tuple(complex(x) for x in self.alpha)
        if len(a) != 4:
            raise ValueError("need exactly four amplitudes")
        if abs(sum(abs(x) ** 2 for x in a) - 1) > 1e-12:
            raise ValueError("qubit amplitudes must be normalized")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def basis(cls, label: str) -> "QubitPairAmplitudes":
        a = [0, 0, 0, 0]
        a[QUBIT_BASIS.index(label)] = 1
        return cls(tuple(a))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "QubitPairAmplitudes":
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        return cls(tuple(v / np.linalg.norm(v)))

    def state(self, a: str = "1a", b: str = "1b") -> PureState:
        return qubit_state(self.alpha, a, b)


def qubit_state(alpha: Sequence[complex], a: str, b: str) -> PureState:
    kets = [basis_state({_mode(pa, a): 1, _mode(pb, b): 1}) for pa, pb in QUBIT_BASIS]
    return superpose(zip(alpha, kets))


def _mode(pol: str, spatial: str) -> ModeId:
    return H(spatial) if pol == "H" else V(spatial)


def qubit_amplitudes(s: PureState, a: str, b: str) -> np.ndarray:
    """Amplitudes of ``s`` on the one-photon-per-path sector (no spectators)."""
    return np.array([s.amplitude({_mode(pa, a): 1, _mode(pb, b): 1}) for pa, pb in QUBIT_BASIS])


def apply_logical(s: PureState, gate: np.ndarray, ins: tuple[str, str], outs: tuple[str, str]) -> PureState:
    """Apply a two-qubit matrix to the qubit sector of ``s`` and move it to ``outs``.

    Terms without exactly one photon on each input path are dropped, so the
    result is the ideal output of a gate that only acts on complete inputs.
    Other modes ride along unchanged.
    """
    in_modes = [H(ins[0]), V(ins[0]), H(ins[1]), V(ins[1])]
    parts = split_by_counts(s, in_modes)
    index = {}
    for i, (pa, pb) in enumerate(QUBIT_BASIS):
        counts = {H(ins[0]): pa == "H", V(ins[0]): pa == "V", H(ins[1]): pb == "H", V(ins[1]): pb == "V"}
        index[tuple(int(counts[m]) for m in sorted(in_modes))] = i
    terms = []
    for key, rest in parts.items():
        i = index.get(key)
        if i is None:
            continue
        for j, (pa, pb) in enumerate(QUBIT_BASIS):
            g = gate[j, i]
            if g != 0:
                terms.append((g, tensor(basis_state({_mode(pa, outs[0]): 1, _mode(pb, outs[1]): 1}), rest)))
    return superpose(terms)


def _as_ensemble(inp, prefix: str = "") -> Ensemble:
    if isinstance(inp, QubitPairAmplitudes):
        return Ensemble.pure(inp.state(prefix + "1a", prefix + "1b"))
    if isinstance(inp, PureState):
        return Ensemble.pure(inp)
    if isinstance(inp, Ensemble):
        return inp
    if isinstance(inp, (tuple, list)) and len(inp) == 4:
        return Ensemble.pure(QubitPairAmplitudes(tuple(inp)).state(prefix + "1a", prefix + "1b"))
    raise TypeError(f"unsupported gate input {type(inp).__name__}")


def _check_input(e: Ensemble, prefix: str) -> None:
    ins = {prefix + "1a", prefix + "1b"}
    reserved = {prefix + f"{k}{x}" for k in range(2, 9) for x in "ab"}
    for _, s in e:
        for basis in s.terms:
            per_path: dict[str, int] = {}
            for m, n in basis:
                if m.spatial in reserved:
                    raise ValueError(f"input occupies internal path {m.spatial}")
                if m.spatial in ins:
                    per_path[m.spatial] = per_path.get(m.spatial, 0) + n
            if any(n > 1 for n in per_path.values()):
                raise ValueError("gate inputs carry at most one photon per input path")


# ---------------------------------------------------------------- resource

def resource_elements(prefix: str = "") -> list[Element]:
    p = prefix
    return [
        wave_plate(p + "3a", math.radians(45)),  # WP5
        wave_plate(p + "2a", math.radians(45)),  # WP2
        wave_plate(p + "2b", math.radians(45)),  # WP3
        pbs(p + "2a", p + "3a", p + "4a", p + "5a"),  # PBS1
        pbs(p + "2b", p + "3b", p + "4b", p + "5b"),  # PBS2
    ]


def passive_resource(prefix: str = "") -> PureState:
    """Two H ancillas plus a singlet, through the wave plates and PBSs."""
    p = prefix
    s = tensor(basis_state({H(p + "2a"): 1, H(p + "2b"): 1}), singlet(p + "3a", p + "3b"))
    for e in resource_elements(prefix):
        s = apply(e, s)
    return s


def psi_state(prefix: str = "") -> PureState:
    """Normalized one-photon-per-path resource on (4a, 4b, 5a, 5b)."""
    p = prefix
    signs = {"VVVV": 1, "HVHV": 1, "VHVH": 1, "HHHH": -1}
    terms = []
    for pols, sign in signs.items():
        occ = {_mode(pol, p + path): 1 for pol, path in zip(pols, ("4a", "4b", "5a", "5b"))}
        terms.append((sign / 2, basis_state(occ)))
    return superpose(terms)


def beta_sector(s: PureState, prefix: str = "") -> PureState:
    """Component with exactly one photon on each of paths 4a and 4b."""
    p = prefix
    modes = [H(p + "4a"), V(p + "4a"), H(p + "4b"), V(p + "4b")]
    keep = []
    for counts, part in split_by_counts(s, modes).items():
        ordered = dict(zip(sorted(modes), counts))
        if ordered[H(p + "4a")] + ordered[V(p + "4a")] == 1 and ordered[H(p + "4b")] + ordered[V(p + "4b")] == 1:
            occ = {m: n for m, n in ordered.items() if n}
            keep.append((1.0, tensor(basis_state(occ), part)))
    return superpose(keep)


# ---------------------------------------------------------------- feed-forward

IDENTITY_TABLE: PhaseTable = {c: (0.0, 0.0) for c in SideClass if c is not SideClass.NA}


def stage_elements(prefix: str = "", splitter: Callable[..., Element] = beam_splitter) -> list[Element]:
    p = prefix
    return [
        wave_plate(p + "1a", math.radians(90)),  # WP1
        wave_plate(p + "1b", math.radians(90)),  # WP4
        splitter(p + "1a", p + "4a", p + "6a", p + "7a"),  # BS1
        splitter(p + "1b", p + "4b", p + "6b", p + "7b"),  # BS2
    ]


def correction(cls: AcceptClass, table: PhaseTable, prefix: str = "") -> list[Element]:
    """Phase modulators PM1/PM2 moving paths 5a/5b onto 8a/8b."""
    p = prefix
    out = []
    for side in ("a", "b"):
        ph, pv = table[cls.side(side)]
        out.append(phase_modulator(p + "5" + side, ph, pv, out=p + "8" + side))
    return out


def _same_up_to_phase(a: PureState, b: PureState, tol: float) -> bool:
    na, nb = a.norm(), b.norm()
    if na == 0 or nb == 0:
        return na == nb
    return abs(abs(inner_product(a, b)) / (na * nb) - 1) < tol


def feed_forward_table(splitter: Callable[..., Element] = beam_splitter, tol: float = 1e-10) -> dict[SideClass, tuple[float, float]]:
    """Derive the PM settings that make every heralded branch identical.

    Runs the ideal controlled-phase stage on a generic input, then searches
    per-side settings in {0, pi} for the two same-port classes with the split
    port class held at identity. A branch's global phase is irrelevant, so
    the H phase is fixed to zero.
    """
    rng = np.random.default_rng(20240607)
    inp = QubitPairAmplitudes.random(rng)
    raw = _stage_raw(Ensemble.pure(inp.state()), Ensemble.pure(passive_resource()), DetectorModel.ideal(), "", splitter)
    branches = []
    for pattern, prob, cond in raw:
        cls = classify(pattern)
        if cls.accepted:
            (w, s), = cond.branches
            branches.append((cls, s))
    if len(branches) != 16:
        raise RuntimeError(f"expected 16 heralded branches, found {len(branches)}")
    options = [(0.0, 0.0), (0.0, math.pi)]
    for p6 in options:
        for p7 in options:
            table = {SideClass.DIFFERENT_PORTS: (0.0, 0.0), SideClass.SAME_PORT_6: p6, SideClass.SAME_PORT_7: p7}
            outs = [_correct(s, cls, table, "") for cls, s in branches]
            if all(_same_up_to_phase(outs[0], o, tol) for o in outs[1:]):
                return table
    raise RuntimeError("no {0, pi} phase assignment unifies the heralded branches")


def _correct(s: PureState, cls: AcceptClass, table: PhaseTable, prefix: str) -> PureState:
    for e in correction(cls, table, prefix):
        s = apply(e, s)
    return s


@lru_cache(maxsize=1)
def default_table() -> dict[SideClass, tuple[float, float]]:
    return feed_forward_table()


# ---------------------------------------------------------------- outcomes

@dataclass
class PatternResult:
    probability: float
    accept: AcceptClass
    state: Ensemble  # conditional, normalized; after feed-forward when accepted


@dataclass
class GateOutcome:
    """Heralded gate run.

    ``conditional_output`` is the accepted-branch mixture renormalized by
    ``p_accept``. ``p_correct`` is the probability of heralding with an
    output equal to the ideal gate output (``None`` if no ideal exists);
    ``p_false`` is the probability of heralding while an output path is not
    carrying exactly one photon.
    """

    p_accept: float
    p_correct: float | None
    p_false: float
    conditional_output: Ensemble
    per_pattern: dict[ReportedPattern, PatternResult]
    diagnostics: dict = field(default_factory=dict)

    def accepted(self) -> dict[ReportedPattern, PatternResult]:
        return {k: v for k, v in self.per_pattern.items() if v.accept.accepted}

    def heralded_ensemble(self) -> Ensemble:
        """Accepted branches with their absolute probabilities (sub-normalized)."""
        return self.conditional_output.scale(self.p_accept)


@lru_cache(maxsize=256)
def _stage_projection(inputs: Ensemble, resource: Ensemble, prefix: str, splitter) -> Projection:
    joint = ensemble_tensor(inputs, resource)
    for e in stage_elements(prefix, splitter):
        joint = joint.map(lambda s, e=e: apply(e, s))
    return project(joint, detector_channels(default_sides(prefix)))


def _stage_raw(inputs: Ensemble, resource: Ensemble, d: DetectorModel, prefix: str, splitter=beam_splitter, accepted_only=False):
    proj = _stage_projection(inputs, resource, prefix, splitter)
    sides = default_sides(prefix)
    keep = (lambda r: classify(r, sides).accepted) if accepted_only else None
    return measure_projection(proj, d, keep=keep)


def missing_photon_weight(s: PureState, output_paths: Sequence[str] = ("8a", "8b")) -> float:
    """Weight of the component without exactly one photon on every output path."""
    modes = [pol(p) for p in output_paths for pol in (H, V)]
    order = sorted(modes)
    total = 0.0
    for counts, part in split_by_counts(s, modes).items():
        occ = dict(zip(order, counts))
        if any(occ[H(p)] + occ[V(p)] != 1 for p in output_paths):
            total += part.norm2()
    return total


def run_stage(
    inp,
    resource: Ensemble,
    d: DetectorModel,
    *,
    prefix: str = "",
    table: PhaseTable | None = None,
    ideal: np.ndarray | None = CZ,
    accepted_only: bool = False,
    splitter: Callable[..., Element] = beam_splitter,
    pre: Sequence[Element] = (),
    post: Sequence[Element] = (),
) -> GateOutcome:
    """Bell measurements of the inputs against a prepared resource.

    ``pre`` elements act on the inputs before the stage and ``post`` on the
    corrected outputs; the CNOT wrapper uses them. ``ideal`` is the logical
    map the heralded output is compared with (applied after ``pre`` is
    undone, i.e. on the caller's input).
    """
    table = default_table() if table is None else table
    inputs = _as_ensemble(inp, prefix)
    _check_input(inputs, prefix)
    sides = default_sides(prefix)
    ins = (prefix + "1a", prefix + "1b")
    outs = (prefix + "8a", prefix + "8b")

    per_pattern: dict[ReportedPattern, list] = {}
    p_correct = 0.0
    have_ideal = ideal is not None
    p_false = 0.0
    photon_numbers: set[int] = set()
    for w_in, s_in in inputs:
        target = apply_logical(s_in, ideal, ins, outs) if have_ideal else None
        if target is not None and target.norm2() < 1e-24:
            target = None
        s = s_in
        for e in pre:
            s = apply(e, s)
        for _, rs in resource:
            photon_numbers |= {a + b for a in s.photon_numbers() for b in rs.photon_numbers()}
        raw = _stage_raw(Ensemble.pure(s), resource, d, prefix, splitter, accepted_only)
        for pattern, prob, cond in raw:
            cls = classify(pattern, sides)
            if cls.accepted:
                cond = cond.map(lambda x, cls=cls: _correct(x, cls, table, prefix))
                for e in post:
                    cond = cond.map(lambda x, e=e: apply(e, x))
            slot = per_pattern.setdefault(pattern, [0.0, cls, []])
            slot[0] += w_in * prob
            slot[2].extend((w_in * prob * w, x) for w, x in cond)
            if cls.accepted:
                for w, x in cond:
                    q = w_in * prob * w
                    p_false += q * missing_photon_weight(x, outs)
                    if target is not None:
                        p_correct += q * abs(inner_product(target, x)) ** 2 / target.norm2()

    results = {}
    accepted_branches = []
    p_accept = 0.0
    for pattern in sorted(per_pattern):
        prob, cls, branches = per_pattern[pattern]
        results[pattern] = PatternResult(prob, cls, Ensemble(tuple((w / prob, x) for w, x in branches)))
        if cls.accepted:
            p_accept += prob
            accepted_branches.extend(branches)
    if p_accept > 0:
        conditional = Ensemble(tuple((w / p_accept, x) for w, x in accepted_branches))
    else:
        conditional = Ensemble(())
    diagnostics = {
        "photon_numbers": sorted(photon_numbers),
        "n_patterns": len(results),
        "n_accepted_patterns": sum(1 for r in results.values() if r.accept.accepted),
        "table": dict(table),
    }
    return GateOutcome(p_accept, p_correct if have_ideal else None, p_false, conditional, results, diagnostics)


# ---------------------------------------------------------------- schemes

def _inner_prefix(prefix: str) -> str:
    return prefix + "i."


@lru_cache(maxsize=64)
def heralded_resource(level: int, detectors: tuple[DetectorModel, ...] = (), prefix: str = "") -> Ensemble:
    """Resource on (4a, 4b, 5a, 5b) as prepared by a scheme of given level.

    Level 1 is the passive preparation (a coherent state that includes the
    wrong photon-number sectors). Level ``k > 1`` runs the level ``k - 1``
    gate on halves of two (HH - VV) pairs, keeps only heralded runs and
    renormalizes, which is what retrying until success produces.
    ``detectors`` lists the models used by the inner gates, outermost first.
    """
    if level == 1:
        return Ensemble.pure(passive_resource(prefix))
    if len(detectors) < level - 1:
        raise ValueError(f"level {level} needs {level - 1} inner detector models")
    ip = _inner_prefix(prefix)
    pairs = tensor(phi_minus(ip + "1a", prefix + "5a"), phi_minus(ip + "1b", prefix + "5b"))
    inner = heralded_resource(level - 1, detectors[1:], ip)
    out = run_stage(Ensemble.pure(pairs), inner, detectors[0], prefix=ip, ideal=None, accepted_only=True)
    if out.p_accept == 0:
        raise ValueError("inner gate never heralds success; resource cannot be prepared")
    mapping = {}
    for pol in (H, V):
        mapping[pol(ip + "8a")] = pol(prefix + "4a")
        mapping[pol(ip + "8b")] = pol(prefix + "4b")
    return merge_equivalent(out.conditional_output.map(lambda s: relabel(s, mapping)))


def merge_equivalent(e: Ensemble, digits: int = 12) -> Ensemble:
    """Merge branches equal up to a global phase.

    Each state is rotated so its largest-magnitude amplitude (first in basis
    order on ties) is real positive; the density operator is unchanged.
    States are then keyed on rounded amplitudes.
    """
    acc: dict = {}
    for w, s in e:
        if not s.terms:
            continue
        keys = sorted(s.terms)
        lead = max(keys, key=lambda k: round(abs(s.terms[k]), digits))
        a = s.terms[lead]
        s = s * (abs(a) / a)
        key = tuple((k, round(v.real, digits), round(v.imag, digits)) for k, v in sorted(s.terms.items()))
        if key in acc:
            acc[key][0] += w
        else:
            acc[key] = [w, s]
    return Ensemble(tuple((w, s) for w, s in acc.values()))


def run_scheme1(inp, d: DetectorModel = DetectorModel.ideal(), **kw) -> GateOutcome:
    """Controlled-phase gate with a passively prepared resource."""
    out = run_stage(inp, heralded_resource(1), d, **kw)
    res = passive_resource()
    out.diagnostics["beta_sector_weight"] = beta_sector(res).norm2()
    return out


def run_scheme2(inp, d: DetectorModel = DetectorModel.ideal(), inner_d: DetectorModel | None = None, **kw) -> GateOutcome:
    """Controlled-phase gate whose resource is heralded by a scheme-1 run."""
    inner_d = d if inner_d is None else inner_d
    return run_stage(inp, heralded_resource(2, (inner_d,)), d, **kw)


def run_scheme3(
    inp, d: DetectorModel = DetectorModel.ideal(), inner_d: DetectorModel | None = None, **kw
) -> GateOutcome:
    """Controlled-phase gate whose resource is heralded by a scheme-2 run."""
    inner_d = d if inner_d is None else inner_d
    return run_stage(inp, heralded_resource(3, (inner_d, inner_d)), d, **kw)


SCHEMES = {1: run_scheme1, 2: run_scheme2, 3: run_scheme3}

# With +45 before and -45 after, the control-V block is -X rather than X.
CNOT_PRE_ANGLE = -45.0
CNOT_POST_ANGLE = 45.0


def cnot_plates(prefix: str = "") -> tuple[Element, Element]:
    """Polarization rotators on the target input and output paths."""
    return (
        rotator(prefix + "1b", math.radians(CNOT_PRE_ANGLE)),
        rotator(prefix + "8b", math.radians(CNOT_POST_ANGLE)),
    )


def run_cnot(inp, d: DetectorModel = DetectorModel.ideal(), scheme: int = 1, **kw) -> GateOutcome:
    """Controlled-phase gate conjugated by wave plates on the target (b) line."""
    pre, post = cnot_plates(kw.get("prefix", ""))
    kw.setdefault("ideal", CNOT)
    runner = SCHEMES[scheme]
    return runner(inp, d, pre=(pre,), post=(post,), **kw)


def postselect_final(e: Ensemble, output_paths: Sequence[str] = ("8a", "8b")) -> Ensemble:
    """Keep the part of each branch with exactly one photon on every output path.

    The result is sub-normalized; its total weight is the retention
    probability.
    """
    modes = [pol(p) for p in output_paths for pol in (H, V)]
    order = sorted(modes)
    out = []
    for w, s in e:
        kept = []
        for counts, part in split_by_counts(s, modes).items():
            occ = dict(zip(order, counts))
            if all(occ[H(p)] + occ[V(p)] == 1 for p in output_paths):
                kept.append((1.0, tensor(basis_state({m: n for m, n in occ.items() if n}), part)))
        k = superpose(kept)
        n2 = k.norm2()
        if n2 > 0:
            out.append((w * n2, k.normalize()))
    return Ensemble(tuple(out))


def ideal_output(inp, gate: str = "cz", prefix: str = "") -> PureState:
    s = _as_ensemble(inp, prefix)
    if len(s) != 1:
        raise ValueError("ideal output is defined for pure inputs")
    return apply_logical(s.branches[0][1], IDEAL_MAPS[gate], (prefix + "1a", prefix + "1b"), (prefix + "8a", prefix + "8b"))
