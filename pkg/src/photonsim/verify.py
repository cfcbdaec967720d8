"""Named invariant checks behind ``photonsim verify``.

Each check returns a :class:`CheckResult`. ``DOCUMENTED-DEVIATION`` marks a
closed form that the exact simulation does not reproduce; the result
carries both values and does not count as a failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis, detect, elements, fock, gates, oracles
from .detect import DetectorModel
from .fock import Ensemble, H, V, basis_state, inner_product
from .gates import QubitPairAmplitudes

PASS, FAIL, AGREEMENT, DEVIATION = "PASS", "FAIL", "AGREEMENT", "DOCUMENTED-DEVIATION"

ETA_GRID = (0.3, 0.6, 0.9, 1.0)
ETA2_GRID = (0.0, 0.5, 1.0)


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        return f"[{self.status}] {self.name} ({self.seconds:.2f}s) {self.detail}".rstrip()


CHECKS: list[tuple[str, Callable]] = []


def check(name: str):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn

    return deco


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


def _random_state(rng, modes, n_terms=6, max_n=2) -> fock.PureState:
    terms = []
    for _ in range(n_terms):
        occ = {m: int(rng.integers(0, max_n + 1)) for m in modes}
        terms.append((complex(rng.normal(), rng.normal()), basis_state(occ)))
    return fock.superpose(terms)


def _inputs(n_random: int, seed: int = 11) -> list[QubitPairAmplitudes]:
    rng = np.random.default_rng(seed)
    basis = [QubitPairAmplitudes.basis(b) for b in gates.QUBIT_BASIS]
    return basis + [QubitPairAmplitudes.random(rng) for _ in range(n_random)]


# ---------------------------------------------------------------- fock

@check("fock.canonical_idempotence")
def _(ctx):
    rng = np.random.default_rng(1)
    modes = fock.modes_of("x", "y")
    for _ in range(20):
        s = _random_state(rng, modes)
        if fock.superpose([(1, fock.superpose([(1, s)]))]).terms != fock.superpose([(1, s)]).terms:
            return FAIL, "superpose not idempotent"
    return PASS, ""


@check("fock.inner_product_hermitian")
def _(ctx):
    rng = np.random.default_rng(2)
    modes = fock.modes_of("x", "y")
    worst = 0.0
    for _ in range(20):
        a, b = _random_state(rng, modes), _random_state(rng, modes)
        worst = max(worst, abs(inner_product(a, b) - inner_product(b, a).conjugate()))
    return _status(worst < 1e-12), f"max |<a|b> - conj<b|a>| = {worst:.2e}"


@check("fock.tensor_norm")
def _(ctx):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        a = _random_state(rng, fock.modes_of("x"))
        b = _random_state(rng, fock.modes_of("y"))
        worst = max(worst, abs(fock.tensor(a, b).norm() - a.norm() * b.norm()))
    return _status(worst < 1e-12), f"max deviation {worst:.2e}"


@check("fock.distribution_and_discard")
def _(ctx):
    rng = np.random.default_rng(4)
    modes = fock.modes_of("x", "y")
    worst = 0.0
    for _ in range(20):
        s = _random_state(rng, modes).normalize()
        worst = max(worst, abs(sum(fock.number_distribution(s, modes[:2]).values()) - 1))
        e = Ensemble(((0.3, s), (0.5, _random_state(rng, modes).normalize())))
        worst = max(worst, abs(fock.discard_modes(e, modes[2:]).total_weight() - 0.8))
    return _status(worst < 1e-12), f"max deviation {worst:.2e}"


# ---------------------------------------------------------------- elements

def _constructors():
    rng = np.random.default_rng(5)
    return [
        elements.wave_plate("x", math.radians(45)),
        elements.wave_plate("x", float(rng.uniform(0, 2 * math.pi))),
        elements.rotator("x", float(rng.uniform(0, 2 * math.pi))),
        elements.phase_modulator("x", 0.0, math.pi),
        elements.phase_modulator("x", float(rng.uniform(0, 6)), float(rng.uniform(0, 6)), out="z"),
        elements.pbs("x", "y", "u", "w"),
        elements.beam_splitter("x", "y", "u", "w"),
        elements.LossChannel(H("x"), 0.37).coupler(),
    ]


@check("elements.unitarity_and_conservation")
def _(ctx):
    rng = np.random.default_rng(6)
    worst = 0.0
    for e in _constructors():
        for _ in range(5):
            s = _random_state(rng, list(e.input_modes) + [H("spectator")])
            out = elements.apply(e, s)
            worst = max(worst, abs(out.norm() - s.norm()))
            ins = {sum(n for _, n in b) for b in s.terms}
            if not out.photon_numbers() <= ins:
                return FAIL, f"{e.name} changed photon number"
    return _status(worst < 1e-12), f"max norm change {worst:.2e}"


@check("elements.composition")
def _(ctx):
    rng = np.random.default_rng(7)
    e1 = elements.wave_plate("x", 0.7)
    e2 = elements.phase_modulator("x", 0.3, 1.9)
    e3 = elements.compose(e1, e2)
    b1 = elements.beam_splitter("x", "y", "u", "w")
    b2 = elements.pbs("u", "w", "x", "y")
    b3 = elements.compose(b1, b2)
    worst = 0.0
    for _ in range(5):
        s = _random_state(rng, fock.modes_of("x", "y"))
        worst = max(worst, (elements.apply(e2, elements.apply(e1, s)) - elements.apply(e3, s)).norm())
        worst = max(worst, (elements.apply(b2, elements.apply(b1, s)) - elements.apply(b3, s)).norm())
    return _status(worst < 1e-12), f"max deviation {worst:.2e}"


@check("elements.dense_oracle")
def _(ctx):
    worst = 0.0
    for e in _constructors():
        d = len(e.input_modes)
        for n in range(0, 4):
            dense, basis = oracles.fock_transfer(e.matrix, n)
            for j, occ in enumerate(basis):
                s = basis_state(dict(zip(e.input_modes, occ)))
                out = elements.apply(e, s)
                col = np.array([out.amplitude(dict(zip(e.output_modes, m))) for m in basis])
                worst = max(worst, float(np.max(np.abs(col - dense[:, j]))))
    return _status(worst < 1e-10), f"max |sparse - permanent oracle| = {worst:.2e}"


@check("elements.hong_ou_mandel")
def _(ctx):
    bs = elements.beam_splitter("x", "y", "u", "w")
    out = elements.apply(bs, basis_state({H("x"): 1, H("y"): 1}))
    coinc = abs(out.amplitude({H("u"): 1, H("w"): 1})) ** 2
    return _status(coinc < 1e-12), f"coincidence probability {coinc:.2e}"


@check("elements.resource_pipeline")
def _(ctx):
    s = elements.apply(elements.wave_plate("3a", math.radians(45)), gates.singlet("3a", "3b"))
    expect = fock.superpose(
        [(0.5, basis_state({V("3a"): 1, V("3b"): 1})), (0.5, basis_state({H("3a"): 1, V("3b"): 1})),
         (0.5, basis_state({V("3a"): 1, H("3b"): 1})), (-0.5, basis_state({H("3a"): 1, H("3b"): 1}))]
    )
    d1 = (s - expect).norm()
    res = gates.passive_resource()
    beta = gates.beta_sector(res)
    d2 = abs(beta.norm2() - 0.25)
    d3 = (beta - 0.5 * gates.psi_state()).norm()
    ok = d1 < 1e-12 and d2 < 1e-12 and d3 < 1e-12
    return _status(ok), f"pair after WP5 dev {d1:.1e}; beta^2 = {beta.norm2():.12f}; sector dev {d3:.1e}"


# ---------------------------------------------------------------- detect

@check("detect.response_normalized")
def _(ctx):
    worst = 0.0
    grid = np.linspace(0, 1, 6)
    for eta in grid:
        for eta2 in grid:
            d = DetectorModel(float(eta), float(eta2))
            for n in range(7):
                worst = max(worst, abs(sum(detect.response_distribution(n, d).values()) - 1))
            r2 = detect.response_distribution(2, d).get(2, 0.0)
            worst = max(worst, abs(r2 - eta**2 * eta2))
    return _status(worst < 1e-12), f"max deviation {worst:.2e}"


@check("detect.measure_trace_and_faithful")
def _(ctx):
    rng = np.random.default_rng(8)
    modes = fock.modes_of("x", "y")
    worst = 0.0
    for _ in range(5):
        s = _random_state(rng, modes).normalize()
        e = Ensemble(((0.7, s),))
        out = detect.measure(e, modes[:2], DetectorModel(0.6, 0.4))
        worst = max(worst, abs(sum(p for _, p, _ in out) - 0.7))
        ideal = detect.measure(e, modes[:2], DetectorModel.ideal())
        dist = fock.number_distribution(s, modes[:2])
        for r, p, _ in ideal:
            key = tuple(r.get(m) for m in sorted(modes[:2]))
            worst = max(worst, abs(dist.get(key, 0) * 0.7 - p))
    return _status(worst < 1e-12), f"max deviation {worst:.2e}"


@check("detect.sixteen_patterns")
def _(ctx):
    chans = detect.detector_channels(detect.default_sides())
    n = 0
    for counts in oracles.occupation_basis(len(chans), 4):
        r = detect.ReportedPattern.of(dict(zip(chans, counts)))
        n += detect.classify(r).accepted
    return _status(n == 16), f"{n} accepted patterns with four counts"


@check("detect.monte_carlo")
def _(ctx):
    rng = np.random.default_rng(9)
    d = DetectorModel(0.7, 0.4)
    worst = 0.0
    for n in (1, 2, 3):
        draws = detect.sample_response(n, d, 10**6, rng)
        for k, p in detect.response_distribution(n, d).items():
            f = np.mean(draws == k)
            sigma = math.sqrt(p * (1 - p) / 10**6) or 1e-12
            worst = max(worst, abs(f - p) / sigma)
    return _status(worst < 5), f"max z-score {worst:.2f}"


# ---------------------------------------------------------------- scheme 1

@check("scheme1.feed_forward_table")
def _(ctx):
    t = gates.feed_forward_table()
    want = {
        detect.SideClass.DIFFERENT_PORTS: (0.0, 0.0),
        detect.SideClass.SAME_PORT_6: (0.0, math.pi),
        detect.SideClass.SAME_PORT_7: (0.0, math.pi),
    }
    ok = all(np.allclose(t[k], v) for k, v in want.items())
    return _status(ok), ", ".join(f"{k.value}={tuple(round(math.degrees(x)) for x in v)}" for k, v in t.items())


@check("scheme1.sixteen_branch_unification")
def _(ctx):
    q = _inputs(1)[-1]
    out = gates.run_scheme1(q, table=ctx["table"])
    acc = out.accepted()
    states = [r.state.branches[0][1] for r in acc.values()]
    ref = states[0]
    worst = max(1 - fock.fidelity(ref, s) for s in states)
    probs = [r.probability for r in acc.values()]
    ok = len(states) == 16 and worst < 1e-10 and max(abs(p - 1 / 256) for p in probs) < 1e-12
    return _status(ok), f"{len(states)} branches, max 1-F {worst:.2e}"


@check("scheme1.controlled_phase")
def _(ctx):
    worst, pmax = 0.0, 0.0
    for q in _inputs(20):
        out = gates.run_scheme1(q, table=ctx["table"])
        worst = max(worst, 1 - analysis.process_fidelity(out, "cz", q))
        pmax = max(pmax, abs(out.p_accept - 1 / 16))
    return _status(worst < 1e-10 and pmax < 1e-12), f"max 1-F {worst:.2e}, max |p-1/16| {pmax:.2e}"


@check("scheme1.p_true")
def _(ctx):
    rows = analysis.compare_sweep(1, ETA_GRID, ETA2_GRID, threads=1)
    worst = max(r.deviations["p_true"] for r in rows)
    return _status(worst < 1e-9), f"max |sim - eta^4/16| = {worst:.2e}"


@check("scheme1.p_false")
def _(ctx):
    rows = analysis.compare_sweep(1, ETA_GRID, ETA2_GRID, threads=1)
    oracle = max(abs(r.p_false_sim - analysis.scheme1_false_rate_by_sides(r.eta, r.eta2)) for r in rows)
    ident = max(abs(r.p_err_sim - r.p_false_sim / (r.p_true_sim + r.p_false_sim)) for r in rows)
    if oracle > 1e-9 or ident > 1e-9:
        return FAIL, f"simulation disagrees with side count ({oracle:.2e}) or rate identity ({ident:.2e})"
    worst = max(r.deviations["p_false"] for r in rows)
    spot = next(r for r in rows if r.eta == 1.0 and r.eta2 == 0.0)
    detail = (
        f"closed form eta^4(3-k)(1-k)/4 vs exact eta^4(2-k)(1-k)/4; "
        f"at eta=1, eta2=0: p_false {spot.p_false:.12g} vs {spot.p_false_sim:.12g}, "
        f"p_err {spot.p_err:.12g} vs {spot.p_err_sim:.12g}; max |dev| over grid {worst:.6g}"
    )
    return (AGREEMENT if worst < 1e-9 else DEVIATION), detail


@check("scheme1.input_independence")
def _(ctx):
    ps = [gates.run_scheme1(q, DetectorModel(0.8, 0.3)).p_accept for q in _inputs(5)]
    spread = max(ps) - min(ps)
    return _status(spread < 1e-12), f"p_accept spread {spread:.2e}"


@check("scheme1.postselection")
def _(ctx):
    vac_a = fock.superpose([(1 / math.sqrt(2), basis_state({H("1b"): 1})), (1 / math.sqrt(2), basis_state({V("1b"): 1}))])
    out = gates.run_scheme1(vac_a, DetectorModel(0.8, 0.2))
    photons_8a = max(
        (n for _, s in out.conditional_output for n, p in fock.total_number_distribution(s, fock.modes_of("8a")).items() if p > 1e-15),
        default=0,
    )
    q = _inputs(1)[-1]
    imperfect = gates.run_scheme1(q, DetectorModel(0.7, 0.0))
    kept = gates.postselect_final(imperfect.conditional_output)
    target = gates.ideal_output(q)
    f = sum(w * fock.fidelity(target, s) for w, s in kept) / kept.total_weight()
    f_raw = analysis.process_fidelity(imperfect, "cz", q)
    p_err = imperfect.p_false / imperfect.p_accept
    ok = photons_8a == 0 and abs(f - 1) < 1e-10 and abs(f_raw - (1 - p_err)) < 1e-10
    return _status(ok), f"max photons in 8a with vacuum 1a: {photons_8a}; postselected F = {f:.12f}"


@check("scheme1.loss")
def _(ctx):
    q = _inputs(1)[-1]
    worst = 0.0
    for t in (0.5, 0.9):
        e = elements.spatial_loss("1b", t, elements.spatial_loss("1a", t, Ensemble.pure(q.state())))
        out = gates.run_scheme1(e)
        kept = gates.postselect_final(out.conditional_output)
        target = gates.ideal_output(q)
        worst = max(worst, max(1 - fock.fidelity(target, s) for _, s in kept))
        worst = max(worst, abs(out.p_correct - t * t / 16))
    return _status(worst < 1e-10), f"max deviation {worst:.2e}"


# ---------------------------------------------------------------- cnot

@check("cnot.truth_table")
def _(ctx):
    worst = 0.0
    for q in _inputs(5):
        out = gates.run_cnot(q, table=ctx["table"])
        worst = max(worst, 1 - analysis.process_fidelity(out, "cnot", q), abs(out.p_accept - 1 / 16))
    # CNOT twice on basis inputs returns the input
    for b in gates.QUBIT_BASIS:
        q = QubitPairAmplitudes.basis(b)
        out1 = gates.run_cnot(q, table=ctx["table"])
        s = out1.conditional_output.branches[0][1]
        mid = gates.QubitPairAmplitudes(tuple(gates.qubit_amplitudes(s, "8a", "8b")))
        out2 = gates.run_cnot(mid, table=ctx["table"])
        back = out2.conditional_output.branches[0][1]
        worst = max(worst, 1 - fock.fidelity(fock.relabel(q.state(), {H("1a"): H("8a"), V("1a"): V("8a"), H("1b"): H("8b"), V("1b"): V("8b")}), back))
    return _status(worst < 1e-10), f"max deviation {worst:.2e}"


# ---------------------------------------------------------------- scheme 2

@check("scheme2.no_false_heralds")
def _(ctx):
    rows = analysis.compare_sweep(2, ETA_GRID, ETA2_GRID, threads=1)
    worst = max(r.p_false_sim for r in rows)
    return _status(worst == 0.0), f"max simulated p_false {worst:.2e}"


@check("scheme2.success_rate")
def _(ctx):
    ideal = analysis.rate_point(2, 1.0, 1.0)
    chain = 0.0
    for eta, eta2 in ((1.0, 0.0), (0.9, 0.5), (0.6, 1.0)):
        inner = analysis.rate_point(1, eta, eta2)
        sim = analysis.rate_point(2, 1.0, 1.0, inner_eta=eta, inner_eta2=eta2)
        chain = max(chain, abs(sim.p_true_sim - (1 - inner.p_err_sim) / 4))
    if abs(ideal.p_true_sim - 0.25) > 1e-12 or chain > 1e-9:
        return FAIL, f"ideal {ideal.p_true_sim:.12g}, chain rule deviation {chain:.2e}"
    apd = analysis.rate_point(2, 1.0, 1.0, inner_eta=1.0, inner_eta2=0.0)
    dev = abs(apd.p_true - apd.p_true_sim)
    detail = f"inner eta=1, eta2=0: closed form {apd.p_true:.12g}, simulated {apd.p_true_sim:.12g}"
    return (AGREEMENT if dev < 1e-9 else DEVIATION), detail


@check("scheme2.vacuum_never_heralds")
def _(ctx):
    s = fock.superpose([(1 / math.sqrt(2), basis_state({H("1b"): 1})), (1 / math.sqrt(2), basis_state({V("1b"): 1}))])
    p = gates.run_scheme2(s, DetectorModel(0.9, 0.5)).p_accept
    return _status(p == 0.0), f"p_accept {p:.2e}"


@check("scheme2.loss")
def _(ctx):
    q = _inputs(1)[-1]
    target = gates.ideal_output(q)
    worst = 0.0
    for t in (0.5, 0.9):
        e = elements.spatial_loss("1a", t, Ensemble.pure(q.state()))
        out = gates.run_scheme2(e, DetectorModel(0.9, 0.5))
        worst = max(worst, max(1 - fock.fidelity(target, s) for _, s in out.conditional_output))
    return _status(worst < 1e-10), f"max 1-F over heralded branches {worst:.2e}"


# ---------------------------------------------------------------- scheme 3

@check("scheme3.success_rate")
def _(ctx):
    worst = 0.0
    for eta in ETA_GRID:
        ps = [gates.run_scheme3(q, DetectorModel(eta, 0.5)).p_accept for q in _inputs(5)[4:]]
        worst = max(worst, max(abs(p - eta**4 / 4) for p in ps))
        spread = max(ps) - min(ps)
        if spread > 1e-12:
            return FAIL, f"input dependence {spread:.2e} at eta={eta}"
    return _status(worst < 1e-9), f"max |p - eta^4/4| = {worst:.2e}"


@check("scheme3.output_exact")
def _(ctx):
    worst = 0.0
    for eta in (0.4, 0.8, 1.0):
        for q in _inputs(2)[4:]:
            out = gates.run_scheme3(q, DetectorModel(eta, 0.0))
            worst = max(worst, 1 - analysis.process_fidelity(out, "cz", q), out.p_false)
    return _status(worst < 1e-10), f"max 1-F {worst:.2e}"


@check("scheme3.loss")
def _(ctx):
    q = _inputs(1)[-1]
    target = gates.ideal_output(q)
    worst = 0.0
    for t in (0.5, 0.9):
        e = elements.spatial_loss("1b", t, Ensemble.pure(q.state()))
        out = gates.run_scheme3(e, DetectorModel(0.9, 0.5))
        worst = max(worst, max(1 - fock.fidelity(target, s) for _, s in out.conditional_output))
        worst = max(worst, abs(out.p_accept - t * 0.9**4 / 4))
    return _status(worst < 1e-10), f"max deviation {worst:.2e}"


# ---------------------------------------------------------------- analysis

@check("analysis.monotonicity")
def _(ctx):
    etas = np.linspace(0.01, 1, 50)
    p = [analysis.rates_scheme1(float(e), 0.5).p_true for e in etas]
    inc = all(b > a for a, b in zip(p, p[1:]))
    zero = [(e, e2) for e in (0.5, 1.0) for e2 in (0.0, 0.5, 1.0) if analysis.rates_scheme1(e, e2).p_false == 0]
    return _status(inc and zero == [(1.0, 1.0)]), "p_true increasing; p_false zero only at eta=eta2=1"


def run_checks(filter: str | None = None, table=None) -> list[CheckResult]:
    ctx = {"table": gates.default_table() if table is None else table}
    out = []
    for name, fn in CHECKS:
        if filter and filter not in name:
            continue
        t0 = time.perf_counter()
        try:
            status, detail = fn(ctx)
        except Exception as exc:  # a crashing check is a failure, not an abort
            status, detail = FAIL, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, status, detail, time.perf_counter() - t0))
    return out
