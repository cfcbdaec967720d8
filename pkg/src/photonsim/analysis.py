"""Closed-form success and error rates, and simulator comparisons.

The closed forms are the published ones. ``scheme1_false_rate_by_sides``
is an independent side-by-side count under the detector model of
:mod:`photonsim.detect`; it is what the exact simulation reproduces and is
reported next to the closed form wherever the two differ.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .detect import DetectorModel, response_distribution
from .fock import inner_product
from .gates import (
    CNOT,
    CZ,
    GateOutcome,
    IDEAL_MAPS,
    QubitPairAmplitudes,
    _as_ensemble,
    apply_logical,
    run_scheme1,
    run_scheme2,
    run_scheme3,
)


def kappa(eta: float, eta2: float) -> float:
    return eta * (1 + eta2) / 2


def _ratio(p_false: float, p_true: float) -> float:
    den = p_true + p_false
    return p_false / den if den > 0 else 0.0


@dataclass
class RateReport:
    scheme: int
    eta: float
    eta2: float
    kappa: float
    p_true: float
    p_false: float
    p_err: float
    inner_eta: float | None = None
    inner_eta2: float | None = None
    p_true_sim: float | None = None
    p_false_sim: float | None = None
    p_err_sim: float | None = None
    deviations: dict = field(default_factory=dict)

    @property
    def max_abs_dev(self) -> float:
        return max(self.deviations.values(), default=0.0)

    def fill_simulated(self, p_true: float, p_false: float) -> "RateReport":
        self.p_true_sim = p_true
        self.p_false_sim = p_false
        self.p_err_sim = _ratio(p_false, p_true)
        self.deviations = {
            "p_true": abs(self.p_true - p_true),
            "p_false": abs(self.p_false - p_false),
            "p_err": abs(self.p_err - self.p_err_sim),
        }
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d["max_abs_dev"] = self.max_abs_dev
        return d


def _check_unit(**kw):
    for k, v in kw.items():
        if not 0 <= v <= 1:
            raise ValueError(f"{k}={v} outside [0, 1]")


def rates_scheme1(eta: float, eta2: float) -> RateReport:
    _check_unit(eta=eta, eta2=eta2)
    k = kappa(eta, eta2)
    p_true = eta**4 / 16
    p_false = eta**4 * (3 - k) * (1 - k) / 4
    return RateReport(1, eta, eta2, k, p_true, p_false, _ratio(p_false, p_true))


def rates_scheme2(eta: float, eta2: float, inner_eta: float | None = None, inner_eta2: float | None = None) -> RateReport:
    inner_eta = eta if inner_eta is None else inner_eta
    inner_eta2 = eta2 if inner_eta2 is None else inner_eta2
    _check_unit(eta=eta, eta2=eta2, inner_eta=inner_eta, inner_eta2=inner_eta2)
    p_err_inner = rates_scheme1(inner_eta, inner_eta2).p_err
    p_true = (1 - p_err_inner) * eta**4 / 4
    return RateReport(2, eta, eta2, kappa(eta, eta2), p_true, 0.0, 0.0, inner_eta, inner_eta2)


def rates_scheme3(eta: float, eta2: float = 1.0) -> RateReport:
    _check_unit(eta=eta, eta2=eta2)
    return RateReport(3, eta, eta2, kappa(eta, eta2), eta**4 / 4, 0.0, 0.0)


def scheme1_false_rate_by_sides(eta: float, eta2: float) -> float:
    """False-herald probability of scheme 1 counted side by side.

    Per side the resource path carries one photon (prob 1/2), none (1/4) or
    an H+V pair (1/4), independently of the other side. A one-photon side
    heralds with probability eta^2/2 and a correct output. A pair side meets
    the input photon on the 50/50 splitter; the two equal-polarization
    photons bunch into one port, so it heralds when the odd photon is seen
    and the bunched pair reads as a single count. An empty side never
    heralds.
    """
    d = DetectorModel(eta, eta2)
    good = 0.5 * eta**2 / 2
    pair = 0.25 * eta * response_distribution(2, d).get(1, 0.0)
    return 2 * good * pair + pair**2


def _simulate(scheme: int, eta: float, eta2: float, inp, inner_eta=None, inner_eta2=None) -> GateOutcome:
    d = DetectorModel(eta, eta2)
    if scheme == 1:
        return run_scheme1(inp, d)
    inner = DetectorModel(eta if inner_eta is None else inner_eta, eta2 if inner_eta2 is None else inner_eta2)
    if scheme == 2:
        return run_scheme2(inp, d, inner)
    if scheme == 3:
        return run_scheme3(inp, d, inner)
    raise ValueError(f"unknown scheme {scheme}")


def closed_form(scheme: int, eta: float, eta2: float, inner_eta=None, inner_eta2=None) -> RateReport:
    if scheme == 1:
        return rates_scheme1(eta, eta2)
    if scheme == 2:
        return rates_scheme2(eta, eta2, inner_eta, inner_eta2)
    if scheme == 3:
        # the heralded resource is exact for any inner detector
        return rates_scheme3(eta, eta2)
    raise ValueError(f"unknown scheme {scheme}")


def rate_point(scheme: int, eta: float, eta2: float, inp=None, inner_eta=None, inner_eta2=None) -> RateReport:
    inp = QubitPairAmplitudes((0.5, 0.5, 0.5, 0.5)) if inp is None else inp
    rep = closed_form(scheme, eta, eta2, inner_eta, inner_eta2)
    if scheme != 1 and inner_eta is None:
        rep.inner_eta, rep.inner_eta2 = eta, eta2
    if eta == 0 or (scheme != 1 and rep.inner_eta == 0):
        return rep.fill_simulated(0.0, 0.0)
    out = _simulate(scheme, eta, eta2, inp, inner_eta, inner_eta2)
    return rep.fill_simulated(out.p_correct, out.p_false)


def sweep_threads() -> int:
    n = int(os.environ.get("PHOTONSIM_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def compare_sweep(
    scheme: int,
    eta_grid: Iterable[float],
    eta2_grid: Iterable[float],
    inp=None,
    inner_eta: float | None = None,
    inner_eta2: float | None = None,
    threads: int | None = None,
) -> list[RateReport]:
    """Simulated vs closed-form rates on an (eta, eta2) grid, row-major order."""
    points = [(e, e2) for e in eta_grid for e2 in eta2_grid]
    threads = threads or sweep_threads()
    job = lambda pt: rate_point(scheme, pt[0], pt[1], inp, inner_eta, inner_eta2)
    if threads <= 1 or len(points) <= 1:
        return [job(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, points))


def process_fidelity(outcome: GateOutcome, ideal_map: str | np.ndarray, inp, prefix: str = "") -> float:
    """Mean fidelity of the heralded output with the ideal gate output.

    Branches weighted by their heralding probability; branches missing an
    output photon contribute zero.
    """
    u = IDEAL_MAPS[ideal_map.lower()] if isinstance(ideal_map, str) else ideal_map
    ens = _as_ensemble(inp, prefix)
    if len(ens) != 1:
        raise ValueError("process fidelity is defined for pure inputs")
    target = apply_logical(ens.branches[0][1], u, (prefix + "1a", prefix + "1b"), (prefix + "8a", prefix + "8b"))
    t2 = target.norm2()
    out = outcome.conditional_output
    if not len(out) or t2 == 0:
        return 0.0
    total = sum(w for w, _ in out)
    return sum(w * abs(inner_product(target, s)) ** 2 for w, s in out) / (t2 * total)
