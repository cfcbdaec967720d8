import numpy as np
import pytest

from photonsim import detect, fock
from photonsim.detect import (
    DetectorModel,
    ReportedPattern,
    SideClass,
    accepted_patterns,
    classify,
    measure,
    response_distribution,
)
from photonsim.fock import Ensemble, H, V, basis_state, superpose


def test_ideal_single_photon():
    assert response_distribution(1, DetectorModel.ideal()) == {1: 1.0}


def test_efficiency_single_photon():
    assert response_distribution(1, DetectorModel(0.8, 1.0)) == pytest.approx({1: 0.8, 0: 0.2})


def test_two_photons_apd():
    assert response_distribution(2, DetectorModel(1.0, 0.0)) == pytest.approx({1: 1.0})


@pytest.mark.parametrize("eta, eta2", [(0.7, 0.3), (1.0, 0.5), (0.4, 1.0)])
def test_two_photon_law(eta, eta2):
    r = response_distribution(2, DetectorModel(eta, eta2))
    assert r[2] == pytest.approx(eta**2 * eta2)
    assert r.get(0, 0) == pytest.approx((1 - eta) ** 2)
    assert r[1] == pytest.approx(2 * eta * (1 - eta) + eta**2 * (1 - eta2))


def test_zero_efficiency():
    assert response_distribution(3, DetectorModel(0.0, 1.0)) == {0: 1.0}


def test_three_photon_extension():
    r = response_distribution(3, DetectorModel(1.0, 0.5))
    assert r == pytest.approx({3: 0.25, 1: 0.75})


@pytest.mark.parametrize("n", range(5))
@pytest.mark.parametrize("eta, eta2", [(0.3, 0.0), (0.9, 0.6), (1.0, 1.0)])
def test_response_normalized_and_bounded(n, eta, eta2):
    r = response_distribution(n, DetectorModel(eta, eta2))
    assert sum(r.values()) == pytest.approx(1, abs=1e-12)
    assert max(r) <= n


def test_bad_parameters():
    with pytest.raises(ValueError):
        DetectorModel(1.2, 0.5)
    with pytest.raises(ValueError):
        response_distribution(-1, DetectorModel())


def test_multiplexed_eta2():
    assert detect.effective_eta2_multiplex(2) == 0.5
    assert detect.effective_eta2_multiplex(1) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_monte_carlo_agrees_with_exact(n, rng):
    d = DetectorModel(0.7, 0.4)
    draws = detect.sample_response(n, d, 200_000, rng)
    exact = response_distribution(n, d)
    for k, p in exact.items():
        # 5 sigma of a binomial proportion
        assert abs(np.mean(draws == k) - p) < 5 * np.sqrt(p * (1 - p) / draws.size) + 1e-12


def test_measure_vacuum():
    out = measure(Ensemble.pure(fock.vacuum()), [H("6a")], DetectorModel(0.5, 0.5))
    assert len(out) == 1
    r, p, _ = out[0]
    assert r.total() == 0 and p == pytest.approx(1)


def test_measure_faithful_and_trace_preserving():
    r2 = 2**-0.5
    s = superpose([(r2, basis_state({H("6a"): 1, H("8a"): 1})), (r2, basis_state({V("8a"): 1}))])
    out = measure(Ensemble.pure(s), [H("6a")], DetectorModel(0.6, 1.0))
    probs = {r.get(H("6a")): p for r, p, _ in out}
    assert probs == pytest.approx({1: 0.3, 0: 0.7})
    cond = {r.get(H("6a")): e for r, _, e in out}
    assert cond[1].branches[0][1] == basis_state({H("8a"): 1})
    # a missed click leaves a mixture of both branches
    assert len(cond[0]) == 2


def test_classify_sides():
    cls = classify(ReportedPattern.of({H("6a"): 1, V("6a"): 1, H("6b"): 1, V("7b"): 1}))
    assert cls.accepted
    assert cls.a_side is SideClass.SAME_PORT_6 and cls.b_side is SideClass.DIFFERENT_PORTS
    assert not classify(ReportedPattern.of({H("6a"): 2, V("6b"): 1, H("7b"): 1})).accepted
    assert not classify(ReportedPattern.of({H("6a"): 1, V("6a"): 1})).accepted


def test_sixteen_accepted_patterns():
    pats = accepted_patterns()
    assert len(pats) == len(set(pats)) == 16
    assert all(classify(p).accepted for p in pats)
    assert all(p.total() == 4 for p in pats)


def test_reported_pattern_drops_zeros_and_orders():
    a = ReportedPattern.of({V("6a"): 1, H("6a"): 0})
    assert a.counts == ((V("6a"), 1),)
    assert str(a) == "{6a:V=1}"
