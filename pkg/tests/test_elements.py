import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonsim import elements, fock, gates, oracles
from photonsim.elements import apply, beam_splitter, pbs, phase_modulator, wave_plate
from photonsim.fock import Ensemble, H, V, basis_state, superpose

from conftest import sparse_states

R = 1 / math.sqrt(2)


def close(a, b, tol=1e-12):
    return (a - b).norm() < tol


def test_wave_plate_45_on_h_and_v():
    wp = wave_plate("3a", math.radians(45))
    h, v = basis_state({H("3a"): 1}), basis_state({V("3a"): 1})
    assert close(apply(wp, h), superpose([(R, h), (R, v)]))
    assert close(apply(wp, v), superpose([(R, h), (-R, v)]))


def test_wave_plate_zero_is_identity_on_h():
    h = basis_state({H("x"): 1})
    assert close(apply(wave_plate("x", 0.0), h), h)


def test_wave_plate_90_swaps():
    wp = wave_plate("1a", math.radians(90))
    assert close(apply(wp, basis_state({H("1a"): 1})), basis_state({V("1a"): 1}))
    assert close(apply(wp, basis_state({V("1a"): 1})), basis_state({H("1a"): 1}))


def test_rotator_is_proper_rotation():
    rot = elements.rotator("x", math.radians(45))
    v = basis_state({V("x"): 1})
    assert close(apply(rot, v), superpose([(-R, basis_state({H("x"): 1})), (R, v)]))


def test_pbs_routes_h_and_v():
    p = pbs("2a", "3a", "4a", "5a")
    assert close(apply(p, basis_state({H("3a"): 1})), basis_state({H("4a"): 1}))
    assert close(apply(p, basis_state({H("2a"): 1})), basis_state({H("5a"): 1}))
    assert close(apply(p, basis_state({V("2a"): 1})), basis_state({V("4a"): 1}))
    assert close(apply(p, basis_state({V("3a"): 1})), basis_state({V("5a"): 1}))


@pytest.mark.parametrize(
    "pol3, expected",
    [
        (H, [({H("4a"): 1, H("5a"): 1}, R), ({H("4a"): 1, V("4a"): 1}, R)]),
        (V, [({V("4a"): 1, V("5a"): 1}, R), ({H("5a"): 1, V("5a"): 1}, R)]),
    ],
)
def test_wp2_and_pbs1_product_transformations(pol3, expected):
    s = basis_state({H("2a"): 1, pol3("3a"): 1})
    s = apply(pbs("2a", "3a", "4a", "5a"), apply(wave_plate("2a", math.radians(45)), s))
    want = superpose([(c, basis_state(occ)) for occ, c in expected])
    assert close(s, want)


def test_beam_splitter_single_photon_50_50():
    out = apply(beam_splitter("1a", "4a", "6a", "7a"), basis_state({H("1a"): 1}))
    assert abs(out.amplitude({H("6a"): 1})) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude({H("7a"): 1})) ** 2 == pytest.approx(0.5)


def test_hong_ou_mandel():
    out = apply(beam_splitter("x", "y", "u", "w"), basis_state({H("x"): 1, H("y"): 1}))
    want = superpose([(R, basis_state({H("u"): 2})), (-R, basis_state({H("w"): 2}))])
    assert close(out, want)
    assert abs(out.amplitude({H("u"): 1, H("w"): 1})) < 1e-12


def test_two_photons_same_input_port():
    # (b1 + b2)^2 / (2 sqrt2) |0>, expanded by hand
    out = apply(beam_splitter("x", "y", "u", "w"), basis_state({H("x"): 2}))
    assert out.amplitude({H("u"): 2}) == pytest.approx(0.5)
    assert out.amplitude({H("u"): 1, H("w"): 1}) == pytest.approx(R)
    assert out.amplitude({H("w"): 2}) == pytest.approx(0.5)


def test_phase_modulator():
    pm = phase_modulator("5a", 0.0, math.pi, out="8a")
    assert close(apply(pm, basis_state({V("5a"): 1})), -basis_state({V("8a"): 1}))
    assert close(apply(pm, basis_state({H("5a"): 1})), basis_state({H("8a"): 1}))
    s = basis_state({V("x"): 1})
    assert close(apply(phase_modulator("x", 0.0, 0.0), s), s)


def test_wp5_on_singlet_gives_four_term_pair():
    s = apply(wave_plate("3a", math.radians(45)), gates.singlet("3a", "3b"))
    want = superpose([
        (0.5, basis_state({V("3a"): 1, V("3b"): 1})),
        (0.5, basis_state({H("3a"): 1, V("3b"): 1})),
        (0.5, basis_state({V("3a"): 1, H("3b"): 1})),
        (-0.5, basis_state({H("3a"): 1, H("3b"): 1})),
    ])
    assert close(s, want)


def test_resource_pipeline_sectors():
    res = gates.passive_resource()
    beta = gates.beta_sector(res)
    assert beta.norm2() == pytest.approx(0.25, abs=1e-12)
    assert close(beta, 0.5 * gates.psi_state())
    assert fock.inner_product(beta.normalize(), beta.normalize()) == pytest.approx(1, abs=1e-12)
    # one photon in 4a with prob 1/2, none or two with 1/4 each (hand count)
    dist = fock.total_number_distribution(res, fock.modes_of("4a"))
    assert dist == pytest.approx({0: 0.25, 1: 0.5, 2: 0.25}, abs=1e-12)


def test_identity_element():
    s = superpose([(0.6, basis_state({H("x"): 1, V("y"): 1})), (0.8, basis_state({V("x"): 2}))])
    assert close(apply(elements.identity(fock.modes_of("x")), s), s)


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        elements.Element((H("x"),), (H("x"),), np.array([[2.0]]))


@pytest.mark.parametrize("t, present", [(1.0, 1.0), (0.0, 0.0), (0.5, 0.5), (0.81, 0.81)])
def test_loss_single_photon(t, present):
    ens = Ensemble.pure(basis_state({H("1a"): 1}))
    out = elements.loss(elements.LossChannel(H("1a"), t), ens)
    dist = fock.number_distribution_ensemble(out, [H("1a")])
    assert dist.get((1,), 0) == pytest.approx(present, abs=1e-12)
    assert dist.get((0,), 0) == pytest.approx(1 - present, abs=1e-12)


def test_loss_env_must_be_fresh():
    l = elements.LossChannel(H("1a"), 0.5)
    ens = Ensemble.pure(basis_state({H("1a"): 1, l.env_mode: 1}))
    with pytest.raises(ValueError):
        elements.loss(l, ens)


def _constructors():
    return [
        wave_plate("x", 0.3),
        elements.rotator("x", 1.1),
        phase_modulator("x", 0.4, 2.0, out="z"),
        pbs("x", "y", "u", "w"),
        beam_splitter("x", "y", "u", "w"),
        elements.LossChannel(H("x"), 0.3).coupler(),
    ]


@pytest.mark.parametrize("e", _constructors(), ids=lambda e: e.name)
def test_sparse_lift_matches_permanent_oracle(e):
    for n in range(4):
        dense, basis = oracles.fock_transfer(e.matrix, n)
        for j, occ in enumerate(basis):
            out = apply(e, basis_state(dict(zip(e.input_modes, occ))))
            col = np.array([out.amplitude(dict(zip(e.output_modes, m))) for m in basis])
            np.testing.assert_allclose(col, dense[:, j], atol=1e-10)


def test_random_three_mode_unitary_matches_oracle(rng):
    z = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    q, _ = np.linalg.qr(z)
    modes = (H("p"), H("q"), H("r"))
    e = elements.Element(modes, modes, q)
    for n in range(4):
        dense, basis = oracles.fock_transfer(q, n)
        for j, occ in enumerate(basis):
            out = apply(e, basis_state(dict(zip(modes, occ))))
            col = np.array([out.amplitude(dict(zip(modes, m))) for m in basis])
            np.testing.assert_allclose(col, dense[:, j], atol=1e-10)


@given(sparse_states(max_n=2), st.sampled_from(range(len(_constructors()))))
@settings(max_examples=60)
def test_unitarity_and_number_conservation(s, k):
    e = _constructors()[k]
    out = apply(e, s)
    assert abs(out.norm() - s.norm()) < 1e-12
    assert out.photon_numbers() <= s.photon_numbers() | ({0} if not len(out) else set())


@given(sparse_states())
@settings(max_examples=40)
def test_composition_matches_sequential(s):
    e1 = beam_splitter("x", "y", "u", "w")
    e2 = pbs("u", "w", "x", "y")
    both = elements.compose(e1, e2)
    assert close(apply(e2, apply(e1, s)), apply(both, s))
