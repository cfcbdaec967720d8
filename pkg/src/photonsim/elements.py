"""Passive linear-optical elements and the loss channel.

An element is a unitary ``U`` acting on creation operators,
``a_in[j]^dagger -> sum_k U[k, j] a_out[k]^dagger``. Applying it to a Fock
state substitutes every input creation operator and re-expands the product
into occupation kets. Photon number is conserved, so nothing is truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import (
    Ensemble,
    ModeId,
    PureState,
    discard_modes,
    fock_basis,
    H,
    V,
)

UNITARY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Element:
    input_modes: tuple[ModeId, ...]
    output_modes: tuple[ModeId, ...]
    matrix: np.ndarray
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "input_modes", tuple(self.input_modes))
        object.__setattr__(self, "output_modes", tuple(self.output_modes))
        u = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", u)
        n = len(self.input_modes)
        if len(self.output_modes) != n or u.shape != (n, n):
            raise ValueError(f"element {self.name!r}: matrix shape {u.shape} does not match {n} modes")
        if len(set(self.input_modes)) != n or len(set(self.output_modes)) != n:
            raise ValueError(f"element {self.name!r}: repeated mode")
        if not np.allclose(u.conj().T @ u, np.eye(n), atol=UNITARY_TOL, rtol=0):
            raise ValueError(f"element {self.name!r} is not unitary")

    def _expand(self, counts: tuple[int, ...]) -> list[tuple[tuple[int, ...], complex]]:
        """Polynomial expansion of prod_j (sum_k U_kj b_k)^n_j / sqrt(n_j!).

        Returns monomial exponents with coefficients, without the output-side
        sqrt(m!) ket normalization.
        """
        hit = self._cache.get(counts)
        if hit is not None:
            return hit
        u = self.matrix
        dim = len(self.output_modes)
        norm = 1.0 / math.sqrt(math.prod(math.factorial(n) for n in counts))
        poly: dict[tuple[int, ...], complex] = {(0,) * dim: norm}
        for j, n in enumerate(counts):
            col = [(k, u[k, j]) for k in range(dim) if u[k, j] != 0]
            for _ in range(n):
                nxt: dict[tuple[int, ...], complex] = {}
                for mono, c in poly.items():
                    for k, ukj in col:
                        m = list(mono)
                        m[k] += 1
                        m = tuple(m)
                        nxt[m] = nxt.get(m, 0j) + c * ukj
                poly = nxt
        out = [(m, c) for m, c in poly.items() if c != 0]
        self._cache[counts] = out
        return out


def apply(e: Element, s: PureState) -> PureState:
    in_index = {m: i for i, m in enumerate(e.input_modes)}
    outs = e.output_modes
    acc: dict[tuple, complex] = {}
    for basis, amp in s.terms.items():
        counts = [0] * len(in_index)
        passthrough: dict[ModeId, int] = {}
        for m, n in basis:
            i = in_index.get(m)
            if i is None:
                passthrough[m] = n
            else:
                counts[i] = n
        for mono, c in e._expand(tuple(counts)):
            occ = dict(passthrough)
            coef = amp * c
            for k, mk in enumerate(mono):
                if mk:
                    p = occ.get(outs[k], 0)
                    coef *= math.sqrt(math.factorial(mk + p) / math.factorial(p))
                    occ[outs[k]] = mk + p
            key = fock_basis(occ)
            acc[key] = acc.get(key, 0j) + coef
    return PureState(acc)


def apply_all(elements: Sequence[Element], s: PureState) -> PureState:
    for e in elements:
        s = apply(e, s)
    return s


def apply_ensemble(e: Element, ens: Ensemble) -> Ensemble:
    return ens.map(lambda s: apply(e, s))


def identity(modes: Sequence[ModeId]) -> Element:
    return Element(tuple(modes), tuple(modes), np.eye(len(modes)), name="identity")


def compose(first: Element, second: Element) -> Element:
    """Single element equivalent to ``first`` followed by ``second``.

    ``second`` must act on exactly the output modes of ``first``.
    """
    if set(second.input_modes) != set(first.output_modes):
        raise ValueError("composed elements must chain on the same mode set")
    perm = [second.input_modes.index(m) for m in first.output_modes]
    u = second.matrix[:, perm] @ first.matrix
    return Element(first.input_modes, second.output_modes, u, name=f"{second.name}*{first.name}")


def wave_plate(spatial: str, theta: float) -> Element:
    """Half-wave plate turning linear polarization by ``theta`` radians.

    H -> cos(theta) H + sin(theta) V and V -> sin(theta) H - cos(theta) V,
    i.e. a plate with its axis at ``theta / 2``. At 45 degrees this takes
    V to (H - V)/sqrt2; at 90 degrees it swaps H and V.
    """
    c, s = math.cos(theta), math.sin(theta)
    return Element(
        (H(spatial), V(spatial)),
        (H(spatial), V(spatial)),
        np.array([[c, s], [s, -c]]),
        name=f"WP({spatial},{math.degrees(theta):g}deg)",
    )


def rotator(spatial: str, theta: float) -> Element:
    """Proper polarization rotation: H -> cos H + sin V, V -> -sin H + cos V."""
    c, s = math.cos(theta), math.sin(theta)
    return Element(
        (H(spatial), V(spatial)),
        (H(spatial), V(spatial)),
        np.array([[c, -s], [s, c]]),
        name=f"ROT({spatial},{math.degrees(theta):g}deg)",
    )


def pbs(in1: str, in2: str, out1: str, out2: str) -> Element:
    """Polarizing beam splitter, H transmitted and V reflected.

    Routing: H in1 -> out2, H in2 -> out1, V in1 -> out1, V in2 -> out2.
    """
    ins = (H(in1), V(in1), H(in2), V(in2))
    outs = (H(out1), V(out1), H(out2), V(out2))
    u = np.zeros((4, 4))
    u[2, 0] = 1  # H in1 -> H out2
    u[1, 1] = 1  # V in1 -> V out1
    u[0, 2] = 1  # H in2 -> H out1
    u[3, 3] = 1  # V in2 -> V out2
    return Element(ins, outs, u, name=f"PBS({in1},{in2})")


def beam_splitter(in1: str, in2: str, out1: str, out2: str) -> Element:
    """Polarization-independent 50/50 splitter.

    a1 -> (b1 + b2)/sqrt2, a2 -> (b1 - b2)/sqrt2 for each polarization.
    """
    ins = (H(in1), V(in1), H(in2), V(in2))
    outs = (H(out1), V(out1), H(out2), V(out2))
    r = 1 / math.sqrt(2)
    u = np.zeros((4, 4))
    for p in (0, 1):
        u[p, p] = r
        u[p + 2, p] = r
        u[p, p + 2] = r
        u[p + 2, p + 2] = -r
    return Element(ins, outs, u, name=f"BS({in1},{in2})")


def phase_modulator(spatial: str, phase_h: float, phase_v: float, out: str | None = None) -> Element:
    """Diagonal phases on the two polarizations, optionally renaming the path."""
    out = out or spatial
    return Element(
        (H(spatial), V(spatial)),
        (H(out), V(out)),
        np.diag([np.exp(1j * phase_h), np.exp(1j * phase_v)]),
        name=f"PM({spatial})",
    )


@dataclass(frozen=True)
class LossChannel:
    mode: ModeId
    transmittance: float
    env_mode: ModeId | None = None

    def __post_init__(self):
        if not 0 <= self.transmittance <= 1:
            raise ValueError(f"transmittance {self.transmittance} outside [0, 1]")
        if self.env_mode is None:
            object.__setattr__(self, "env_mode", ModeId(f"env[{self.mode}]", self.mode.pol))

    def coupler(self) -> Element:
        t = math.sqrt(self.transmittance)
        r = math.sqrt(1 - self.transmittance)
        modes = (self.mode, self.env_mode)
        return Element(modes, modes, np.array([[t, -r], [r, t]]), name=f"loss({self.mode})")


def loss(l: LossChannel, e: Ensemble) -> Ensemble:
    """Beam-splitter coupling to a fresh environment mode, then trace it out."""
    if l.env_mode in e.modes():
        raise ValueError(f"environment mode {l.env_mode} is already occupied")
    c = l.coupler()
    return discard_modes(e.map(lambda s: apply(c, s)), [l.env_mode])


def spatial_loss(spatial: str, transmittance: float, e: Ensemble) -> Ensemble:
    """Same loss on both polarizations of a path."""
    for m in (H(spatial), V(spatial)):
        e = loss(LossChannel(m, transmittance), e)
    return e
