"""Sparse occupation-number states over labelled polarization modes.

A mode is a (spatial label, polarization) pair. Basis kets are stored as
sorted tuples of ``(ModeId, count)`` with zero counts omitted, so they are
hashable and canonical. States are immutable; every function returns a new
object.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

PRUNE = 1e-14


class Pol(str, Enum):
    H = "H"
    V = "V"

    def __repr__(self) -> str:
        return self.value


class ModeId(NamedTuple):
    spatial: str
    pol: Pol

    def __str__(self) -> str:
        return f"{self.spatial}:{self.pol.value}"

    @classmethod
    def parse(cls, text: str) -> "ModeId":
        """Parse ``"6a:H"`` into a ModeId."""
        spatial, _, pol = text.rpartition(":")
        if not spatial or pol not in ("H", "V"):
            raise ValueError(f"bad mode id {text!r}, expected '<label>:H' or '<label>:V'")
        return cls(spatial, Pol(pol))


def H(spatial: str) -> ModeId:
    return ModeId(spatial, Pol.H)


def V(spatial: str) -> ModeId:
    return ModeId(spatial, Pol.V)


def modes_of(*spatials: str) -> list[ModeId]:
    """Both polarization modes of every spatial label, H first."""
    return [m for s in spatials for m in (H(s), V(s))]


FockBasis = tuple  # tuple[tuple[ModeId, int], ...], sorted, no zero counts


def fock_basis(occupations: Mapping[ModeId, int]) -> FockBasis:
    for mode, n in occupations.items():
        if n < 0:
            raise ValueError(f"negative photon count {n} for mode {mode}")
    return tuple(sorted((m, int(n)) for m, n in occupations.items() if n))


def photon_number(basis: FockBasis) -> int:
    return sum(n for _, n in basis)


class PureState:
    """Sparse complex superposition of Fock basis kets.

    Not normalized automatically. Amplitudes below ``PRUNE`` are dropped.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[FockBasis, complex] | None = None):
        self._terms = {k: complex(v) for k, v in (terms or {}).items() if abs(v) >= PRUNE}

    @property
    def terms(self) -> Mapping[FockBasis, complex]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PureState):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "PureState") -> "PureState":
        return superpose([(1.0, self), (1.0, other)])

    def __sub__(self, other: "PureState") -> "PureState":
        return superpose([(1.0, self), (-1.0, other)])

    def __mul__(self, c: complex) -> "PureState":
        return PureState({k: c * v for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "PureState":
        return self * -1

    def __repr__(self) -> str:
        if not self._terms:
            return "PureState(0)"
        parts = []
        for basis, amp in sorted(self._terms.items()):
            ket = " ".join(f"{m}^{n}" if n > 1 else str(m) for m, n in basis) or "vac"
            parts.append(f"({amp.real:+.6g}{amp.imag:+.6g}j)|{ket}>")
        return "PureState(" + " ".join(parts) + ")"

    def norm2(self) -> float:
        return sum(abs(v) ** 2 for v in self._terms.values())

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def normalize(self) -> "PureState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return self * (1 / n)

    def modes(self) -> set[ModeId]:
        """Modes occupied in at least one term."""
        return {m for basis in self._terms for m, _ in basis}

    def photon_numbers(self) -> set[int]:
        return {photon_number(b) for b in self._terms}

    def amplitude(self, occupations: Mapping[ModeId, int]) -> complex:
        return self._terms.get(fock_basis(occupations), 0j)


def basis_state(occupations: Mapping[ModeId, int] | None = None) -> PureState:
    return PureState({fock_basis(occupations or {}): 1.0})


def vacuum() -> PureState:
    return basis_state({})


def superpose(terms: Iterable[tuple[complex, PureState]]) -> PureState:
    acc: dict[FockBasis, complex] = defaultdict(complex)
    for c, s in terms:
        for k, v in s.terms.items():
            acc[k] += c * v
    return PureState(acc)


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if len(a) > len(b):
        return sum(a.terms[k].conjugate() * v for k, v in b.terms.items() if k in a.terms)
    return sum(v.conjugate() * b.terms[k] for k, v in a.terms.items() if k in b.terms)


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 of the normalized vectors; zero if either is the zero vector."""
    na, nb = a.norm2(), b.norm2()
    if na == 0 or nb == 0:
        return 0.0
    return abs(inner_product(a, b)) ** 2 / (na * nb)


def tensor(a: PureState, b: PureState) -> PureState:
    overlap = a.modes() & b.modes()
    if overlap:
        raise ValueError(f"tensor product of states sharing modes {sorted(map(str, overlap))}")
    out: dict[FockBasis, complex] = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            out[tuple(sorted(ka + kb))] = va * vb
    return PureState(out)


def tensor_all(states: Sequence[PureState]) -> PureState:
    out = vacuum()
    for s in states:
        out = tensor(out, s)
    return out


def relabel(s: PureState, mapping: Mapping[ModeId, ModeId]) -> PureState:
    """Rename modes. Targets must not collide with untouched occupied modes."""
    out: dict[FockBasis, complex] = {}
    for basis, amp in s.terms.items():
        occ: dict[ModeId, int] = {}
        for m, n in basis:
            m2 = mapping.get(m, m)
            if m2 in occ:
                raise ValueError(f"relabel collision on mode {m2}")
            occ[m2] = n
        out[fock_basis(occ)] = amp
    return PureState(out)


def split_by_counts(s: PureState, modes: Iterable[ModeId]) -> dict[tuple[int, ...], PureState]:
    """Decompose ``s`` by the photon counts on ``modes``.

    Keys are count vectors in the order of ``sorted(modes)``; values are the
    (unnormalized) components with those modes removed.
    """
    order = sorted(set(modes))
    index = {m: i for i, m in enumerate(order)}
    parts: dict[tuple[int, ...], dict[FockBasis, complex]] = defaultdict(dict)
    for basis, amp in s.terms.items():
        counts = [0] * len(order)
        rest = []
        for m, n in basis:
            i = index.get(m)
            if i is None:
                rest.append((m, n))
            else:
                counts[i] = n
        parts[tuple(counts)][tuple(rest)] = amp
    return {k: PureState(v) for k, v in parts.items()}


def number_distribution(s: PureState, modes: Iterable[ModeId]) -> dict[tuple[int, ...], float]:
    """Joint photon-count distribution on ``modes`` (in sorted mode order)."""
    return {k: part.norm2() for k, part in split_by_counts(s, modes).items()}


def total_number_distribution(s: PureState, modes: Iterable[ModeId]) -> dict[int, float]:
    out: dict[int, float] = defaultdict(float)
    for counts, p in number_distribution(s, modes).items():
        out[sum(counts)] += p
    return dict(out)


@dataclass(frozen=True)
class Ensemble:
    """Classical mixture of normalized pure states.

    Weights may sum to less than one; that represents a heralded sub-event
    and is never renormalized implicitly.
    """

    branches: tuple[tuple[float, PureState], ...] = ()

    def __post_init__(self):
        for w, _ in self.branches:
            if w < 0:
                raise ValueError(f"negative ensemble weight {w}")

    @classmethod
    def pure(cls, s: PureState, weight: float | None = None) -> "Ensemble":
        """Wrap a state; its squared norm becomes the weight unless given."""
        n2 = s.norm2()
        if n2 == 0:
            return cls(())
        return cls(((n2 if weight is None else weight, s.normalize()),))

    @classmethod
    def from_unnormalized(cls, parts: Iterable[tuple[float, PureState]]) -> "Ensemble":
        """Build from (weight, state) where each state may carry extra norm."""
        out = []
        for w, s in parts:
            n2 = s.norm2()
            if w * n2 > 0:
                out.append((w * n2, s.normalize()))
        return cls(tuple(out))

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def total_weight(self) -> float:
        return sum(w for w, _ in self.branches)

    def normalize(self) -> "Ensemble":
        t = self.total_weight()
        if t == 0:
            raise ValueError("cannot normalize an empty ensemble")
        return Ensemble(tuple((w / t, s) for w, s in self.branches))

    def scale(self, factor: float) -> "Ensemble":
        return Ensemble(tuple((w * factor, s) for w, s in self.branches))

    def map(self, fn) -> "Ensemble":
        """Apply a norm-preserving state map to every branch."""
        return Ensemble(tuple((w, fn(s)) for w, s in self.branches))

    def modes(self) -> set[ModeId]:
        return set().union(*(s.modes() for _, s in self.branches)) if self.branches else set()

    def merge_identical(self) -> "Ensemble":
        """Merge branches whose term maps are bitwise equal."""
        acc: dict[PureState, float] = {}
        for w, s in self.branches:
            acc[s] = acc.get(s, 0.0) + w
        return Ensemble(tuple((w, s) for s, w in acc.items()))

    def __add__(self, other: "Ensemble") -> "Ensemble":
        return Ensemble(self.branches + other.branches)


def mix(ensembles: Iterable[Ensemble]) -> Ensemble:
    out: tuple = ()
    for e in ensembles:
        out += e.branches
    return Ensemble(out)


def ensemble_tensor(a: Ensemble, b: Ensemble) -> Ensemble:
    return Ensemble(tuple((wa * wb, tensor(sa, sb)) for wa, sa in a for wb, sb in b))


def discard_modes(e: Ensemble, modes: Iterable[ModeId]) -> Ensemble:
    """Trace out ``modes`` in their photon-number basis."""
    modes = list(modes)
    out = []
    for w, s in e:
        for part in split_by_counts(s, modes).values():
            n2 = part.norm2()
            if n2 > 0:
                out.append((w * n2, part.normalize()))
    return Ensemble(tuple(out))


def number_distribution_ensemble(e: Ensemble, modes: Iterable[ModeId]) -> dict[tuple[int, ...], float]:
    modes = list(modes)
    out: dict[tuple[int, ...], float] = defaultdict(float)
    for w, s in e:
        for k, p in number_distribution(s, modes).items():
            out[k] += w * p
    return dict(out)
