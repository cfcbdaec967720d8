"""Photon counters with finite efficiency and limited multiplicity resolution.

Each arriving photon is registered independently with probability ``eta``.
When ``m >= 2`` photons are registered the counter resolves the multiplicity
with probability ``eta2 ** (m - 1)`` and otherwise reports a single click.
For two arrivals this gives a two-count report with probability
``eta**2 * eta2``; ``eta2 = 0`` is an ordinary avalanche photodiode.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .fock import Ensemble, ModeId, PureState, H, V, split_by_counts


@dataclass(frozen=True)
class DetectorModel:
    eta: float = 1.0
    eta2: float = 1.0

    def __post_init__(self):
        for name in ("eta", "eta2"):
            x = getattr(self, name)
            if not 0 <= x <= 1:
                raise ValueError(f"{name}={x} outside [0, 1]")

    @classmethod
    def ideal(cls) -> "DetectorModel":
        return cls(1.0, 1.0)


@lru_cache(maxsize=4096)
def _response(n: int, eta: float, eta2: float) -> tuple[tuple[int, float], ...]:
    out: dict[int, float] = defaultdict(float)
    for m in range(n + 1):
        p = comb(n, m) * eta**m * (1 - eta) ** (n - m)
        if p == 0:
            continue
        if m <= 1:
            out[m] += p
        else:
            resolved = eta2 ** (m - 1)
            out[m] += p * resolved
            out[1] += p * (1 - resolved)
    return tuple(sorted((k, v) for k, v in out.items() if v > 0))


def response_distribution(n_arrived: int, d: DetectorModel) -> dict[int, float]:
    """Reported count distribution for ``n_arrived`` photons on one channel."""
    if n_arrived < 0:
        raise ValueError("photon number must be non-negative")
    return dict(_response(n_arrived, d.eta, d.eta2))


def sample_response(n_arrived: int, d: DetectorModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo draws from the same generative model."""
    registered = rng.binomial(n_arrived, d.eta, size=size)
    resolved = rng.random(size) < np.power(d.eta2, np.maximum(registered - 1, 0))
    return np.where(registered <= 1, registered, np.where(resolved, registered, 1))


def effective_eta2_multiplex(n_branches: int) -> float:
    """Two-photon discrimination of an ``N``-way split onto on/off detectors."""
    if n_branches < 1:
        raise ValueError("need at least one branch")
    return 1 - 1 / n_branches


@dataclass(frozen=True, order=True)
class ReportedPattern:
    counts: tuple[tuple[ModeId, int], ...] = ()

    @classmethod
    def of(cls, counts: Mapping[ModeId, int]) -> "ReportedPattern":
        for m, n in counts.items():
            if n < 0:
                raise ValueError(f"negative count on {m}")
        return cls(tuple(sorted((m, int(n)) for m, n in counts.items() if n)))

    def get(self, mode: ModeId) -> int:
        for m, n in self.counts:
            if m == mode:
                return n
        return 0

    def as_dict(self) -> dict[ModeId, int]:
        return dict(self.counts)

    def total(self) -> int:
        return sum(n for _, n in self.counts)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{m}={n}" for m, n in self.counts) + "}"


class SideClass(str, Enum):
    DIFFERENT_PORTS = "DifferentPorts"
    SAME_PORT_6 = "SamePort6"
    SAME_PORT_7 = "SamePort7"
    NA = "n/a"


class Side(NamedTuple):
    """A Bell-measurement side: two output paths of one beam splitter."""

    name: str
    port6: str
    port7: str

    def channels(self) -> list[ModeId]:
        return [H(self.port6), V(self.port6), H(self.port7), V(self.port7)]


def default_sides(prefix: str = "") -> tuple[Side, Side]:
    return (Side("a", prefix + "6a", prefix + "7a"), Side("b", prefix + "6b", prefix + "7b"))


def detector_channels(sides: Sequence[Side]) -> list[ModeId]:
    return [m for s in sides for m in s.channels()]


@dataclass(frozen=True)
class AcceptClass:
    accepted: bool
    a_side: SideClass
    b_side: SideClass

    def side(self, name: str) -> SideClass:
        return {"a": self.a_side, "b": self.b_side}[name]


def classify_side(r: ReportedPattern, side: Side) -> SideClass:
    h6, v6 = r.get(H(side.port6)), r.get(V(side.port6))
    h7, v7 = r.get(H(side.port7)), r.get(V(side.port7))
    if h6 + h7 != 1 or v6 + v7 != 1:
        return SideClass.NA
    if h6 and v6:
        return SideClass.SAME_PORT_6
    if h7 and v7:
        return SideClass.SAME_PORT_7
    return SideClass.DIFFERENT_PORTS


def classify(r: ReportedPattern, sides: Sequence[Side] | None = None) -> AcceptClass:
    """Accept iff each side reports exactly one H and one V photon."""
    a, b = sides or default_sides()
    ca, cb = classify_side(r, a), classify_side(r, b)
    ok = ca is not SideClass.NA and cb is not SideClass.NA
    return AcceptClass(ok, ca if ok else SideClass.NA, cb if ok else SideClass.NA)


def accepted_patterns(sides: Sequence[Side] | None = None) -> list[ReportedPattern]:
    """All heralding patterns: one H and one V on each side."""
    sides = sides or default_sides()
    per_side = []
    for s in sides:
        per_side.append([{H(hp): 1, V(vp): 1} for hp in (s.port6, s.port7) for vp in (s.port6, s.port7)])
    out = []
    for combo in itertools.product(*per_side):
        counts: dict[ModeId, int] = {}
        for c in combo:
            for m, n in c.items():
                counts[m] = counts.get(m, 0) + n
        out.append(ReportedPattern.of(counts))
    return sorted(out)


class Projection(NamedTuple):
    """Number-basis decomposition of an ensemble on a fixed channel list.

    ``parts`` maps a true count vector (ordered like ``channels``) to the
    weighted, normalized states left on the remaining modes.
    """

    channels: tuple[ModeId, ...]
    parts: dict[tuple[int, ...], list[tuple[float, PureState]]]


def project(e: Ensemble, channels: Iterable[ModeId]) -> Projection:
    chans = tuple(sorted(set(channels)))
    parts: dict[tuple[int, ...], list[tuple[float, PureState]]] = defaultdict(list)
    for w, s in e:
        for t, part in split_by_counts(s, chans).items():
            n2 = part.norm2()
            if n2 > 0:
                parts[t].append((w * n2, part.normalize()))
    return Projection(chans, dict(parts))


def _pattern_distribution(t: tuple[int, ...], d: DetectorModel) -> list[tuple[tuple[int, ...], float]]:
    dists = [_response(n, d.eta, d.eta2) for n in t]
    out = []
    for combo in itertools.product(*dists):
        p = 1.0
        for _, q in combo:
            p *= q
        out.append((tuple(k for k, _ in combo), p))
    return out


def measure_projection(
    proj: Projection, d: DetectorModel, keep=None
) -> list[tuple[ReportedPattern, float, Ensemble]]:
    """Distribute a projection over reported patterns.

    ``keep`` optionally filters reported patterns before conditional
    ensembles are assembled (probabilities of the rest are not computed).
    """
    chans = proj.channels
    acc: dict[tuple[int, ...], list[tuple[float, PureState]]] = defaultdict(list)
    kept: dict[tuple[int, ...], bool] = {}
    for t, branches in proj.parts.items():
        for r, p in _pattern_distribution(t, d):
            if p == 0:
                continue
            if keep is not None:
                if r not in kept:
                    kept[r] = keep(ReportedPattern.of(dict(zip(chans, r))))
                if not kept[r]:
                    continue
            acc[r].extend((w * p, s) for w, s in branches)
    out = []
    for r, branches in acc.items():
        prob = sum(w for w, _ in branches)
        if prob <= 0:
            continue
        pattern = ReportedPattern.of(dict(zip(chans, r)))
        out.append((pattern, prob, Ensemble(tuple((w / prob, s) for w, s in branches))))
    out.sort(key=lambda x: x[0])
    return out


def measure(e: Ensemble, channels: Iterable[ModeId], d: DetectorModel) -> list[tuple[ReportedPattern, float, Ensemble]]:
    """Exact outcome enumeration for photon counters on ``channels``.

    Returns ``(pattern, probability, conditional ensemble)`` triples; the
    conditional ensembles are normalized and live on the unmeasured modes.
    """
    return measure_projection(project(e, channels), d)
