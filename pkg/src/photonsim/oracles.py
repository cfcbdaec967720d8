"""Reference computations that share no code with the sparse simulator."""

from __future__ import annotations

import itertools
import math

import numpy as np


def permanent(m: np.ndarray) -> complex:
    n = m.shape[0]
    if n == 0:
        return 1.0
    return sum(math.prod(m[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def occupation_basis(n_modes: int, n_photons: int) -> list[tuple[int, ...]]:
    return [c for c in itertools.product(range(n_photons + 1), repeat=n_modes) if sum(c) == n_photons]


def fock_transfer(u: np.ndarray, n_photons: int) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Dense Fock-space matrix of a mode unitary in the fixed-photon-number block.

    ``<m|U|n> = perm(U[m-rows, n-cols]) / sqrt(prod n! prod m!)``.
    """
    d = u.shape[0]
    basis = occupation_basis(d, n_photons)
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for j, n in enumerate(basis):
        cols = [k for k, c in enumerate(n) for _ in range(c)]
        for i, m in enumerate(basis):
            rows = [k for k, c in enumerate(m) for _ in range(c)]
            norm = math.sqrt(math.prod(map(math.factorial, n)) * math.prod(map(math.factorial, m)))
            out[i, j] = permanent(u[np.ix_(rows, cols)]) / norm
    return out, basis
