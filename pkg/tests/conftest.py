import numpy as np
import pytest
from hypothesis import strategies as st

from photonsim import fock
from photonsim.fock import H, V, basis_state


MODES = fock.modes_of("x", "y")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


complex_amps = st.builds(
    complex,
    st.floats(-2, 2, allow_nan=False, allow_infinity=False),
    st.floats(-2, 2, allow_nan=False, allow_infinity=False),
)


@st.composite
def sparse_states(draw, modes=MODES, max_terms=5, max_n=2):
    n = draw(st.integers(1, max_terms))
    terms = []
    for _ in range(n):
        occ = {m: draw(st.integers(0, max_n)) for m in modes}
        terms.append((draw(complex_amps), basis_state(occ)))
    return fock.superpose(terms)
