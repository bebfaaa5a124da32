import numpy as np
import pytest
from hypothesis import strategies as st

from ile import chain


def complexes(max_magnitude: float):
    """Complex numbers in the closed disk of the given radius."""
    return st.builds(
        complex,
        st.floats(-max_magnitude, max_magnitude, allow_nan=False),
        st.floats(-max_magnitude, max_magnitude, allow_nan=False),
    ).filter(lambda z: abs(z) <= max_magnitude)


@pytest.fixture(scope="session")
def mode_tables():
    """Solved mode tables for the small ion counts the tests reuse."""
    return {n: chain.normal_modes(chain.equilibrium_positions(n)) for n in (1, 2, 3)}


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
