from __future__ import annotations

import math

import pytest

from magloop.floquet import refine_loop
from magloop.landau import PulseSequence
from magloop.profiles import Biharmonic, Harmonic

# published loop amplitudes (three decimals) and the closing period
PRINTED_LOOPS = {
    "harmonic15": (Harmonic(-math.pi / 5, -1.152), 15),
    "harmonic24": (Harmonic(math.pi / 8, -0.815), 24),
    "biharmonic6": (Biharmonic(math.pi / 2, 9.966), 6),
}


@pytest.fixture(scope="session")
def refined_loops():
    """Exact loops nearest to the printed amplitudes (wide search window)."""
    return {name: refine_loop(prof, n, window=0.1) for name, (prof, n) in PRINTED_LOOPS.items()}


@pytest.fixture(scope="session")
def fuzzy_pulses():
    return PulseSequence((math.pi / 6, math.pi / 4, math.pi, math.pi / 3))


@pytest.fixture(scope="session")
def plain_pulses():
    return PulseSequence((0.25, 1.0, -0.25, -1.0))
