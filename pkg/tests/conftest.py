import math
import random
from fractions import Fraction

import numpy as np
import pytest

from mqsp.laurent import FLOAT, BiLaurent, ExactComplex
from mqsp.protocol import PolyPair, Protocol, UnitPhase


def pythagorean_phase(rng: random.Random) -> UnitPhase:
    """Random exact unit phase: (u^2 - v^2 + 2uv i) / (u^2 + v^2), rotated by a power of i."""
    if rng.random() < 0.15:
        return UnitPhase(ExactComplex(*rng.choice([(1, 0), (-1, 0), (0, 1), (0, -1)])))
    u, v = rng.randint(1, 9), rng.randint(1, 9)
    r = u * u + v * v
    z = ExactComplex(Fraction(u * u - v * v, r), Fraction(2 * u * v, r))
    z = z * ExactComplex(*rng.choice([(1, 0), (-1, 0), (0, 1), (0, -1)]))
    return UnitPhase(z)


def random_exact_protocol(rng: random.Random, n: int, s=None) -> Protocol:
    if s is None:
        s = [rng.randint(0, 1) for _ in range(n)]
    return Protocol(tuple(s), tuple(pythagorean_phase(rng) for _ in range(n + 1)))


def random_float_protocol(rng: random.Random, n: int) -> Protocol:
    s = [rng.randint(0, 1) for _ in range(n)]
    return Protocol(tuple(s), tuple(UnitPhase.from_angle(rng.uniform(-math.pi, math.pi)) for _ in range(n + 1)))


def random_float_pair(rng: np.random.Generator, n: int, m: int) -> PolyPair:
    """Arbitrary (non-unitary) float pair filling the (m, n-m) box."""
    entries_p, entries_q = {}, {}
    for j in range(-m, m + 1):
        for k in range(-(n - m), n - m + 1):
            entries_p[(j, k)] = complex(*rng.normal(size=2))
            entries_q[(j, k)] = complex(*rng.normal(size=2))
    return PolyPair(BiLaurent(entries_p, FLOAT), BiLaurent(entries_q, FLOAT), n, m)


@pytest.fixture
def rng():
    return random.Random(20260101)


@pytest.fixture
def nprng():
    return np.random.default_rng(20260101)



# -- acceptance summary -------------------------------------------------------------


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = []
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
