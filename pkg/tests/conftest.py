from fractions import Fraction

import pytest
from hypothesis import strategies as st

from corners.arrangement import MarkedSet, SetArrangement
from corners.lattice import FiniteLattice, FinitePoset


def diamond() -> FiniteLattice:
    # bottom < a, b, c < top
    return FiniteLattice(FinitePoset.from_covers(5, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)],
                                                 ["0", "a", "b", "c", "1"]))


def pentagon() -> FiniteLattice:
    # bottom < a < b < top, bottom < c < top
    return FiniteLattice(FinitePoset.from_covers(5, [(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)],
                                                 ["0", "a", "b", "c", "1"]))


SHAPES = [FiniteLattice.chain(1), FiniteLattice.chain(2), FiniteLattice.chain(3), FiniteLattice.chain(5),
          FiniteLattice.boolean(2), diamond(), pentagon()]


def arrangement_from_minima(S: FiniteLattice, ambient: MarkedSet, minima) -> SetArrangement:
    """``I(s) = {i : minima[i] <= s}``; every valid arrangement has this form."""
    return SetArrangement(S, ambient, [{i for i in ambient.coords if S.leq[minima[i - 1]][s]}
                                       for s in S.elements()])


@st.composite
def arrangement_pairs(draw, max_m=3, max_n=3):
    S = draw(st.sampled_from(SHAPES))
    m = draw(st.integers(0, max_m))
    n = draw(st.integers(1, max_n))
    A = MarkedSet(m, draw(st.integers(0, m)))
    B = MarkedSet(n, draw(st.integers(0, n)))
    mi = draw(st.lists(st.integers(0, len(S) - 1), min_size=m, max_size=m))
    mj = draw(st.lists(st.integers(0, len(S) - 1), min_size=n, max_size=n))
    return arrangement_from_minima(S, A, mi), arrangement_from_minima(S, B, mj)


rationals = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@pytest.fixture
def chain_pair():
    S = FiniteLattice.chain(2)
    I = SetArrangement(S, MarkedSet(2, 2), [{1}, {1, 2}])
    J = SetArrangement(S, MarkedSet(3, 3), [{1}, {1, 2, 3}])
    return I, J


Q = Fraction


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
