import itertools
from fractions import Fraction as Q

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SHAPES, arrangement_from_minima, arrangement_pairs, diamond
from corners.arrangement import (ArrangementError, DomainError, MarkedSet, SetArrangement, product, restrict,
                                 support)
from corners.lattice import FiniteLattice, LatticeError, LatticeMap


def test_marked_set_bounds():
    with pytest.raises(ArrangementError):
        MarkedSet(2, 3)
    A = MarkedSet(3, 1)
    assert A.marked == {1} and A.unmarked == {2, 3}
    assert A.contains((-1, 0, 2)) and not A.contains((0, -1, 0))


def test_normalize_moves_marked_first():
    A, relabel = MarkedSet.normalize(4, {2, 4})
    assert A == MarkedSet(4, 2)
    assert relabel == {2: 1, 4: 2, 1: 3, 3: 4}


def test_check_point():
    A = MarkedSet(2, 1)
    assert A.check_point((Q(-1, 2), 0)) == (Q(-1, 2), 0)
    with pytest.raises(DomainError):
        A.check_point((0, Q(-1, 3)))
    with pytest.raises(DomainError):
        A.check_point((0,))


def test_validate_reports_each_rule():
    S = FiniteLattice.boolean(2)  # elements 0 < 1, 2 < 3
    amb = MarkedSet(2, 2)
    assert SetArrangement(S, amb, [set(), {1}, {2}, {1, 2}]).is_valid()
    kinds = {v["kind"] for v in SetArrangement(S, amb, [{1}, {1}, {2}, {1}]).validate()}
    assert kinds == {"top", "monotone", "meet"}


@given(arrangement_pairs())
def test_generated_arrangements_are_valid(pair):
    for A in pair:
        assert A.is_valid()


@given(arrangement_pairs())
def test_minimal_element_recovers_minima(pair):
    A = pair[0]
    for i in A.ambient.coords:
        s = A.minimal_element(i)
        assert i in A(s)
        assert all(A.shape.leq[s][t] for t in A.shape.elements() if i in A(t))


@given(arrangement_pairs(), st.data())
def test_scope_is_least_containing_support(pair, data):
    A = pair[0]
    m = A.ambient.m
    p = [data.draw(st.integers(0, 2)) for _ in range(m)]
    s = A.scope(p)
    assert support(p) <= A(s)
    assert all(A.shape.leq[s][t] for t in A.shape.elements() if support(p) <= A(t))


def test_neatness():
    S = FiniteLattice.chain(2)
    assert SetArrangement(S, MarkedSet(2, 1), [{2}, {1, 2}]).is_neat()
    assert not SetArrangement(S, MarkedSet(2, 1), [{1}, {1, 2}]).is_neat()


@given(arrangement_pairs(max_m=2, max_n=2))
def test_product_is_valid_and_componentwise(pair):
    I, J = pair
    if I.shape != J.shape:
        return
    P = product(I, J)
    assert P.is_valid()
    a, b = I.ambient, J.ambient
    assert P.ambient == MarkedSet(a.m + b.m, a.k + b.k)
    n = len(J.shape)
    for s, t in itertools.product(I.shape.elements(), J.shape.elements()):
        assert len(P(s * n + t)) == len(I(s)) + len(J(t))
        assert len(P(s * n + t) & P.ambient.marked) == len(I(s) & a.marked) + len(J(t) & b.marked)


def test_product_relabelling():
    S = FiniteLattice.chain(1)
    I = SetArrangement(S, MarkedSet(2, 1), [{1, 2}])
    J = SetArrangement(S, MarkedSet(2, 1), [{1, 2}])
    P = product(I, J)
    assert P.ambient == MarkedSet(4, 2)


def test_restrict_along_inclusion():
    D = diamond()
    I = arrangement_from_minima(D, MarkedSet(3, 3), [1, 2, 3])
    C = FiniteLattice.chain(3)
    mu = LatticeMap(C, D, (0, 1, 4))
    R = restrict(I, mu)
    assert R.is_valid()
    assert [sorted(R(t)) for t in C.elements()] == [[], [1], [1, 2, 3]]


def test_restrict_rejects_non_hom():
    D = diamond()
    I = arrangement_from_minima(D, MarkedSet(1, 1), [0])
    with pytest.raises(LatticeError):
        restrict(I, LatticeMap(FiniteLattice.chain(2), D, (1, 0)))


@pytest.mark.parametrize("S", SHAPES, ids=lambda S: f"size{len(S)}")
def test_constant_is_valid(S):
    assert SetArrangement.constant(S, MarkedSet(2, 1)).is_valid()
