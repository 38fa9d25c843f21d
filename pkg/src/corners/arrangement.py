"""Marked finite sets, standard models and arrangements of coordinate sets.

Coordinates are numbered ``1..m``; in the normal form ``<m|k>`` the
coordinates ``1..k`` are marked (unrestricted) and the rest are
constrained to be non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .lattice import FiniteLattice, LatticeError, LatticeMap, product_lattice

MAX_COORDS = 16
MAX_SHAPE = 32


class ArrangementError(ValueError):
    pass


class DomainError(ValueError):
    """A point lies outside the model it was supposed to live in."""


@dataclass(frozen=True)
class MarkedSet:
    """The normal form ``<m|k>``."""

    m: int
    k: int

    def __post_init__(self):
        if not 0 <= self.k <= self.m:
            raise ArrangementError(f"need 0 <= k <= m, got <{self.m}|{self.k}>")
        if self.m > MAX_COORDS:
            raise ArrangementError(f"at most {MAX_COORDS} coordinates are supported")

    @classmethod
    def normalize(cls, m: int, marked) -> tuple["MarkedSet", dict[int, int]]:
        """Normal form of ``({1..m}, marked)`` and the relabelling into it."""
        marked = sorted(set(marked))
        if any(not 1 <= i <= m for i in marked):
            raise ArrangementError("marked coordinates must lie in 1..m")
        rest = [i for i in range(1, m + 1) if i not in marked]
        relabel = {old: new for new, old in enumerate(marked + rest, start=1)}
        return cls(m, len(marked)), relabel

    @property
    def coords(self) -> frozenset[int]:
        return frozenset(range(1, self.m + 1))

    @property
    def marked(self) -> frozenset[int]:
        return frozenset(range(1, self.k + 1))

    @property
    def unmarked(self) -> frozenset[int]:
        return frozenset(range(self.k + 1, self.m + 1))

    def contains(self, p: Sequence) -> bool:
        """Membership of ``p`` in the model: unmarked coordinates >= 0."""
        return len(p) == self.m and all(p[i - 1] >= 0 for i in self.unmarked)

    def check_point(self, p: Sequence) -> tuple[Fraction, ...]:
        if len(p) != self.m:
            raise DomainError(f"expected {self.m} coordinates, got {len(p)}")
        q = tuple(Fraction(v) for v in p)
        for i in self.unmarked:
            if q[i - 1] < 0:
                raise DomainError(f"coordinate {i} is unmarked and negative at {q}")
        return q


def support(p: Sequence) -> frozenset[int]:
    return frozenset(i for i, v in enumerate(p, start=1) if v != 0)


class SetArrangement:
    """A shape-indexed family ``s -> I(s)`` of coordinate subsets."""

    def __init__(self, shape: FiniteLattice, ambient: MarkedSet, assign: Sequence):
        if len(shape) > MAX_SHAPE:
            raise ArrangementError(f"shapes are capped at {MAX_SHAPE} elements")
        if len(assign) != len(shape):
            raise ArrangementError("one coordinate set per shape element is required")
        self.shape = shape
        self.ambient = ambient
        self.assign = tuple(frozenset(a) for a in assign)
        for s, a in enumerate(self.assign):
            if not a <= ambient.coords:
                raise ArrangementError(f"I({shape.labels[s]!r}) leaves the ambient coordinates")

    @classmethod
    def from_labels(cls, shape: FiniteLattice, ambient: MarkedSet, assign: Mapping) -> "SetArrangement":
        return cls(shape, ambient, [assign[lab] for lab in shape.labels])

    @classmethod
    def constant(cls, shape: FiniteLattice, ambient: MarkedSet) -> "SetArrangement":
        return cls(shape, ambient, [ambient.coords] * len(shape))

    def __call__(self, s: int) -> frozenset[int]:
        return self.assign[s]

    def __eq__(self, other) -> bool:
        return (isinstance(other, SetArrangement) and self.shape == other.shape
                and self.ambient == other.ambient and self.assign == other.assign)

    def __hash__(self) -> int:
        return hash((self.shape, self.ambient, self.assign))

    def __repr__(self) -> str:
        body = ", ".join(f"{lab!r}: {sorted(a)}" for lab, a in zip(self.shape.labels, self.assign))
        return f"SetArrangement(<{self.ambient.m}|{self.ambient.k}>, {{{body}}})"

    def validate(self) -> list[dict]:
        """Every violation of monotonicity, meet preservation or the top rule."""
        S, I = self.shape, self.assign
        out = []
        if I[S.top] != self.ambient.coords:
            out.append({"kind": "top", "element": S.labels[S.top]})
        for s in S.elements():
            for t in S.elements():
                if S.leq[s][t] and s != t and not I[s] <= I[t]:
                    out.append({"kind": "monotone", "pair": [S.labels[s], S.labels[t]]})
                if s < t and I[S.meet[s][t]] != I[s] & I[t]:
                    out.append({"kind": "meet", "pair": [S.labels[s], S.labels[t]]})
        return out

    def is_valid(self) -> bool:
        return not self.validate()

    def check(self) -> "SetArrangement":
        bad = self.validate()
        if bad:
            raise ArrangementError(f"invalid arrangement: {bad[0]}")
        return self

    def minimal_element(self, i: int) -> int:
        """The least shape element whose coordinate set contains ``i``."""
        return self.shape.meet_all(s for s in self.shape.elements() if i in self.assign[s])

    def scope(self, p: Sequence) -> int:
        """Meet of all ``s`` whose coordinate set contains the support of ``p``."""
        q = self.ambient.check_point(p)
        supp = support(q)
        return self.shape.meet_all(s for s in self.shape.elements() if supp <= self.assign[s])

    def is_neat(self) -> bool:
        unmarked = self.ambient.unmarked
        return all(unmarked <= a for a in self.assign)


def product(I: SetArrangement, J: SetArrangement) -> SetArrangement:
    """``(s, t) -> I(s) + J(t)`` over the product shape.

    Coordinates are relabelled so the result is in normal form: marked
    coordinates of ``I`` then of ``J``, then unmarked ones of ``I`` then ``J``.
    """
    a, b = I.ambient, J.ambient
    left = {}
    right = {}
    for i in range(1, a.k + 1):
        left[i] = i
    for j in range(1, b.k + 1):
        right[j] = a.k + j
    for i in range(a.k + 1, a.m + 1):
        left[i] = b.k + i
    for j in range(b.k + 1, b.m + 1):
        right[j] = a.m + j
    shape = product_lattice(I.shape, J.shape)
    assign = [frozenset(left[i] for i in I.assign[s]) | frozenset(right[j] for j in J.assign[t])
              for s in I.shape.elements() for t in J.shape.elements()]
    return SetArrangement(shape, MarkedSet(a.m + b.m, a.k + b.k), assign)


def restrict(I: SetArrangement, mu: LatticeMap) -> SetArrangement:
    """``t -> I(mu(t))`` along a lattice homomorphism ``mu: T -> S``."""
    if mu.target != I.shape:
        raise LatticeError("the map does not land in the arrangement's shape")
    bad = mu.violations()
    if bad:
        raise LatticeError("not a lattice homomorphism: " + bad[0])
    return SetArrangement(mu.source, I.ambient, [I.assign[mu(t)] for t in mu.source.elements()])
