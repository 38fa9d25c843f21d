"""Face structures, convex polyhedra and edgings between face structures.

Subsets of faces are bitmasks.  The face lattice uses reversed inclusion,
so the top element is the empty set, meet = union and join = intersection.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Sequence

from .lattice import (BooleanFaceLattice, FiniteLattice, LatticeError, PartialMap, _bits,
                      partial_to_hom, popcount, product_lattice)
from .lp import feasible_point, interior_point

Q = Fraction


class EdgingError(ValueError):
    pass


class PolyhedronError(ValueError):
    pass


class FaceStructure:
    """Faces of a manifold with faces and the family of face sets that meet.

    ``nonempty`` holds bitmasks over ``faces``: ``sigma`` is in it when the
    faces in ``sigma`` have a common point.
    """

    def __init__(self, faces: Sequence[Hashable], nonempty: Iterable[int], dim: int):
        self.faces = tuple(faces)
        self.lattice = BooleanFaceLattice(self.faces)
        self.nonempty = frozenset(nonempty)
        self.dim = dim
        if 0 not in self.nonempty:
            raise EdgingError("the empty face set must be non-empty (it is the whole space)")
        full = self.lattice.bottom
        for sigma in self.nonempty:
            if sigma & ~full:
                raise EdgingError("face set mentions unknown faces")
            if popcount(sigma) > dim:
                raise EdgingError(f"{self.members(sigma)!r} exceeds the codimension bound {dim}")
            for i in _bits(sigma):
                if sigma & ~(1 << i) not in self.nonempty:
                    raise EdgingError(f"{self.members(sigma)!r} is listed but a subset is not")

    @classmethod
    def from_sets(cls, faces, sets: Iterable[Iterable], dim: int, close: bool = True) -> "FaceStructure":
        lat = BooleanFaceLattice(tuple(faces))
        masks = {lat.mask(s) for s in sets} | {0}
        if close:
            closed = set()
            for m in masks:
                sub = m
                while True:
                    closed.add(sub)
                    if sub == 0:
                        break
                    sub = (sub - 1) & m
            masks = closed
        return cls(faces, masks, dim)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FaceStructure) and self.faces == other.faces
                and self.nonempty == other.nonempty and self.dim == other.dim)

    def __hash__(self) -> int:
        return hash((self.faces, self.nonempty, self.dim))

    def __repr__(self) -> str:
        return f"FaceStructure(faces={list(self.faces)!r}, dim={self.dim}, |N|={len(self.nonempty)})"

    def mask(self, items: Iterable) -> int:
        return self.lattice.mask(items)

    def members(self, sigma: int) -> tuple:
        return self.lattice.members(sigma)

    def __contains__(self, sigma: int) -> bool:
        return sigma in self.nonempty

    def sorted_nonempty(self) -> list[int]:
        return sorted(self.nonempty, key=lambda s: (popcount(s), s))

    def maximal_sets(self) -> list[int]:
        """Face sets in ``N`` not contained in a larger one (the deepest corners)."""
        return [s for s in self.sorted_nonempty()
                if not any(t != s and (t & s) == s for t in self.nonempty)]

    def product(self, other: "FaceStructure") -> "FaceStructure":
        faces = [(0, a) for a in self.faces] + [(1, b) for b in other.faces]
        shift = len(self.faces)
        sets = {a | (b << shift) for a in self.nonempty for b in other.nonempty}
        return FaceStructure(faces, sets, self.dim + other.dim)

    def stratum(self, sigma: int) -> "FaceStructure":
        """Face structure of the closed stratum cut out by ``sigma``."""
        if sigma not in self.nonempty:
            raise EdgingError(f"{self.members(sigma)!r} has empty intersection")
        keep = [i for i in range(len(self.faces)) if not (sigma >> i) & 1 and (sigma | (1 << i)) in self.nonempty]
        faces = [self.faces[i] for i in keep]
        sets = []
        for t in self.nonempty:
            if (t & sigma) == sigma:
                rest = t & ~sigma
                if all(i in keep for i in _bits(rest)):
                    sets.append(sum(1 << keep.index(i) for i in _bits(rest)))
        return FaceStructure(faces, sets, self.dim - popcount(sigma))

    def to_json(self) -> dict:
        return {"faces": [str(f) for f in self.faces],
                "nonempty": [[str(f) for f in self.members(s)] for s in self.sorted_nonempty()],
                "dim": self.dim}

    @classmethod
    def from_json(cls, data: Mapping) -> "FaceStructure":
        return cls.from_sets(data["faces"], data["nonempty"], int(data["dim"]), close=False)


# --- polyhedra -----------------------------------------------------------


class Polyhedron:
    """``{x : A x >= b}`` with one label per row (one row per facet)."""

    def __init__(self, A: Sequence[Sequence], b: Sequence, labels: Sequence[Hashable] | None = None,
                 check: bool = True):
        self.A = tuple(tuple(Q(v) for v in row) for row in A)
        self.b = tuple(Q(v) for v in b)
        if len(self.A) != len(self.b):
            raise PolyhedronError("A and b have different row counts")
        if labels is None:
            labels = [f"F{i + 1}" for i in range(len(self.A))]
        self.labels = tuple(labels)
        if len(set(self.labels)) != len(self.labels) or len(self.labels) != len(self.A):
            raise PolyhedronError("labels must be distinct, one per row")
        widths = {len(row) for row in self.A}
        if len(widths) > 1:
            raise PolyhedronError("rows have different widths")
        self.n = widths.pop() if widths else 0
        if check:
            self._validate()

    def _validate(self) -> None:
        for i, row in enumerate(self.A):
            if not any(row):
                raise PolyhedronError(f"row {self.labels[i]!r} is zero")
        for i, j in combinations(range(len(self.A)), 2):
            ri, rj = self.A[i] + (self.b[i],), self.A[j] + (self.b[j],)
            k = next(t for t, v in enumerate(ri) if v)
            if rj[k] and all(ri[k] * y == rj[k] * x for x, y in zip(ri, rj)):
                raise PolyhedronError(f"rows {self.labels[i]!r} and {self.labels[j]!r} share a hyperplane")
        if self.A:
            found = interior_point(self.A, self.b, n=self.n)
            if found is None or found[1] < 0:
                raise PolyhedronError("the polyhedron is empty")
            if found[1] == 0:
                raise PolyhedronError("the polyhedron is not full-dimensional")

    @classmethod
    def box(cls, kinds: Sequence[str]) -> "Polyhedron":
        """Product of ``R``, ``R+`` and ``I`` factors; faces are ``(i, 'lo'|'hi')``."""
        A, b, labels = [], [], []
        n = len(kinds)
        for i, kind in enumerate(kinds, start=1):
            e = [0] * n
            e[i - 1] = 1
            if kind in ("R+", "I"):
                A.append(e)
                b.append(0)
                labels.append(f"x{i}=0")
            if kind == "I":
                A.append([-v for v in e])
                b.append(-1)
                labels.append(f"x{i}=1")
            if kind not in ("R", "R+", "I"):
                raise PolyhedronError(f"unknown coordinate kind {kind!r}")
        return cls(A, b, labels, check=bool(A))

    @classmethod
    def orthant(cls, m: int, k: int) -> "Polyhedron":
        """The model with coordinates ``1..k`` free and the rest non-negative."""
        return cls.box(["R"] * k + ["R+"] * (m - k))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Polyhedron) and self.A == other.A and self.b == other.b
                and self.labels == other.labels and self.n == other.n)

    def __hash__(self) -> int:
        return hash((self.A, self.b, self.labels))

    def __repr__(self) -> str:
        return f"Polyhedron(n={self.n}, facets={list(self.labels)!r})"

    def row(self, label) -> int:
        return self.labels.index(label)

    def slack(self, i: int, x: Sequence):
        return sum((a * v for a, v in zip(self.A[i], x)), Q(0)) - self.b[i]

    def slacks(self, x: Sequence) -> list:
        return [self.slack(i, x) for i in range(len(self.A))]

    def contains(self, x: Sequence) -> bool:
        return all(s >= 0 for s in self.slacks(x))

    def active(self, x: Sequence) -> int:
        """Mask of facets containing ``x`` (exact zero slack)."""
        return sum(1 << i for i, s in enumerate(self.slacks(x)) if s == 0)

    def face_system(self, sigma: int):
        eq = [self.A[i] for i in _bits(sigma)]
        eq_b = [self.b[i] for i in _bits(sigma)]
        return eq, eq_b

    def face_point(self, sigma: int):
        """A point of the closed face, or ``None`` when it is empty."""
        eq, eq_b = self.face_system(sigma)
        return feasible_point(self.A, self.b, eq, eq_b, n=self.n)

    def relative_interior_point(self, sigma: int):
        """A point on exactly the facets in ``sigma``; ``None`` if there is none."""
        eq, eq_b = self.face_system(sigma)
        others = [i for i in range(len(self.A)) if not (sigma >> i) & 1]
        found = interior_point([self.A[i] for i in others], [self.b[i] for i in others], eq, eq_b, n=self.n)
        if found is None or (others and found[1] <= 0):
            return None
        return found[0]

    def product(self, other: "Polyhedron") -> "Polyhedron":
        n1, n2 = self.n, other.n
        A = [list(r) + [0] * n2 for r in self.A] + [[0] * n1 + list(r) for r in other.A]
        labels = [(0, a) for a in self.labels] + [(1, b) for b in other.labels]
        return Polyhedron(A, list(self.b) + list(other.b), labels)

    def to_json(self) -> dict:
        return {"A": [[str(v) for v in r] for r in self.A], "b": [str(v) for v in self.b],
                "labels": [str(lab) for lab in self.labels], "dim": self.n}

    @classmethod
    def from_json(cls, data: Mapping) -> "Polyhedron":
        A = [[Q(v) for v in r] for r in data["A"]]
        p = cls(A, [Q(v) for v in data["b"]], data.get("labels"), check=bool(A))
        if not A:
            p.n = int(data.get("dim", 0))
        return p


def polyhedron_faces(P: Polyhedron) -> FaceStructure:
    """Face sets with non-empty common intersection, by exact LP feasibility."""
    k = len(P.A)
    if k and P.face_point(0) is None:
        raise PolyhedronError("the polyhedron is empty")
    found = {0}
    layer = [0]
    while layer:
        nxt = set()
        for sigma in layer:
            top = max(_bits(sigma), default=-1)
            for i in range(top + 1, k):
                cand = sigma | (1 << i)
                if all((cand & ~(1 << j)) in found for j in _bits(cand)) and P.face_point(cand) is not None:
                    nxt.add(cand)
        found |= nxt
        layer = sorted(nxt)
    return FaceStructure(P.labels, found, P.n)


# --- edgings -------------------------------------------------------------


@dataclass(frozen=True)
class Edging:
    """A partial map between the face sets of two face structures."""

    source: FaceStructure
    target: FaceStructure
    partial: PartialMap

    @classmethod
    def from_mapping(cls, source: FaceStructure, target: FaceStructure, mapping: Mapping) -> "Edging":
        return cls(source, target, PartialMap(source.faces, target.faces, mapping))

    @classmethod
    def identity(cls, X: FaceStructure) -> "Edging":
        return cls(X, X, PartialMap.identity(X.faces))

    def __post_init__(self):
        if self.partial.source != self.source.faces or self.partial.target != self.target.faces:
            raise EdgingError("partial map does not match the face structures")
        hom = partial_to_hom(self.partial)
        object.__setattr__(self, "_table", hom.table)

    @property
    def domain_mask(self) -> int:
        return self.source.mask(self.partial.domain)

    def tilde(self, sigma: int) -> int:
        """Image ``beta(sigma & D(beta))`` in the target face lattice."""
        return self._table[sigma]

    def violations(self) -> list[dict]:
        return validate_edging(self)

    def is_valid(self) -> bool:
        return not validate_edging(self)

    def check(self) -> "Edging":
        bad = validate_edging(self)
        if bad:
            raise EdgingError(f"invalid edging: {bad[0]}")
        return self

    def to_json(self) -> dict:
        return {"map": {str(a): str(b) for a, b in self.partial.mapping.items()}}


def validate_edging(beta: Edging) -> list[dict]:
    """Image stays non-empty, no collisions on a corner, and joins are preserved."""
    X, Y = beta.source, beta.target
    D = beta.domain_mask
    out = []
    for sigma in X.sorted_nonempty():
        img = beta.tilde(sigma)
        if img not in Y.nonempty:
            out.append({"kind": "image-empty", "sigma": list(X.members(sigma)), "image": list(Y.members(img))})
        if popcount(img) != popcount(sigma & D):
            out.append({"kind": "not-injective", "sigma": list(X.members(sigma))})
    for a in X.sorted_nonempty():
        for b in X.sorted_nonempty():
            if a < b and (a | b) in X.nonempty and beta.tilde(a & b) != beta.tilde(a) & beta.tilde(b):
                out.append({"kind": "join", "pair": [list(X.members(a)), list(X.members(b))]})
    return out


def boundary_decomposition(beta: Edging, tau: int) -> list[int]:
    """Maximal (inclusion-minimal) non-empty face sets mapped onto ``tau``."""
    beta.check()
    X = beta.source
    pre = [s for s in X.sorted_nonempty() if beta.tilde(s) == tau]
    return [s for s in pre if not any(t != s and (t & s) == t for t in pre)]


def wedge_check(beta: Edging, tau: int, tau2: int) -> bool:
    """Components over ``tau | tau2`` match meeting pairs of components over each."""
    X = beta.source
    left = boundary_decomposition(beta, tau)
    right = boundary_decomposition(beta, tau2)
    both = boundary_decomposition(beta, tau | tau2)
    unions = [a | b for a in left for b in right if (a | b) in X.nonempty]
    return len(unions) == len(set(unions)) and sorted(unions) == sorted(both)


def slice_isomorphism_check(beta: Edging, sigma: int) -> bool:
    """``sigma' -> (sigma' minus D(beta), tilde(sigma'))`` is a lattice isomorphism above ``sigma``."""
    D = beta.domain_mask
    if sigma not in beta.source.nonempty:
        raise EdgingError("sigma must be a non-empty face set")
    subs = []
    sub = sigma
    while True:
        subs.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & sigma
    img = {s: (s & ~D, beta.tilde(s)) for s in subs}
    rest, top = sigma & ~D, beta.tilde(sigma)
    targets = {(a, b) for a in _submasks(rest) for b in _submasks(top)}
    if set(img.values()) != targets or len(set(img.values())) != len(subs):
        return False
    for s in subs:
        for t in subs:
            src_le = (s & t) == t
            a, b = img[s], img[t]
            if src_le != (((a[0] & b[0]) == b[0]) and ((a[1] & b[1]) == b[1])):
                return False
    return True


def _submasks(m: int) -> list[int]:
    out = []
    sub = m
    while True:
        out.append(sub)
        if sub == 0:
            return out
        sub = (sub - 1) & m


def compose_edgings(beta: Edging, gamma: Edging) -> Edging:
    if beta.target != gamma.source:
        raise EdgingError("edgings are not composable")
    return Edging(beta.source, gamma.target, beta.partial.then(gamma.partial)).check()


def disjoint_union_edging(beta1: Edging, beta2: Edging) -> Edging:
    """Paste two edgings of one space into an edging with the product target."""
    if beta1.source != beta2.source:
        raise EdgingError("edgings must share their source")
    if beta1.partial.domain & beta2.partial.domain:
        raise EdgingError("domains overlap")
    Y = beta1.target.product(beta2.target)
    mapping = {a: (0, b) for a, b in beta1.partial.mapping.items()}
    mapping.update({a: (1, b) for a, b in beta2.partial.mapping.items()})
    return Edging.from_mapping(beta1.source, Y, mapping).check()


def face_restrict(beta: Edging, sigma: int) -> Edging:
    """Restriction to the closed stratum of ``sigma``; needs ``sigma`` off the domain."""
    if sigma & beta.domain_mask:
        raise EdgingError("the stratum meets the domain of the edging")
    Xs = beta.source.stratum(sigma)
    mapping = {c: beta.partial.mapping[c] for c in Xs.faces if c in beta.partial.mapping}
    return Edging.from_mapping(Xs, beta.target, mapping).check()


@dataclass(frozen=True)
class DerivedIndex:
    lattice: FiniteLattice
    elements: tuple[tuple[int, int, int], ...]
    components: dict


def derived_index(beta: Edging, S: FiniteLattice, max_size: int = 1 << 14) -> DerivedIndex:
    """Index lattice ``S x (faces off the domain) x (target face lattice)``.

    For each ``(s, sigma, tau)`` the components are the pairs
    ``(s, sigma | sigma')`` over the decomposition ``sigma'`` of ``tau``
    whose union still has non-empty intersection.
    """
    beta.check()
    X, Y = beta.source, beta.target
    off = [c for c in X.faces if c not in beta.partial.domain]
    g_off = BooleanFaceLattice(off)
    size = len(S) * g_off.size * Y.lattice.size
    if size > max_size:
        raise EdgingError(f"derived index would have {size} elements")
    lat = product_lattice(S, product_lattice(g_off.as_lattice(), Y.lattice.as_lattice()))
    decomp = {tau: boundary_decomposition(beta, tau) for tau in Y.lattice.elements()}
    elements = []
    comps = {}
    for s in S.elements():
        for a in g_off.elements():
            sigma = X.mask(g_off.members(a))
            for tau in Y.lattice.elements():
                key = (s, sigma, tau)
                elements.append(key)
                comps[key] = [(s, sigma | d) for d in decomp[tau] if (sigma | d) in X.nonempty]
    return DerivedIndex(lat, tuple(elements), comps)
