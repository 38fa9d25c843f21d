"""Finite posets and lattices, Boolean face lattices and partial maps.

Elements of a finite poset are the integers ``0..n-1``; labels are kept
only for display and serialization.  Subsets of a small ground set are
bitmasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Hashable, Iterable, Mapping, Sequence


class LatticeError(ValueError):
    """Raised when a structure fails poset/lattice validation."""


class ShapeError(LatticeError):
    """Raised when a poset cannot serve as an arrangement shape."""


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class FinitePoset:
    """A partial order on ``0..n-1`` given by a full boolean relation."""

    def __init__(self, leq: Sequence[Sequence[bool]], labels: Sequence[Hashable] | None = None):
        n = len(leq)
        rel = tuple(tuple(bool(v) for v in row) for row in leq)
        if any(len(row) != n for row in rel):
            raise LatticeError("leq must be a square relation")
        if labels is None:
            labels = list(range(n))
        if len(labels) != n or len(set(labels)) != n:
            raise LatticeError("labels must be distinct and match the relation size")
        for i in range(n):
            if not rel[i][i]:
                raise LatticeError(f"leq is not reflexive at {labels[i]!r}")
        for i in range(n):
            for j in range(n):
                if i != j and rel[i][j] and rel[j][i]:
                    raise LatticeError(f"leq is not antisymmetric at ({labels[i]!r}, {labels[j]!r})")
        for i in range(n):
            for j in range(n):
                if rel[i][j]:
                    for k in range(n):
                        if rel[j][k] and not rel[i][k]:
                            raise LatticeError(
                                f"leq is not transitive at ({labels[i]!r}, {labels[j]!r}, {labels[k]!r})")
        self.leq = rel
        self.labels = tuple(labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    @classmethod
    def from_covers(cls, n: int, less: Iterable[tuple[int, int]], labels=None) -> "FinitePoset":
        """Reflexive-transitive closure of the given strict relations."""
        rel = [[i == j for j in range(n)] for i in range(n)]
        for a, b in less:
            rel[a][b] = True
        for k in range(n):
            for i in range(n):
                if rel[i][k]:
                    for j in range(n):
                        if rel[k][j]:
                            rel[i][j] = True
        return cls(rel, labels)

    @classmethod
    def chain(cls, n: int) -> "FinitePoset":
        return cls([[i <= j for j in range(n)] for i in range(n)])

    def __len__(self) -> int:
        return len(self.leq)

    def __eq__(self, other) -> bool:
        return isinstance(other, FinitePoset) and self.leq == other.leq and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.leq, self.labels))

    def __repr__(self) -> str:
        return f"FinitePoset(n={len(self)})"

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise LatticeError(f"unknown element {label!r}") from None

    def elements(self) -> range:
        return range(len(self))

    def maximum(self) -> int | None:
        n = len(self)
        for i in range(n):
            if all(self.leq[j][i] for j in range(n)):
                return i
        return None

    def minimum(self) -> int | None:
        n = len(self)
        for i in range(n):
            if all(self.leq[i][j] for j in range(n)):
                return i
        return None

    def upper_set(self, s: int) -> int:
        return sum(1 << t for t in self.elements() if self.leq[s][t])

    def is_upper(self, mask: int) -> bool:
        for s in _bits(mask):
            for t in self.elements():
                if self.leq[s][t] and not (mask >> t) & 1:
                    return False
        return True


class FiniteLattice:
    """A finite lattice with explicit meet and join tables.

    Tables are derived from the order and every lattice law is checked
    exhaustively, so an instance is always a valid lattice.
    """

    def __init__(self, poset: FinitePoset, *, _tables=None):
        self.poset = poset
        if _tables is not None:
            self.meet, self.join = _tables
            return
        n = len(poset)
        if n == 0:
            raise LatticeError("a lattice needs at least one element")
        leq = poset.leq
        meet = [[0] * n for _ in range(n)]
        join = [[0] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                lower = [c for c in range(n) if leq[c][a] and leq[c][b]]
                upper = [c for c in range(n) if leq[a][c] and leq[b][c]]
                glb = [c for c in lower if all(leq[d][c] for d in lower)]
                lub = [c for c in upper if all(leq[c][d] for d in upper)]
                if not glb:
                    raise LatticeError(f"no meet for ({poset.labels[a]!r}, {poset.labels[b]!r})")
                if not lub:
                    raise LatticeError(f"no join for ({poset.labels[a]!r}, {poset.labels[b]!r})")
                meet[a][b] = meet[b][a] = glb[0]
                join[a][b] = join[b][a] = lub[0]
        self.meet = tuple(tuple(r) for r in meet)
        self.join = tuple(tuple(r) for r in join)
        self._check_laws()

    def _check_laws(self) -> None:
        n = len(self)
        m, j = self.meet, self.join
        for a in range(n):
            if m[a][a] != a or j[a][a] != a:
                raise LatticeError("meet/join not idempotent")
            for b in range(n):
                if m[a][b] != m[b][a] or j[a][b] != j[b][a]:
                    raise LatticeError("meet/join not commutative")
                if m[a][j[a][b]] != a or j[a][m[a][b]] != a:
                    raise LatticeError("absorption fails")
                for c in range(n):
                    if m[m[a][b]][c] != m[a][m[b][c]] or j[j[a][b]][c] != j[a][j[b][c]]:
                        raise LatticeError("meet/join not associative")

    @classmethod
    def from_leq(cls, leq, labels=None) -> "FiniteLattice":
        return cls(FinitePoset(leq, labels))

    @classmethod
    def chain(cls, n: int) -> "FiniteLattice":
        return cls(FinitePoset.chain(n))

    @classmethod
    def boolean(cls, k: int) -> "FiniteLattice":
        """Subsets of ``k`` points ordered by inclusion (labels are masks)."""
        size = 1 << k
        leq = [[(a & b) == a for b in range(size)] for a in range(size)]
        return cls(FinitePoset(leq, list(range(size))))

    def __len__(self) -> int:
        return len(self.poset)

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteLattice) and self.poset == other.poset

    def __hash__(self) -> int:
        return hash(self.poset)

    def __repr__(self) -> str:
        return f"FiniteLattice(n={len(self)})"

    @property
    def labels(self):
        return self.poset.labels

    @property
    def leq(self):
        return self.poset.leq

    def index(self, label) -> int:
        return self.poset.index(label)

    def elements(self) -> range:
        return range(len(self))

    @property
    def top(self) -> int:
        return self.poset.maximum()

    @property
    def bottom(self) -> int:
        return self.poset.minimum()

    def meet_all(self, items: Iterable[int]) -> int:
        out = self.top
        for s in items:
            out = self.meet[out][s]
        return out

    def join_all(self, items: Iterable[int]) -> int:
        out = self.bottom
        for s in items:
            out = self.join[out][s]
        return out

    def coheight(self, x: int) -> int:
        return coheight(self, x)

    def interval(self, lo: int, hi: int) -> list[int]:
        return [s for s in self.elements() if self.leq[lo][s] and self.leq[s][hi]]


def product_lattice(left: FiniteLattice, right: FiniteLattice) -> FiniteLattice:
    """Componentwise product; element ``i*len(right)+j`` is the pair (i, j)."""
    nr = len(right)
    pairs = [(a, b) for a in left.elements() for b in right.elements()]
    leq = [[left.leq[a][c] and right.leq[b][d] for (c, d) in pairs] for (a, b) in pairs]
    labels = [(left.labels[a], right.labels[b]) for (a, b) in pairs]
    meet = tuple(tuple(left.meet[a][c] * nr + right.meet[b][d] for (c, d) in pairs) for (a, b) in pairs)
    join = tuple(tuple(left.join[a][c] * nr + right.join[b][d] for (c, d) in pairs) for (a, b) in pairs)
    # a product of lattices is a lattice; skip the cubic re-check
    return FiniteLattice(FinitePoset(leq, labels), _tables=(meet, join))


def coheight(lat: FiniteLattice, x: int) -> int:
    """Length of the longest chain from ``x`` up to the top."""
    memo: dict[int, int] = {}
    leq = lat.leq

    def up(s: int) -> int:
        if s in memo:
            return memo[s]
        best = 0
        for t in lat.elements():
            if t != s and leq[s][t]:
                best = max(best, 1 + up(t))
        memo[s] = best
        return best

    return up(x)


@dataclass(frozen=True)
class Completion:
    lattice: FiniteLattice
    upper_sets: tuple[int, ...]
    embedding: tuple[int, ...]


def nonempty_upper_sets(S: FinitePoset) -> list[int]:
    """All non-empty upper sets, as unions of principal upper sets."""
    principal = {S.upper_set(s) for s in S.elements()}
    found = set(principal)
    frontier = list(principal)
    while frontier:
        nxt = []
        for u in frontier:
            for p in principal:
                v = u | p
                if v not in found:
                    found.add(v)
                    nxt.append(v)
        frontier = nxt
    return sorted(found, key=lambda m: (-popcount(m), m))


def completion(S: FinitePoset) -> Completion:
    """The lattice of non-empty upper sets of ``S``.

    Upper sets are ordered so that ``s -> principal upper set of s`` is a
    poset embedding: ``U <= V`` iff ``U`` contains ``V``.  Meet is union and
    join is intersection; intersections stay non-empty because every
    non-empty upper set contains the maximum.
    """
    if S.maximum() is None:
        raise ShapeError("completion needs a poset with a maximum")
    ups = nonempty_upper_sets(S)
    pos = {u: i for i, u in enumerate(ups)}
    n = len(ups)
    leq = [[(ups[a] & ups[b]) == ups[b] for b in range(n)] for a in range(n)]
    labels = [tuple(S.labels[t] for t in _bits(u)) for u in ups]
    meet = tuple(tuple(pos[ups[a] | ups[b]] for b in range(n)) for a in range(n))
    join = tuple(tuple(pos[ups[a] & ups[b]] for b in range(n)) for a in range(n))
    lat = FiniteLattice(FinitePoset(leq, labels), _tables=(meet, join))
    emb = tuple(pos[S.upper_set(s)] for s in S.elements())
    return Completion(lat, tuple(ups), emb)


def interval_lattice(S: FiniteLattice) -> FiniteLattice:
    """Pairs ``(s, t)`` with ``s <= t``, ordered componentwise."""
    pairs = [(s, t) for s in S.elements() for t in S.elements() if S.leq[s][t]]
    pos = {p: i for i, p in enumerate(pairs)}
    leq = [[S.leq[a][c] and S.leq[b][d] for (c, d) in pairs] for (a, b) in pairs]
    labels = [(S.labels[a], S.labels[b]) for (a, b) in pairs]
    meet = tuple(tuple(pos[(S.meet[a][c], S.meet[b][d])] for (c, d) in pairs) for (a, b) in pairs)
    join = tuple(tuple(pos[(S.join[a][c], S.join[b][d])] for (c, d) in pairs) for (a, b) in pairs)
    return FiniteLattice(FinitePoset(leq, labels), _tables=(meet, join))


@dataclass(frozen=True)
class LatticeMap:
    """A map between finite lattices given by its table."""

    source: FiniteLattice
    target: FiniteLattice
    table: tuple[int, ...]

    def __call__(self, s: int) -> int:
        return self.table[s]

    def violations(self) -> list[str]:
        out = []
        S, T = self.source, self.target
        if len(self.table) != len(S) or any(not 0 <= v < len(T) for v in self.table):
            return ["table does not match source/target sizes"]
        if self.table[S.top] != T.top:
            out.append("top is not preserved")
        for a in S.elements():
            for b in S.elements():
                if self.table[S.meet[a][b]] != T.meet[self.table[a]][self.table[b]]:
                    out.append(f"meet not preserved at ({S.labels[a]!r}, {S.labels[b]!r})")
                if self.table[S.join[a][b]] != T.join[self.table[a]][self.table[b]]:
                    out.append(f"join not preserved at ({S.labels[a]!r}, {S.labels[b]!r})")
        return out

    def is_homomorphism(self) -> bool:
        return not self.violations()

    @classmethod
    def identity(cls, S: FiniteLattice) -> "LatticeMap":
        return cls(S, S, tuple(S.elements()))


# --- Boolean face lattices -------------------------------------------------


class BooleanFaceLattice:
    """All subsets of a ground set under REVERSED inclusion.

    ``sigma <= tau`` iff ``sigma`` contains ``tau``.  Hence meet = union,
    join = intersection, top = empty set and coheight = cardinality.
    Elements are bitmasks over ``ground``.
    """

    def __init__(self, ground: Sequence[Hashable]):
        if len(set(ground)) != len(ground):
            raise LatticeError("ground set has repeated labels")
        if len(ground) > 16:
            raise LatticeError("ground sets are capped at 16 elements")
        self.ground = tuple(ground)
        self._pos = {g: i for i, g in enumerate(self.ground)}

    def __eq__(self, other) -> bool:
        return isinstance(other, BooleanFaceLattice) and self.ground == other.ground

    def __hash__(self) -> int:
        return hash(self.ground)

    def __repr__(self) -> str:
        return f"BooleanFaceLattice({list(self.ground)!r})"

    @property
    def size(self) -> int:
        return 1 << len(self.ground)

    def elements(self) -> range:
        return range(self.size)

    top = 0

    @property
    def bottom(self) -> int:
        return self.size - 1

    def leq(self, sigma: int, tau: int) -> bool:
        return (sigma & tau) == tau

    def meet(self, sigma: int, tau: int) -> int:
        return sigma | tau  # meet = union

    def join(self, sigma: int, tau: int) -> int:
        return sigma & tau  # join = intersection

    def coheight(self, sigma: int) -> int:
        return popcount(sigma)

    def coatoms(self) -> list[int]:
        return [1 << i for i in range(len(self.ground))]

    def mask(self, items: Iterable[Hashable]) -> int:
        m = 0
        for it in items:
            try:
                m |= 1 << self._pos[it]
            except KeyError:
                raise LatticeError(f"{it!r} is not in the ground set") from None
        return m

    def members(self, mask: int) -> tuple:
        return tuple(self.ground[i] for i in _bits(mask))

    def as_lattice(self) -> FiniteLattice:
        n = self.size
        leq = [[self.leq(a, b) for b in range(n)] for a in range(n)]
        meet = tuple(tuple(a | b for b in range(n)) for a in range(n))
        join = tuple(tuple(a & b for b in range(n)) for a in range(n))
        return FiniteLattice(FinitePoset(leq, [self.members(a) for a in range(n)]), _tables=(meet, join))


# --- partial maps ----------------------------------------------------------


@dataclass(frozen=True)
class PartialMap:
    """A map from a subset of ``source`` into ``target``."""

    source: tuple
    target: tuple
    mapping: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        items = tuple(sorted(dict(self.mapping).items(), key=lambda kv: self.source.index(kv[0])
                             if kv[0] in self.source else -1))
        src, tgt = set(self.source), set(self.target)
        for a, b in items:
            if a not in src:
                raise LatticeError(f"domain element {a!r} is not in the source")
            if b not in tgt:
                raise LatticeError(f"image {b!r} is not in the target")
        object.__setattr__(self, "mapping", dict(items))

    def __hash__(self) -> int:
        return hash((self.source, self.target, tuple(self.mapping.items())))

    def __eq__(self, other) -> bool:
        return (isinstance(other, PartialMap) and self.source == other.source
                and self.target == other.target and self.mapping == other.mapping)

    @property
    def domain(self) -> frozenset:
        return frozenset(self.mapping)

    def __call__(self, a):
        return self.mapping[a]

    def image(self, items: Iterable) -> frozenset:
        return frozenset(self.mapping[a] for a in items if a in self.mapping)

    def then(self, g: "PartialMap") -> "PartialMap":
        """``g`` after ``self``, defined where both steps are."""
        if tuple(g.source) != self.target:
            raise LatticeError("partial maps are not composable")
        return PartialMap(self.source, g.target,
                          {a: g.mapping[b] for a, b in self.mapping.items() if b in g.mapping})

    @classmethod
    def identity(cls, ground) -> "PartialMap":
        return cls(ground, ground, {a: a for a in ground})


def all_partial_maps(source: Sequence, target: Sequence) -> Iterable[PartialMap]:
    """Every partial map; ``None`` in a slot means undefined there."""
    options = [None] + list(target)
    for choice in product(options, repeat=len(source)):
        yield PartialMap(source, target, {a: b for a, b in zip(source, choice) if b is not None})


@dataclass(frozen=True)
class BooleanHom:
    """A map between Boolean face lattices, tabulated on bitmasks."""

    source: BooleanFaceLattice
    target: BooleanFaceLattice
    table: tuple[int, ...]

    def __call__(self, sigma: int) -> int:
        return self.table[sigma]

    def then(self, other: "BooleanHom") -> "BooleanHom":
        return BooleanHom(self.source, other.target, tuple(other.table[v] for v in self.table))

    def violations(self) -> list[str]:
        out = []
        if self.table[0] != 0:
            out.append("top (empty set) is not preserved")
        for a in self.source.elements():
            if popcount(self.table[a]) > popcount(a):
                out.append(f"coheight raised at {self.source.members(a)!r}")
            for b in self.source.elements():
                if self.table[a | b] != self.table[a] | self.table[b]:
                    out.append(f"infimum not preserved at ({self.source.members(a)!r}, "
                               f"{self.source.members(b)!r})")
        return out


def partial_to_hom(f: PartialMap) -> BooleanHom:
    """The lattice map ``A' -> f(A' & D(f))`` of face lattices."""
    src, tgt = BooleanFaceLattice(f.source), BooleanFaceLattice(f.target)
    single = [tgt.mask([f.mapping[a]]) if a in f.mapping else 0 for a in f.source]
    table = []
    for sigma in src.elements():
        v = 0
        for i in _bits(sigma):
            v |= single[i]
        table.append(v)
    return BooleanHom(src, tgt, tuple(table))


def hom_to_partial(phi: BooleanHom) -> PartialMap:
    """Read off a partial map from the images of the coatoms."""
    bad = phi.violations()
    if bad:
        raise LatticeError("not an infimum-preserving, coheight-non-increasing map: " + bad[0])
    mapping = {}
    for i, a in enumerate(phi.source.ground):
        img = phi.table[1 << i]
        if popcount(img) == 1:
            mapping[a] = phi.target.members(img)[0]
    return PartialMap(phi.source.ground, phi.target.ground, mapping)
