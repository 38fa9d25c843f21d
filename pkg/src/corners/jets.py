"""Truncated polynomial algebras, jet composition and relative jet spaces.

A :class:`TruncatedPoly` is an element of ``Q[x_1..x_m] / (x)^(r+1)``;
multi-indices are tuples, stored sparsely.  Basis enumerations use the
graded-lex order (total degree first, then ``x_1`` before ``x_2``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb, factorial, prod
from typing import Iterable, Mapping, Sequence

from .arrangement import SetArrangement
from .lattice import interval_lattice

Alpha = tuple[int, ...]


class JetError(ValueError):
    pass


def grlex_key(alpha: Alpha):
    return (sum(alpha), tuple(-a for a in alpha))


def multi_indices(m: int, r: int, min_degree: int = 0) -> list[Alpha]:
    """All ``alpha`` with ``min_degree <= |alpha| <= r`` in graded-lex order."""
    out = []
    for d in range(min_degree, r + 1):
        for combo in combinations_with_replacement(range(m), d):
            a = [0] * m
            for i in combo:
                a[i] += 1
            out.append(tuple(a))
    return sorted(out, key=grlex_key)


def alpha_factorial(alpha: Alpha) -> int:
    return prod(factorial(a) for a in alpha)


def _q(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


class TruncatedPoly:
    """A polynomial in ``nvars`` variables with every degree above ``r`` discarded."""

    __slots__ = ("nvars", "r", "coeffs")

    def __init__(self, nvars: int, r: int, coeffs: Mapping[Alpha, object] | None = None):
        if r < 0 or nvars < 0:
            raise JetError("degree bound and variable count must be non-negative")
        self.nvars = nvars
        self.r = r
        clean = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != nvars or any(a < 0 for a in alpha):
                raise JetError(f"bad multi-index {alpha} for {nvars} variables")
            if sum(alpha) > r:
                continue
            c = _q(c)
            if c:
                clean[alpha] = clean.get(alpha, Fraction(0)) + c
        self.coeffs = {a: c for a, c in clean.items() if c}

    # construction helpers
    @classmethod
    def zero(cls, nvars: int, r: int) -> "TruncatedPoly":
        return cls(nvars, r)

    @classmethod
    def constant(cls, nvars: int, r: int, c) -> "TruncatedPoly":
        return cls(nvars, r, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int, r: int) -> "TruncatedPoly":
        """The coordinate function ``x_i`` (``i`` counted from 1)."""
        a = [0] * nvars
        a[i - 1] = 1
        return cls(nvars, r, {tuple(a): 1})

    # basic protocol
    def __eq__(self, other) -> bool:
        if isinstance(other, TruncatedPoly):
            return self.nvars == other.nvars and self.r == other.r and self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.nvars, self.r, frozenset(self.coeffs.items())))

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"TruncatedPoly(0; r={self.r})"
        parts = []
        for a in self.terms():
            mono = "*".join(f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(a) if e)
            parts.append(f"{self.coeffs[a]}" + (f"*{mono}" if mono else ""))
        return f"TruncatedPoly({' + '.join(parts)}; r={self.r})"

    def terms(self) -> list[Alpha]:
        return sorted(self.coeffs, key=grlex_key)

    def coeff(self, alpha: Alpha) -> Fraction:
        return self.coeffs.get(tuple(alpha), Fraction(0))

    @property
    def constant_term(self) -> Fraction:
        return self.coeff((0,) * self.nvars)

    def degree(self) -> int:
        return max((sum(a) for a in self.coeffs), default=-1)

    def is_zero(self) -> bool:
        return not self.coeffs

    def with_r(self, r: int) -> "TruncatedPoly":
        return TruncatedPoly(self.nvars, r, self.coeffs)

    # arithmetic
    def _coerce(self, other) -> "TruncatedPoly":
        if isinstance(other, TruncatedPoly):
            if other.nvars != self.nvars:
                raise JetError("variable counts differ")
            return other
        return TruncatedPoly.constant(self.nvars, self.r, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0) + c
        return TruncatedPoly(self.nvars, min(self.r, other.r), out)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedPoly(self.nvars, self.r, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedPoly):
            c = _q(other)
            return TruncatedPoly(self.nvars, self.r, {a: c * v for a, v in self.coeffs.items()})
        other = self._coerce(other)
        r = min(self.r, other.r)
        out: dict[Alpha, Fraction] = {}
        for a, c in self.coeffs.items():
            da = sum(a)
            for b, d in other.coeffs.items():
                if da + sum(b) > r:
                    continue
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0) + c * d
        return TruncatedPoly(self.nvars, r, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise JetError("negative powers are not supported")
        out = TruncatedPoly.constant(self.nvars, self.r, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # calculus and evaluation
    def __call__(self, p: Sequence) -> Fraction:
        return self.evaluate(p)

    def evaluate(self, p: Sequence):
        if len(p) != self.nvars:
            raise JetError(f"expected {self.nvars} coordinates")
        total = Fraction(0)
        for a, c in self.coeffs.items():
            term = c
            for x, e in zip(p, a):
                if e:
                    term = term * x ** e
            total = total + term
        return total

    def eval_float(self, p: Sequence[float]) -> float:
        total = 0.0
        for a, c in self.coeffs.items():
            term = float(c)
            for x, e in zip(p, a):
                if e:
                    term *= x ** e
            total += term
        return total

    def derivative(self, i: int) -> "TruncatedPoly":
        """``d/dx_i`` (``i`` from 1); the degree bound drops by one."""
        out = {}
        k = i - 1
        for a, c in self.coeffs.items():
            if a[k]:
                b = list(a)
                b[k] -= 1
                out[tuple(b)] = c * a[k]
        return TruncatedPoly(self.nvars, max(self.r - 1, 0), out)

    def partial(self, alpha: Alpha) -> "TruncatedPoly":
        f = self
        for i, e in enumerate(alpha, start=1):
            for _ in range(e):
                f = f.derivative(i)
        return f

    def gradient(self, p: Sequence) -> list:
        return [self.derivative(i).evaluate(p) for i in range(1, self.nvars + 1)]

    def substitute(self, values: Sequence["TruncatedPoly"]) -> "TruncatedPoly":
        """Plug polynomials in for the variables, truncating at their ``r``."""
        if len(values) != self.nvars:
            raise JetError("one polynomial per variable is required")
        if not values:
            raise JetError("cannot substitute into a polynomial in no variables")
        m, r = values[0].nvars, min(v.r for v in values)
        out = TruncatedPoly.zero(m, r)
        cache: dict[tuple[int, int], TruncatedPoly] = {}
        for a, c in self.coeffs.items():
            term = TruncatedPoly.constant(m, r, c)
            for i, e in enumerate(a):
                if e:
                    key = (i, e)
                    if key not in cache:
                        cache[key] = values[i].with_r(r) ** e
                    term = term * cache[key]
            out = out + term
        return out

    def restrict(self, assignments: Mapping[int, object]) -> "TruncatedPoly":
        """Fix some coordinates (1-based) to constants; variable count is kept."""
        out: dict[Alpha, Fraction] = {}
        for a, c in self.coeffs.items():
            b = list(a)
            for i, v in assignments.items():
                e = b[i - 1]
                if e:
                    c = c * _q(v) ** e
                    b[i - 1] = 0
            if c:
                key = tuple(b)
                out[key] = out.get(key, 0) + c
        return TruncatedPoly(self.nvars, self.r, out)

    def taylor_shift(self, p: Sequence) -> "TruncatedPoly":
        """Coefficients of ``f(p + t)`` in ``t``: derivatives at ``p`` over ``alpha!``."""
        if len(p) != self.nvars:
            raise JetError(f"expected {self.nvars} coordinates")
        p = [_q(v) for v in p]
        out: dict[Alpha, Fraction] = {}
        for beta, c in self.coeffs.items():
            pieces = [[(a, comb(b, a) * p[i] ** (b - a)) for a in range(b + 1)] for i, b in enumerate(beta)]
            stack = [((), c)]
            for options in pieces:
                stack = [(alpha + (a,), w * f) for alpha, w in stack for a, f in options if f]
            for alpha, w in stack:
                out[alpha] = out.get(alpha, 0) + w
        return TruncatedPoly(self.nvars, self.r, out)

    # serialization
    def to_json(self, names: Sequence[str] | None = None) -> dict:
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(self.nvars)]
        return {"r": self.r, "vars": names,
                "terms": [{"alpha": list(a), "coef": str(self.coeffs[a])} for a in self.terms()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "TruncatedPoly":
        nv = len(data["vars"])
        return cls(nv, int(data["r"]), {tuple(t["alpha"]): Fraction(t["coef"]) for t in data["terms"]})


class TruncatedPolyMap:
    """A tuple of truncated polynomials sharing variables and degree bound."""

    __slots__ = ("nvars", "r", "components")

    def __init__(self, components: Sequence[TruncatedPoly], nvars: int | None = None, r: int | None = None):
        comps = tuple(components)
        if comps:
            nvars = comps[0].nvars if nvars is None else nvars
            r = comps[0].r if r is None else r
        if nvars is None or r is None:
            raise JetError("an empty map needs explicit nvars and r")
        for c in comps:
            if c.nvars != nvars:
                raise JetError("components disagree on the variable count")
        self.nvars = nvars
        self.r = r
        self.components = tuple(c.with_r(r) if c.r != r else c for c in comps)

    @classmethod
    def identity(cls, m: int, r: int) -> "TruncatedPolyMap":
        return cls([TruncatedPoly.var(m, i, r) for i in range(1, m + 1)], m, r)

    @classmethod
    def linear(cls, matrix: Sequence[Sequence], r: int = 1) -> "TruncatedPolyMap":
        m = len(matrix[0]) if matrix else 0
        comps = []
        for row in matrix:
            comps.append(TruncatedPoly(m, r, {tuple(int(i == k) for i in range(m)): v for k, v in enumerate(row)}))
        return cls(comps, m, r)

    @property
    def ntargets(self) -> int:
        return len(self.components)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TruncatedPolyMap) and self.nvars == other.nvars
                and self.r == other.r and self.components == other.components)

    def __hash__(self) -> int:
        return hash((self.nvars, self.r, self.components))

    def __repr__(self) -> str:
        return f"TruncatedPolyMap({list(self.components)!r})"

    def __getitem__(self, j: int) -> TruncatedPoly:
        return self.components[j]

    def __add__(self, other: "TruncatedPolyMap") -> "TruncatedPolyMap":
        if other.ntargets != self.ntargets:
            raise JetError("target sizes differ")
        return TruncatedPolyMap([a + b for a, b in zip(self.components, other.components)], self.nvars,
                                min(self.r, other.r))

    def scale(self, c) -> "TruncatedPolyMap":
        return TruncatedPolyMap([a * c for a in self.components], self.nvars, self.r)

    def with_r(self, r: int) -> "TruncatedPolyMap":
        return TruncatedPolyMap([c.with_r(r) for c in self.components], self.nvars, r)

    def __call__(self, p: Sequence) -> tuple:
        return tuple(c.evaluate(p) for c in self.components)

    def eval_float(self, p: Sequence[float]) -> tuple[float, ...]:
        return tuple(c.eval_float(p) for c in self.components)

    def jacobian(self, p: Sequence) -> list[list[Fraction]]:
        return [c.gradient(p) for c in self.components]

    def taylor_shift(self, p: Sequence) -> "TruncatedPolyMap":
        return TruncatedPolyMap([c.taylor_shift(p) for c in self.components], self.nvars, self.r)

    def preserves_origin(self) -> bool:
        return all(c.constant_term == 0 for c in self.components)

    def coefficient_vector(self, max_degree: int | None = None) -> list[Fraction]:
        k = self.r if max_degree is None else max_degree
        idx = multi_indices(self.nvars, k)
        return [c.coeff(a) for c in self.components for a in idx]

    def to_json(self, names: Sequence[str] | None = None) -> dict:
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(self.nvars)]
        return {"r": self.r, "vars": names,
                "components": [{"terms": c.to_json(names)["terms"]} for c in self.components]}

    @classmethod
    def from_json(cls, data: Mapping) -> "TruncatedPolyMap":
        nv, r = len(data["vars"]), int(data["r"])
        comps = [TruncatedPoly(nv, r, {tuple(t["alpha"]): Fraction(t["coef"]) for t in comp["terms"]})
                 for comp in data["components"]]
        return cls(comps, nv, r)


def truncate_compose(g: TruncatedPolyMap, f: TruncatedPolyMap) -> TruncatedPolyMap:
    """``g o f`` in the truncated algebra; ``f`` must send 0 to 0."""
    if g.nvars != f.ntargets:
        raise JetError("g's variables do not match f's targets")
    if g.r != f.r:
        raise JetError("jets of different orders cannot be composed")
    if not f.preserves_origin():
        raise JetError("truncated composition needs f(0) = 0")
    if g.nvars == 0:
        return TruncatedPolyMap([TruncatedPoly.constant(f.nvars, g.r, c.constant_term) for c in g.components],
                                f.nvars, g.r)
    return TruncatedPolyMap([c.substitute(f.components) for c in g.components], f.nvars, g.r)


def taylor_shift(f, p: Sequence):
    """Jet of ``f`` at ``p``; works on polynomials and polynomial maps."""
    return f.taylor_shift(p)


# --- relative jets -----------------------------------------------------------


def _relative_terms(elements: Iterable[int], I_of, J_of, sources: Sequence[int], targets: Sequence[int],
                    r: int, min_degree: int) -> list[tuple[int, Alpha]]:
    """Allowed ``(j, alpha)``: whenever ``supp(alpha)`` sits in ``I(s)``, ``j`` sits in ``J(s)``."""
    elements = list(elements)
    out = []
    for alpha in multi_indices(len(sources), r, min_degree):
        supp = frozenset(sources[i] for i, a in enumerate(alpha) if a)
        required = frozenset(targets)
        for s in elements:
            if supp <= I_of(s):
                required = required & J_of(s)
        for j in targets:
            if j in required:
                out.append((j, alpha))
    return sorted(out, key=lambda t: (t[0], grlex_key(t[1])))


@dataclass(frozen=True)
class RelativeJetBasis:
    source: SetArrangement
    target: SetArrangement
    r: int
    allowed: tuple[tuple[int, Alpha], ...]

    @property
    def dimension(self) -> int:
        return len(self.allowed)

    def degree_count(self, d: int) -> int:
        return sum(1 for _, a in self.allowed if sum(a) == d)

    def index(self, j: int, alpha: Alpha) -> int:
        return self.allowed.index((j, tuple(alpha)))


def _check_pair(I: SetArrangement, J: SetArrangement) -> None:
    if I.shape != J.shape:
        raise JetError("arrangements must share their shape")


def relative_basis(I: SetArrangement, J: SetArrangement, r: int, origin: bool = False) -> RelativeJetBasis:
    """Coefficient basis of the relative polynomial maps of degree <= r.

    With ``origin=True`` constant terms are dropped (maps sending 0 to 0).
    """
    _check_pair(I, J)
    sources = sorted(I.ambient.coords)
    targets = sorted(J.ambient.coords)
    allowed = _relative_terms(I.shape.elements(), I, J, sources, targets, r, 1 if origin else 0)
    return RelativeJetBasis(I, J, r, tuple(allowed))


def rel1jet_formula(I: SetArrangement, J: SetArrangement) -> int:
    """Sum over source coordinates ``i`` of ``|J(s_i)|`` where ``s_i`` is the least
    shape element whose coordinate set contains ``i``."""
    _check_pair(I, J)
    return sum(len(J(I.minimal_element(i))) for i in sorted(I.ambient.coords))


def is_relative(f: TruncatedPolyMap, I: SetArrangement, J: SetArrangement) -> bool:
    _check_pair(I, J)
    if f.nvars != I.ambient.m or f.ntargets != J.ambient.m:
        raise JetError("map dimensions do not match the arrangements")
    for j, comp in enumerate(f.components, start=1):
        for alpha in comp.coeffs:
            supp = frozenset(i for i, a in enumerate(alpha, start=1) if a)
            for s in I.shape.elements():
                if supp <= I(s) and j not in J(s):
                    return False
    return True


def basis_element(basis: RelativeJetBasis, j: int, alpha: Alpha) -> TruncatedPolyMap:
    m, n = basis.source.ambient.m, basis.target.ambient.m
    comps = [TruncatedPoly.zero(m, basis.r) for _ in range(n)]
    comps[j - 1] = TruncatedPoly(m, basis.r, {alpha: 1})
    return TruncatedPolyMap(comps, m, basis.r)


def from_coefficients(basis: RelativeJetBasis, values: Sequence) -> TruncatedPolyMap:
    m, n = basis.source.ambient.m, basis.target.ambient.m
    data: list[dict] = [{} for _ in range(n)]
    for (j, alpha), v in zip(basis.allowed, values, strict=True):
        data[j - 1][alpha] = v
    return TruncatedPolyMap([TruncatedPoly(m, basis.r, d) for d in data], m, basis.r)


@dataclass(frozen=True)
class MultijetIndex:
    index: tuple[tuple[tuple, int], ...]
    fiber_dimension: int
    per_interval: dict


def interval_dimension(I: SetArrangement, J: SetArrangement, lo: int, hi: int, r: int) -> int:
    """Dimension of origin-preserving relative maps for the interval ``[lo, hi]``."""
    S = I.shape
    elems = S.interval(lo, hi)
    if not elems:
        raise JetError("empty interval")
    sources = sorted(I(hi))
    targets = sorted(J(hi))
    return len(_relative_terms(elems, I, J, sources, targets, r, 1))


def multijet_index(I: SetArrangement, J: SetArrangement, r: int, n: Mapping) -> MultijetIndex:
    """Index set ``{(kappa, i) : 1 <= i <= n(kappa)}`` and the multijet fiber dimension.

    ``n`` maps pairs ``(lo, hi)`` of shape labels with ``lo <= hi`` to counts.
    """
    _check_pair(I, J)
    S = I.shape
    pairs = interval_lattice(S).labels
    index = []
    per = {}
    total = 0
    for key in sorted(n, key=lambda k: pairs.index(tuple(k)) if tuple(k) in pairs else -1):
        count = int(n[key])
        lo, hi = (S.index(x) for x in key)
        if not S.leq[lo][hi]:
            raise JetError(f"{key!r} is not an interval")
        if count < 0:
            raise JetError("multiplicities must be non-negative")
        if count == 0:
            continue
        d = interval_dimension(I, J, lo, hi, r)
        per[tuple(key)] = d
        total += count * d
        index.extend((tuple(key), i) for i in range(1, count + 1))
    return MultijetIndex(tuple(index), total, per)
