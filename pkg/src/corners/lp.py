"""Exact rational linear programming (two-phase simplex, Bland's rule).

Everything is carried in :class:`fractions.Fraction`, so feasibility and
optimality verdicts are exact.  Bland's rule rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Q = Fraction
Row = Sequence


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None = None
    value: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def _pivot(T: list[list[Fraction]], obj: list[Fraction], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        T[r] = row = [v / p for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]
    f = obj[c]
    if f:
        obj[:] = [a - f * b for a, b in zip(obj, row)]
    basis[r] = c


def _run(T, obj, basis, allowed: int) -> str:
    """Maximize with reduced profits in ``obj`` (last entry: -value)."""
    while True:
        enter = next((j for j in range(allowed) if obj[j] > 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        _pivot(T, obj, basis, best[1], enter)


def linprog(c: Row, A_ge: Sequence[Row] = (), b_ge: Row = (), A_eq: Sequence[Row] = (),
            b_eq: Row = (), maximize: bool = True) -> LPResult:
    """Optimize ``c.x`` over ``A_ge x >= b_ge``, ``A_eq x = b_eq`` with x free."""
    n = len(c)
    rows = [([Q(v) for v in a], Q(b), True) for a, b in zip(A_ge, b_ge)]
    rows += [([Q(v) for v in a], Q(b), False) for a, b in zip(A_eq, b_eq)]
    for a, _, _ in rows:
        if len(a) != n:
            raise ValueError("constraint width does not match the objective")
    n_ge = sum(1 for r in rows if r[2])
    m = len(rows)
    # columns: u (n), v (n), slacks (n_ge), artificials (m), rhs
    width = 2 * n + n_ge + m
    T = []
    k = 0
    for i, (a, b, ge) in enumerate(rows):
        row = a + [-v for v in a] + [Q(0)] * n_ge
        if ge:
            row[2 * n + k] = Q(-1)
            k += 1
        if b < 0:
            row = [-v for v in row]
            b = -b
        art = [Q(0)] * m
        art[i] = Q(1)
        T.append(row + art + [b])
    basis = [2 * n + n_ge + i for i in range(m)]
    n_real = 2 * n + n_ge

    # phase 1: maximize -sum(artificials)
    obj = [Q(0)] * (width + 1)
    for row in T:
        for j in range(n_real):
            obj[j] += row[j]
        obj[-1] += row[-1]
    _run(T, obj, basis, n_real)
    if obj[-1] != 0:
        return LPResult("infeasible")

    # drive zero-level artificials out of the basis, dropping redundant rows
    i = 0
    while i < len(T):
        if basis[i] >= n_real:
            col = next((j for j in range(n_real) if T[i][j] != 0), None)
            if col is None:
                del T[i]
                del basis[i]
                continue
            _pivot(T, obj, basis, i, col)
        i += 1
    T = [row[:n_real] + [row[-1]] for row in T]

    sign = 1 if maximize else -1
    cost = [sign * Q(v) for v in c] + [-sign * Q(v) for v in c] + [Q(0)] * n_ge
    obj = cost + [Q(0)]
    for i, row in enumerate(T):
        f = obj[basis[i]]
        if f:
            obj = [a - f * b for a, b in zip(obj, row)]
    status = _run(T, obj, basis, n_real)
    z = [Q(0)] * n_real
    for i, row in enumerate(T):
        z[basis[i]] = row[-1]
    x = tuple(z[j] - z[n + j] for j in range(n))
    if status == "unbounded":
        return LPResult("unbounded", x, None)
    value = sum((Q(ci) * xi for ci, xi in zip(c, x)), Q(0))
    return LPResult("optimal", x, value)


def feasible_point(A_ge: Sequence[Row] = (), b_ge: Row = (), A_eq: Sequence[Row] = (),
                   b_eq: Row = (), n: int | None = None) -> tuple[Fraction, ...] | None:
    """Some point of the polyhedron, or ``None`` when it is empty."""
    if n is None:
        src = list(A_ge) or list(A_eq)
        if not src:
            raise ValueError("cannot infer dimension from an empty system")
        n = len(src[0])
    res = linprog([0] * n, A_ge, b_ge, A_eq, b_eq)
    return res.x if res.feasible else None


def interior_point(A_ge: Sequence[Row], b_ge: Row, A_eq: Sequence[Row] = (), b_eq: Row = (),
                   n: int | None = None, cap: Fraction = Q(1)) -> tuple[tuple[Fraction, ...], Fraction] | None:
    """Maximize the common slack ``t <= cap`` of the inequalities.

    Returns ``(x, t)``; ``t > 0`` means ``x`` lies in the relative interior
    of the equality-constrained piece.  ``None`` when the system is empty.
    """
    if n is None:
        src = list(A_ge) or list(A_eq)
        if not src:
            raise ValueError("cannot infer dimension from an empty system")
        n = len(src[0])
    ge = [list(a) + [-1] for a in A_ge] + [[0] * n + [-1]]
    rhs = list(b_ge) + [-cap]
    eq = [list(a) + [0] for a in A_eq]
    res = linprog([0] * n + [1], ge, rhs, eq, list(b_eq))
    if not res.feasible:
        return None
    return res.x[:n], res.x[n]


def in_convex_hull(point: Sequence, vertices: Sequence[Sequence]) -> bool:
    """Exact test of ``point`` in ``conv(vertices)``."""
    if not vertices:
        return False
    d = len(point)
    k = len(vertices)
    A_eq = [[Q(vertices[j][i]) for j in range(k)] for i in range(d)] + [[1] * k]
    b_eq = [Q(v) for v in point] + [1]
    A_ge = [[1 if j == i else 0 for j in range(k)] for i in range(k)]
    return feasible_point(A_ge, [0] * k, A_eq, b_eq, n=k) is not None
