"""Exact Jacobians and ranks, transversality and admissibility checks.

Stratum membership is decided exactly from rational slacks.  A check that
holds symbolically is reported as ``proved``; one that was only evaluated
at finitely many points is reported as ``sampled(N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .arrangement import DomainError
from .edging import Edging, EdgingError, Polyhedron, polyhedron_faces
from .jets import TruncatedPoly, TruncatedPolyMap
from .lattice import _bits, popcount

Q = Fraction


# --- exact linear algebra -------------------------------------------------


def row_echelon(M: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns, in exact arithmetic."""
    A = [[Q(v) for v in row] for row in M]
    if not A:
        return A, []
    rows, cols = len(A), len(A[0])
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        A[r] = [v / p for v in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A, pivots


def rank(M: Sequence[Sequence]) -> int:
    return len(row_echelon(M)[1])


def shape(M: Sequence[Sequence], ncols: int | None = None) -> tuple[int, int]:
    rows = len(M)
    cols = len(M[0]) if rows else (ncols or 0)
    return rows, cols


def corank(M: Sequence[Sequence], ncols: int | None = None) -> int:
    """``min(dim ker, dim coker)`` of the linear map with matrix ``M``."""
    rows, cols = shape(M, ncols)
    k = rank(M) if rows and cols else 0
    return min(cols - k, rows - k)


def nullspace(M: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Exact basis of ``{v : M v = 0}``."""
    if not M:
        return [[Q(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    R, piv = row_echelon(M)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [Q(0)] * ncols
        v[f] = Q(1)
        for i, c in enumerate(piv):
            v[c] = -R[i][f]
        basis.append(v)
    return basis


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum((A[i][k] * B[k][j] for k in range(inner)), Q(0)) for j in range(cols)] for i in range(len(A))]


def transpose(A: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*A)]


# --- Jacobians, transversality ----------------------------------------------


def jacobian(f: TruncatedPolyMap, p: Sequence) -> list[list[Fraction]]:
    return f.jacobian([Q(v) for v in p])


def transverse_to_coordinate_subspace(f: TruncatedPolyMap, p: Sequence, zero_coords: Iterable[int]) -> bool:
    """``f`` is transversal at ``p`` to ``{y_j = 0 for j in zero_coords}``.

    Vacuously true when ``f(p)`` is off the subspace.  Otherwise the
    image of the Jacobian plus the subspace must span, which happens iff
    the rows indexed by ``zero_coords`` are independent.
    """
    zero_coords = sorted(set(zero_coords))
    value = f(p)
    if any(value[j - 1] != 0 for j in zero_coords):
        return True
    J = jacobian(f, p)
    rows = [J[j - 1] for j in zero_coords]
    return not rows or rank(rows) == len(rows)


def _affine_face_substitution(nvars: int, r: int, a: Sequence[Fraction], b: Fraction) -> list[TruncatedPoly]:
    """Variables with ``x_i`` solved from ``a.x = b`` (``i`` the first non-zero entry)."""
    i = next(k for k, v in enumerate(a) if v != 0)
    values = [TruncatedPoly.var(nvars, k + 1, r) for k in range(nvars)]
    expr = TruncatedPoly.constant(nvars, r, b / a[i])
    for k, v in enumerate(a):
        if k != i and v != 0:
            expr = expr - TruncatedPoly.var(nvars, k + 1, r) * (v / a[i])
    values[i] = expr
    return values


def restrict_to_hyperplane(g: TruncatedPoly, a: Sequence, b) -> TruncatedPoly:
    """``g`` with one variable eliminated along ``a.x = b``; zero iff ``g`` vanishes there."""
    a = [Q(v) for v in a]
    if g.nvars == 0:
        return g
    r = max(g.r, g.degree(), 0)
    return g.with_r(r).substitute(_affine_face_substitution(g.nvars, r, a, Q(b)))


def slack_polynomial(f: TruncatedPolyMap, a: Sequence, b) -> TruncatedPoly:
    """``a . f - b`` as a polynomial on the source."""
    out = TruncatedPoly.constant(f.nvars, f.r, -Q(b))
    for coeff, comp in zip(a, f.components):
        if coeff:
            out = out + comp * Q(coeff)
    return out


def restricted_corank(f: TruncatedPolyMap, p: Sequence, X: Polyhedron, sigma: int,
                      Y: Polyhedron | None = None, tau: int = 0) -> int:
    """Corank of ``df`` from the tangent space of the face ``sigma`` to that of ``tau``."""
    n_src = f.nvars
    rows = [X.A[i] for i in _bits(sigma)]
    B = nullspace(rows, n_src)
    J = jacobian(f, p)
    JB = matmul(J, transpose(B)) if B else [[] for _ in J]
    dom = len(B)
    if Y is not None and tau:
        target_rows = [Y.A[i] for i in _bits(tau)]
        # an along map sends the face tangent into the target face tangent
        tgt = f.ntargets - rank(target_rows)
    else:
        tgt = f.ntargets
    k = rank(JB) if dom and JB else 0
    return min(dom - k, tgt - k)


def corank_stratum_codim(rho: int, dim_x: int, dim_y: int) -> int:
    """Codimension ``rho * (rho + |dim_y - dim_x|)`` of the corank-``rho`` jets."""
    if rho < 0:
        raise ValueError("corank must be non-negative")
    return rho * (rho + abs(dim_y - dim_x))


# --- admissibility ----------------------------------------------------------


@dataclass
class Verdict:
    condition: str  # along | transversal-to-face | stratum-preservation
    stratum: tuple
    ok: bool
    provenance: str
    witness: tuple | None = None
    detail: str = ""

    def to_json(self) -> dict:
        return {"condition": self.condition, "stratum": [str(s) for s in self.stratum], "ok": self.ok,
                "provenance": self.provenance,
                "witness": None if self.witness is None else [str(v) for v in self.witness],
                "detail": self.detail}


@dataclass
class AdmissibilityReport:
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return all(v.ok for v in self.verdicts)

    @property
    def failures(self) -> list[Verdict]:
        return [v for v in self.verdicts if not v.ok]

    @property
    def witness(self) -> tuple | None:
        bad = self.failures
        return bad[0].witness if bad else None

    def to_json(self) -> dict:
        return {"admissible": self.admissible,
                "witness": None if self.witness is None else [str(v) for v in self.witness],
                "verdicts": [v.to_json() for v in self.verdicts]}


def stratum_points(P: Polyhedron) -> dict[int, tuple]:
    """One exact point on each open stratum (exactly the facets of ``sigma``)."""
    F = polyhedron_faces(P)
    out = {}
    for sigma in sorted(F.nonempty, key=lambda s: (-popcount(s), s)):
        pt = P.relative_interior_point(sigma)
        if pt is not None:
            out[sigma] = tuple(pt)
    return out


def admissibility_check(f: TruncatedPolyMap, beta: Edging, X: Polyhedron, Y: Polyhedron,
                        samples: Iterable[Sequence] = ()) -> AdmissibilityReport:
    """Check ``f`` is along ``beta``, transversal to the target faces it hits,
    and sends each stratum exactly onto the stratum prescribed by ``beta``."""
    if beta.source.faces != X.labels or beta.target.faces != Y.labels:
        raise EdgingError("edging faces must be the facet labels of the two polyhedra")
    if f.nvars != X.n or f.ntargets != Y.n:
        raise DomainError("map dimensions do not match the polyhedra")
    beta.check()
    report = AdmissibilityReport()

    for C, D in sorted(beta.partial.mapping.items(), key=lambda cd: X.row(cd[0])):
        i, j = X.row(C), Y.row(D)
        g = restrict_to_hyperplane(slack_polynomial(f, Y.A[j], Y.b[j]), X.A[i], X.b[i])
        ok = g.is_zero()
        witness = None
        if not ok:
            pt = X.face_point(1 << i)
            witness = tuple(pt) if pt is not None else None
        report.verdicts.append(Verdict("along", (C,), ok, "proved", witness,
                                       "" if ok else f"image of {C} leaves {D}"))

    points: dict[int, list[tuple]] = {}
    for sigma, pt in stratum_points(X).items():
        points.setdefault(sigma, []).append(pt)
    for raw in samples:
        p = tuple(Q(v) for v in raw)
        if len(p) != X.n or not X.contains(p):
            raise DomainError(f"sample {p} is outside the source polyhedron")
        points.setdefault(X.active(p), []).append(p)

    for sigma in sorted(points, key=lambda s: (-popcount(s), s)):
        pts = points[sigma]
        tau = beta.tilde(sigma)
        name = tuple(X.labels[i] for i in _bits(sigma))
        bad_t = bad_s = None
        for p in pts:
            value = f(p)
            if not Y.contains(value):
                bad_s = bad_s or (p, f"image {tuple(str(v) for v in value)} is outside the target")
                continue
            active = Y.active(value)
            if active != tau and bad_s is None:
                got = [Y.labels[i] for i in _bits(active)]
                want = [Y.labels[i] for i in _bits(tau)]
                bad_s = (p, f"lands on {got}, expected {want}")
            if active:
                J = jacobian(f, p)
                rows = [[sum((a * J[k][c] for k, a in enumerate(Y.A[d])), Q(0)) for c in range(X.n)]
                        for d in _bits(active)]
                if rank(rows) < len(rows) and bad_t is None:
                    bad_t = (p, "differential misses the normal of " +
                             ", ".join(Y.labels[d] for d in _bits(active)))
        prov = f"sampled({len(pts)})"
        report.verdicts.append(Verdict("transversal-to-face", name, bad_t is None, prov,
                                       None if bad_t is None else bad_t[0], "" if bad_t is None else bad_t[1]))
        report.verdicts.append(Verdict("stratum-preservation", name, bad_s is None, prov,
                                       None if bad_s is None else bad_s[0], "" if bad_s is None else bad_s[1]))
    return report


# --- recognizing functions, metrics -----------------------------------------


def recognizes_face(f: TruncatedPoly, a: Sequence, b, samples: Iterable[Sequence]) -> bool:
    """``f`` vanishes on ``{a.x = b}`` (checked symbolically) and ``df`` is
    non-zero at every given sample of that hyperplane."""
    a = [Q(v) for v in a]
    if not restrict_to_hyperplane(f, a, b).is_zero():
        return False
    for raw in samples:
        p = [Q(v) for v in raw]
        if sum((x * y for x, y in zip(a, p)), Q(0)) != Q(b):
            raise DomainError(f"sample {tuple(p)} is not on the face")
        if all(g == 0 for g in f.gradient(p)):
            return False
    return True


def project_to_coordinate_face(p: Sequence, i: int, value=0) -> tuple:
    q = list(p)
    q[i - 1] = Q(value)
    return tuple(q)


def jet_vector(F, p: Sequence, k: int) -> list[float]:
    """Coefficients of the ``k``-jet of ``F`` at ``p`` (Taylor coefficients)."""
    if isinstance(F, TruncatedPolyMap):
        shifted = F.taylor_shift([Q(v) for v in p])
        return [float(v) for v in shifted.coefficient_vector(k)]
    return [float(v) for v in F.jet(p, k)]


def whitney_rho(F, G, k: int, grid: Sequence[Sequence]) -> float:
    """Grid maximum of ``d / (1 + d)``, ``d`` the distance between ``k``-jets.

    This is a lower bound for the supremum over the whole domain.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("whitney_rho needs a non-empty grid")
    best = 0.0
    for p in grid:
        u, v = jet_vector(F, p, k), jet_vector(G, p, k)
        if len(u) != len(v):
            raise ValueError("jets have different shapes")
        d = math.sqrt(sum((x - y) ** 2 for x, y in zip(u, v)))
        best = max(best, d / (1 + d))
    return best
