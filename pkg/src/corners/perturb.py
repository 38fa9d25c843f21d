"""Perturbations that respect the corner structure.

The pieces are: a cone of polynomial perturbations that keep unmarked
target coordinates non-negative near the origin, evaluable maps built from
polynomials and bump profiles, a Monte-Carlo demonstration that perturbed
jets are transversal to coordinate conditions, the partition-of-unity map
into a polyhedron along an edging, and a small embedding pipeline.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arrangement import DomainError, MarkedSet, SetArrangement
from .edging import Edging, EdgingError, Polyhedron, PolyhedronError, polyhedron_faces
from .jets import (JetError, TruncatedPoly, TruncatedPolyMap, alpha_factorial, from_coefficients, is_relative,
                   relative_basis)
from .lattice import FiniteLattice, _bits, popcount
from .lp import feasible_point, in_convex_hull
from .smooth import BumpProfile, ramp, ramp_d
from .transversality import AdmissibilityReport, Verdict, stratum_points, whitney_rho

Q = Fraction
DENOM = 1 << 20
DEFAULT_SCHEDULE = (0.2, 0.1, 0.05, 0.02)


class SamplerError(ValueError):
    pass


class ModelEscape(ArithmeticError):
    """A perturbed value has a negative unmarked coordinate."""

    def __init__(self, point, value):
        super().__init__(f"perturbed value {tuple(str(v) for v in value)} at {tuple(str(v) for v in point)} "
                         "leaves the model")
        self.point = tuple(point)
        self.value = tuple(value)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for ``seed`` and a spawn key; distinct keys give independent streams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


# --- the cone of safe perturbations -----------------------------------------


def _unmarked_constraints(I: SetArrangement, J: SetArrangement):
    """Pairs ``(s, j)``: unmarked target ``j`` that must stay positive on stratum ``s``."""
    return [(s, j) for s in I.shape.elements() for j in sorted(J(s)) if j in J.ambient.unmarked]


def cone_margin(b: TruncatedPolyMap, I: SetArrangement, J: SetArrangement, delta) -> Fraction | None:
    """Smallest ``a_j0 - sum |a_ja| delta^|a|`` over the constraints; ``None`` if there are none.

    The sum runs over non-constant terms supported in the stratum's coordinates.
    """
    delta = Q(delta)
    best = None
    for s, j in _unmarked_constraints(I, J):
        comp = b[j - 1]
        slack = comp.constant_term
        for alpha, c in comp.coeffs.items():
            if any(alpha) and all(i in I(s) for i, a in enumerate(alpha, start=1) if a):
                slack -= abs(c) * delta ** sum(alpha)
        best = slack if best is None else min(best, slack)
    return best


def cone_membership(b: TruncatedPolyMap, I: SetArrangement, J: SetArrangement, delta) -> bool:
    if Q(delta) <= 0:
        raise ValueError("delta must be positive")
    if not is_relative(b, I, J):
        return False
    margin = cone_margin(b, I, J, delta)
    return margin is None or margin > 0


@dataclass(frozen=True)
class ConeSample:
    delta: Fraction
    epsilon: Fraction
    b: TruncatedPolyMap
    source: SetArrangement
    target: SetArrangement
    seed: int | None = None

    def to_json(self) -> dict:
        return {"delta": str(self.delta), "epsilon": str(self.epsilon), "seed": self.seed, "b": self.b.to_json()}


def cone_sample(I: SetArrangement, J: SetArrangement, delta, epsilon, seed: int = 0, r: int = 1,
                rng: np.random.Generator | None = None) -> ConeSample:
    """Random member of the cone with every coefficient at most ``epsilon``.

    Coefficients are multiples of ``epsilon / 2**20``.  Free targets get
    coefficients uniform on ``[-eps, eps]``; each unmarked target gets a
    constant term uniform on ``(eps/2, eps]`` and its other terms are scaled
    so that they use at most half of it on the ``delta`` box.
    """
    delta, eps = Q(delta), Q(epsilon)
    if delta <= 0 or eps <= 0:
        raise SamplerError("delta and epsilon must be positive")
    if rng is None:
        rng = make_rng(seed)
    basis = relative_basis(I, J, r)
    allowed = set(basis.allowed)
    zero = (0,) * I.ambient.m
    for j in sorted(J.ambient.unmarked):
        if (j, zero) not in allowed:
            raise SamplerError(f"unmarked target {j} is forced to vanish at the origin; no positive constant "
                               "term can be placed, so the cone is empty")
    nonconst = {j: sum(1 for jj, a in basis.allowed if jj == j and any(a)) for j in J.ambient.unmarked}
    values = []
    for j, alpha in basis.allowed:
        if j in J.ambient.unmarked:
            if not any(alpha):
                values.append(eps * (DENOM // 2 + int(rng.integers(1, DENOM // 2, endpoint=True))) / DENOM)
                continue
            values.append(Q(int(rng.integers(-DENOM, DENOM, endpoint=True)), DENOM))
        else:
            values.append(eps * int(rng.integers(-DENOM, DENOM, endpoint=True)) / DENOM)
    # second pass: scale the non-constant unmarked terms now that constants are known
    const = {j: v for (j, alpha), v in zip(basis.allowed, values) if j in J.ambient.unmarked and not any(alpha)}
    for idx, (j, alpha) in enumerate(basis.allowed):
        if j in J.ambient.unmarked and any(alpha):
            cap = min(eps, const[j] / (2 * nonconst[j] * delta ** sum(alpha)))
            values[idx] = values[idx] * cap
    b = from_coefficients(basis, values)
    return ConeSample(delta, eps, b, I, J, seed)


# --- evaluable maps -----------------------------------------------------------


class EvalMap:
    """A smooth map with float values, exact rational values and a Jacobian."""

    n_in: int
    n_out: int

    def value(self, p: Sequence) -> list[float]:
        raise NotImplementedError

    def exact(self, p: Sequence) -> tuple[Fraction, ...]:
        raise NotImplementedError

    def jacobian(self, p: Sequence) -> list[list[float]]:
        raise NotImplementedError

    def __call__(self, p: Sequence) -> list[float]:
        return self.value(p)

    def jet(self, p: Sequence, k: int) -> list[float]:
        """Taylor coefficients up to order ``k <= 1``, component by component."""
        if k > 1:
            raise ValueError("evaluable maps provide jets up to order 1")
        val = self.value(p)
        if k == 0:
            return list(val)
        J = self.jacobian(p)
        return [x for j in range(self.n_out) for x in [val[j], *J[j]]]


class PolyMap(EvalMap):
    def __init__(self, f: TruncatedPolyMap):
        self.f = f
        self.n_in, self.n_out = f.nvars, f.ntargets
        self._grad = [[c.derivative(i) for i in range(1, f.nvars + 1)] for c in f.components]

    def value(self, p):
        return list(self.f.eval_float([float(v) for v in p]))

    def exact(self, p):
        return self.f([Q(v) for v in p])

    def jacobian(self, p):
        q = [float(v) for v in p]
        return [[g.eval_float(q) for g in row] for row in self._grad]


def as_evalmap(F) -> EvalMap:
    return PolyMap(F) if isinstance(F, TruncatedPolyMap) else F


class PerturbedMap(EvalMap):
    """``G(p) = F(p) + rho_U(p) rho_V(F(p)) b(p)``."""

    def __init__(self, F, b: TruncatedPolyMap, rho_U: BumpProfile | None = None,
                 rho_V: BumpProfile | None = None, model: MarkedSet | None = None):
        self.F = as_evalmap(F)
        if b.nvars != self.F.n_in or b.ntargets != self.F.n_out:
            raise DomainError("perturbation shape does not match the map")
        self.b = PolyMap(b)
        self.rho_U, self.rho_V = rho_U, rho_V
        self.model = model
        self.n_in, self.n_out = self.F.n_in, self.F.n_out

    def _weight(self, p, Fp) -> float:
        w = 1.0
        if self.rho_U is not None:
            w *= self.rho_U([float(v) for v in p])
        if self.rho_V is not None:
            w *= self.rho_V([float(v) for v in Fp])
        return w

    def value(self, p):
        Fp = self.F.value(p)
        w = self._weight(p, Fp)
        return [a + w * c for a, c in zip(Fp, self.b.value(p))]

    def exact(self, p):
        Fp = self.F.exact(p)
        w = Q(self._weight(p, Fp))
        out = tuple(a + w * c for a, c in zip(Fp, self.b.exact(p)))
        if self.model is not None and any(out[i - 1] < 0 for i in self.model.unmarked):
            raise ModelEscape(p, out)
        return out

    def jacobian(self, p):
        q = [float(v) for v in p]
        Fp = self.F.value(q)
        JF = self.F.jacobian(q)
        bp = self.b.value(q)
        Jb = self.b.jacobian(q)
        u = self.rho_U(q) if self.rho_U is not None else 1.0
        v = self.rho_V(Fp) if self.rho_V is not None else 1.0
        grad_w = [0.0] * self.n_in
        if self.rho_U is not None:
            grad_w = [g * v for g in self.rho_U.gradient(q)]
        if self.rho_V is not None:
            gv = self.rho_V.gradient(Fp)
            for c in range(self.n_in):
                grad_w[c] += u * sum(gv[k] * JF[k][c] for k in range(self.n_out))
        w = u * v
        return [[JF[j][c] + grad_w[c] * bp[j] + w * Jb[j][c] for c in range(self.n_in)]
                for j in range(self.n_out)]


def perturb_map(F, sample: ConeSample, rho_U: BumpProfile, rho_V: BumpProfile) -> PerturbedMap:
    """Perturb ``F`` by a cone sample, cut off by ``rho_U`` on the source and ``rho_V`` on the target.

    The source bump must live inside the sample's ``delta`` box, which is where
    the cone inequality guarantees that unmarked coordinates stay non-negative.
    """
    I, J = sample.source, sample.target
    F = as_evalmap(F)
    if F.n_in != I.ambient.m or F.n_out != J.ambient.m:
        raise DomainError("map dimensions do not match the arrangements")
    if not cone_membership(sample.b, I, J, sample.delta):
        raise SamplerError("the perturbation is not in the cone")
    if J.ambient.unmarked:
        reach = math.sqrt(sum(c * c for c in rho_U.center)) + rho_U.outer
        if reach > float(sample.delta):
            raise DomainError(f"source bump reaches radius {reach}, beyond delta = {sample.delta}")
    return PerturbedMap(F, sample.b, rho_U, rho_V, model=J.ambient)


# --- Monte-Carlo transversality ---------------------------------------------------


@dataclass(frozen=True)
class JetCondition:
    """The jet coefficient ``d^alpha G_j / alpha!`` equals ``value`` (``j`` from 1)."""

    target: int
    alpha: tuple
    value: Fraction = Q(0)


def _poly_arrays(p: TruncatedPoly):
    if not p.coeffs:
        return np.zeros((0, p.nvars), dtype=np.int64), np.zeros(0)
    items = list(p.coeffs.items())
    return (np.array([a for a, _ in items], dtype=np.int64).reshape(len(items), p.nvars),
            np.array([float(c) for _, c in items]))


def eval_on_grid(p: TruncatedPoly, grid: np.ndarray) -> np.ndarray:
    """Values of ``p`` at every row of ``grid``."""
    E, c = _poly_arrays(p)
    if not len(c):
        return np.zeros(len(grid))
    mono = np.prod(grid[:, None, :] ** E[None, :, :], axis=2) if p.nvars else np.ones((len(grid), len(c)))
    return mono @ c


def _condition_polys(G: TruncatedPolyMap, W: Sequence[JetCondition]):
    out = []
    for w in W:
        d = G[w.target - 1].partial(tuple(w.alpha)) * Q(1, alpha_factorial(tuple(w.alpha)))
        out.append(d - Q(w.value))
    return out


def jet_hits(G: TruncatedPolyMap, W: Sequence[JetCondition], grid: np.ndarray, tol: float):
    """Grid rows where the jet of ``G`` is within ``tol`` of ``W`` and whether it is transversal there."""
    conds = _condition_polys(G, W)
    vals = np.stack([eval_on_grid(c, grid) for c in conds], axis=1) if conds else np.zeros((len(grid), 0))
    near = np.all(np.abs(vals) < tol, axis=1)
    out = []
    for row in np.nonzero(near)[0]:
        pt = grid[row]
        D = np.array([[c.derivative(i).eval_float(pt) if c.nvars else 0.0 for i in range(1, G.nvars + 1)]
                      for c in conds]).reshape(len(conds), G.nvars)
        full = len(conds) <= G.nvars and (len(conds) == 0 or np.linalg.matrix_rank(D, tol=1e-9) == len(conds))
        out.append((tuple(float(x) for x in pt), bool(full)))
    return out


def mc_transversality(F: TruncatedPolyMap, I: SetArrangement, J: SetArrangement, W: Sequence[JetCondition],
                      grid: Sequence[Sequence[float]], epsilons: Sequence = DEFAULT_SCHEDULE, trials: int = 500,
                      seed: int = 0, r: int = 1, delta=1, tol: float = 1e-4, max_witnesses: int = 5) -> dict:
    """Fraction of cone perturbations ``F + b`` whose jet is transversal to ``W`` on ``grid``.

    ``W`` is the affine coordinate subspace cut out by the conditions.  A trial
    fails when some grid point has its jet within ``tol`` of ``W`` while the
    condition map has a rank-deficient derivative there; when ``W`` has
    codimension above the source dimension that means any near hit.  The grid
    is assumed to lie where the cut-off bumps are identically 1, so the
    perturbed map is the polynomial ``F + b``.
    """
    grid = np.array([[float(x) for x in p] for p in grid], dtype=float).reshape(len(grid), F.nvars)
    conds = list(W)
    for w in conds:
        if not 1 <= w.target <= F.ntargets or len(w.alpha) != F.nvars:
            raise JetError(f"bad jet condition {w}")
    top = max(F.r, r, max((sum(w.alpha) for w in conds), default=0))
    base = F.with_r(top)
    results = []
    for e_idx, eps in enumerate(epsilons):
        successes = 0
        witnesses = []
        for t in range(trials):
            rng = make_rng(seed, e_idx, t)
            b = cone_sample(I, J, delta, Q(eps), seed, r, rng=rng).b.with_r(top)
            hits = jet_hits(base + b, conds, grid, tol)
            bad = [pt for pt, ok in hits if not ok]
            if bad:
                if len(witnesses) < max_witnesses:
                    witnesses.append({"trial": t, "point": list(bad[0])})
            else:
                successes += 1
        results.append({"seed": seed, "epsilon": float(eps), "trials": trials, "successes": successes,
                        "rate": successes / trials if trials else 1.0, "witnesses": witnesses})
    return {"seed": seed, "tolerance": tol, "codim": len(conds), "source_dim": F.nvars,
            "provenance": f"statistical({trials}, {seed})", "results": results}


# --- maps into polyhedra along an edging ------------------------------------------


def sample_strata(P: Polyhedron, per_stratum: int, rng: np.random.Generator) -> list[tuple[int, tuple]]:
    """Exact random points on every open stratum of ``P``.

    A point of stratum ``sigma`` is a random positive combination of one
    reference point on each stratum in its closure, with the reference point
    of ``sigma`` itself always weighted.
    """
    refs = stratum_points(P)
    out = []
    for sigma in sorted(refs, key=lambda s: (-popcount(s), s)):
        closure = [s for s in refs if s & sigma == sigma]
        out.append((sigma, refs[sigma]))
        for _ in range(per_stratum - 1 if len(closure) > 1 else 0):
            w = {s: Q(int(rng.integers(0, 64))) for s in closure}
            w[sigma] += 1
            total = sum(w.values())
            out.append((sigma, tuple(sum((w[s] * refs[s][i] for s in closure), Q(0)) / total
                                     for i in range(P.n))))
    return out


class PolyhedronMap(EvalMap):
    """``F = sum_sigma rho_sigma v(sigma) / sum_sigma rho_sigma`` over the vertices of the face structure.

    ``rho_sigma`` is a product of ramps of the scaled slacks of the facets not
    in ``sigma``, so it vanishes exactly on those facets and equals 1 once all
    of them are at least ``2b/3`` away.
    """

    def __init__(self, X: Polyhedron, beta: Edging, K: Polyhedron, max_halvings: int = 40):
        if beta.source.faces != X.labels or beta.target.faces != K.labels:
            raise EdgingError("edging faces must be the facet labels of the two polyhedra")
        beta.check()
        self.X, self.K, self.beta = X, K, beta
        self.n_in, self.n_out = X.n, K.n
        self.vertices = beta.source.maximal_sets()
        self.v = {}
        for sigma in self.vertices:
            pt = K.relative_interior_point(beta.tilde(sigma))
            if pt is None:
                raise PolyhedronError(f"target face for {beta.source.members(sigma)} is empty; "
                                      "the edging should have excluded this")
            self.v[sigma] = tuple(pt)
        self.b = self._threshold(max_halvings)

    def _threshold(self, max_halvings: int) -> Fraction:
        """Largest ``2**-k`` for which every non-face set of facets has no common ``b``-near point."""
        X, N = self.X, self.beta.source
        k = len(X.A)
        nonfaces = [t for t in range(1 << k) if t not in N and all((t & ~(1 << i)) in N for i in _bits(t))]
        b = Q(1)
        for _ in range(max_halvings):
            if all(self._near_empty(t, b) for t in nonfaces):
                return b
            b /= 2
        raise PolyhedronError("no threshold separates the non-intersecting facets")

    def _near_empty(self, tau: int, b: Fraction) -> bool:
        X = self.X
        A = list(X.A) + [[-a for a in X.A[i]] for i in _bits(tau)]
        rhs = list(X.b) + [-(X.b[i] + b) for i in _bits(tau)]
        return feasible_point(A, rhs, n=X.n) is None

    def _u(self, p) -> list[float]:
        return [float(s / self.b) for s in self.X.slacks([Q(v) for v in p])]

    def weights(self, p) -> dict[int, float]:
        u = [ramp(x) for x in self._u(p)]
        k = len(u)
        return {s: math.prod(u[i] for i in range(k) if not (s >> i) & 1) for s in self.vertices}

    def exact(self, p):
        w = {s: Q(x) for s, x in self.weights(p).items()}
        total = sum(w.values())
        if total <= 0:
            raise DomainError(f"{tuple(p)} is outside the cover")
        return tuple(sum((w[s] * self.v[s][i] for s in self.vertices), Q(0)) / total for i in range(self.n_out))

    def value(self, p):
        w = self.weights(p)
        total = sum(w.values())
        return [sum(w[s] * float(self.v[s][i]) for s in self.vertices) / total for i in range(self.n_out)]

    def jacobian(self, p):
        us = self._u(p)
        r = [ramp(x) for x in us]
        dr = [ramp_d(x) / float(self.b) for x in us]
        k = len(us)
        A = [[float(a) for a in row] for row in self.X.A]
        w, dw = {}, {}
        for s in self.vertices:
            out = [i for i in range(k) if not (s >> i) & 1]
            w[s] = math.prod(r[i] for i in out)
            g = [0.0] * self.n_in
            for i in out:
                rest = math.prod(r[j] for j in out if j != i)
                for c in range(self.n_in):
                    g[c] += dr[i] * A[i][c] * rest
            dw[s] = g
        total = sum(w.values())
        dtotal = [sum(dw[s][c] for s in self.vertices) for c in range(self.n_in)]
        val = [sum(w[s] * float(self.v[s][i]) for s in self.vertices) / total for i in range(self.n_out)]
        return [[(sum(dw[s][c] * float(self.v[s][i]) for s in self.vertices) - val[i] * dtotal[c]) / total
                 for c in range(self.n_in)] for i in range(self.n_out)]

    def supporting_vertices(self, p) -> list[int]:
        sigma = self.X.active([Q(v) for v in p])
        return [s for s in self.vertices if s & sigma == sigma]


def verify_polyhedron_map(F: PolyhedronMap, samples: Iterable[Sequence]) -> dict:
    """Exact checks at each sample: the value lies in ``K``, on the faces the
    edging prescribes, and in the hull of the vertex values of its stratum."""
    n = 0
    fails = []
    for raw in samples:
        p = tuple(Q(v) for v in raw)
        n += 1
        sigma = F.X.active(p)
        value = F.exact(p)
        want = F.beta.tilde(sigma)
        checks = {
            "in_target": F.K.contains(value),
            "along": F.K.active(value) & want == want,
            "containment": in_convex_hull(value, [F.v[s] for s in F.supporting_vertices(p)]),
        }
        for name, ok in checks.items():
            if not ok:
                fails.append({"check": name, "point": [str(v) for v in p]})
    return {"ok": not fails, "samples": n, "provenance": f"sampled({n})", "failures": fails,
            "threshold": str(F.b), "vertices": {str(list(F.beta.source.members(s))): [str(x) for x in F.v[s]]
                                                for s in F.vertices}}


def polyhedron_map(X: Polyhedron, beta: Edging, K: Polyhedron, per_stratum: int = 20,
                   seed: int = 0) -> tuple[PolyhedronMap, dict]:
    F = PolyhedronMap(X, beta, K)
    pts = [p for _, p in sample_strata(X, per_stratum, make_rng(seed))]
    report = verify_polyhedron_map(F, pts)
    report["seed"] = seed
    return F, report


# --- proper lifts and the embedding pipeline ------------------------------------------


class LiftedMap(EvalMap):
    """``p -> (F(p), |p|^2, 0, ..., 0)`` with ``extra`` trailing zeros."""

    def __init__(self, F, extra: int = 0):
        self.F = as_evalmap(F)
        self.extra = extra
        self.n_in, self.n_out = self.F.n_in, self.F.n_out + 1 + extra

    def value(self, p):
        q = [float(v) for v in p]
        return list(self.F.value(q)) + [sum(x * x for x in q)] + [0.0] * self.extra

    def exact(self, p):
        q = [Q(v) for v in p]
        return tuple(self.F.exact(q)) + (sum((x * x for x in q), Q(0)),) + (Q(0),) * self.extra

    def jacobian(self, p):
        q = [float(v) for v in p]
        return [list(r) for r in self.F.jacobian(q)] + [[2 * x for x in q]] + \
            [[0.0] * self.n_in for _ in range(self.extra)]


def proper_lift(F, extra: int = 0) -> LiftedMap:
    return LiftedMap(F, extra)


def properness_check(G: LiftedMap, samples: Iterable[Sequence], R: float) -> bool:
    """Samples whose image lies in the ball of radius ``R`` stay in the ball of radius ``sqrt(R)``."""
    for p in samples:
        q = [float(v) for v in p]
        if math.sqrt(sum(x * x for x in G.value(q))) <= R and sum(x * x for x in q) > R + 1e-12:
            return False
    return True


def sampled_admissibility(G: EvalMap, beta: Edging, X: Polyhedron, Y: Polyhedron,
                          points: Sequence[tuple[int, tuple]], rank_tol: float = 1e-9) -> AdmissibilityReport:
    """Admissibility checks at sample points for an evaluable map.

    Face incidences are exact (rational values); ranks use floating point.
    """
    report = AdmissibilityReport()
    groups: dict[int, list[tuple]] = {}
    for sigma, p in points:
        groups.setdefault(sigma, []).append(p)
    for sigma in sorted(groups, key=lambda s: (-popcount(s), s)):
        pts = groups[sigma]
        want = beta.tilde(sigma)
        name = tuple(X.labels[i] for i in _bits(sigma))
        bad_a = bad_t = bad_s = None
        for p in pts:
            value = G.exact(p)
            active = Y.active(value)
            if not Y.contains(value):
                bad_s = bad_s or (p, "image is outside the target")
                continue
            if active & want != want:
                bad_a = bad_a or (p, "image leaves a prescribed face")
            if active != want:
                bad_s = bad_s or (p, f"lands on {[Y.labels[i] for i in _bits(active)]}")
            if active:
                Jm = np.array(G.jacobian(p), dtype=float).reshape(G.n_out, G.n_in)
                rows = np.array([[float(a) for a in Y.A[d]] for d in _bits(active)]) @ Jm
                if np.linalg.matrix_rank(rows, tol=rank_tol) < len(rows):
                    bad_t = bad_t or (p, "differential misses a face normal")
        prov = f"sampled({len(pts)})"
        for cond, bad in (("along", bad_a), ("transversal-to-face", bad_t), ("stratum-preservation", bad_s)):
            report.verdicts.append(Verdict(cond, name, bad is None, prov, None if bad is None else bad[0],
                                           "" if bad is None else bad[1]))
    return report


def _immersion_and_injectivity(G: EvalMap, points: Sequence[tuple[int, tuple]], tol: float):
    worst_sv = math.inf
    corank_fail = None
    for _, p in points:
        if G.n_in == 0:
            break
        sv = np.linalg.svd(np.array(G.jacobian(p), dtype=float).reshape(G.n_out, G.n_in), compute_uv=False)
        smallest = float(sv[-1]) if G.n_out >= G.n_in else 0.0
        worst_sv = min(worst_sv, smallest)
        if smallest <= tol and corank_fail is None:
            corank_fail = p
    groups: dict[int, list] = {}
    for sigma, p in points:
        groups.setdefault(sigma, []).append(p)
    closest = math.inf
    inj_fail = None
    for pts in groups.values():
        vals = [np.array(G.value(p)) for p in pts]
        for a, b in itertools.combinations(range(len(pts)), 2):
            if pts[a] == pts[b]:
                continue
            d = float(np.linalg.norm(vals[a] - vals[b]))
            closest = min(closest, d)
            if d <= tol and inj_fail is None:
                inj_fail = (pts[a], pts[b])
    return worst_sv, corank_fail, closest, inj_fail


@dataclass
class EmbeddingReport:
    ok: bool
    rounds: int
    seed: int
    whitney_distance: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"ok": self.ok, "rounds": self.rounds, "seed": self.seed,
                "whitney_distance": self.whitney_distance, "diagnostics": self.diagnostics,
                "provenance": f"statistical({self.rounds}, {self.seed})"}


def _constant_arrangement(m: int) -> SetArrangement:
    return SetArrangement.constant(FiniteLattice.chain(1), MarkedSet(m, m))


def embedding_demo(X: Polyhedron, beta: Edging, K: Polyhedron, n: int, seed: int = 0, epsilon=0.05,
                   max_rounds: int = 50, per_stratum: int = 12, r: int = 2, tol: float = 1e-9) -> EmbeddingReport:
    """Try to embed ``X`` into ``K x R^n`` along ``beta``.

    The base map is the polyhedron map followed by the proper lift; each round
    adds a fresh random polynomial perturbation of size ``epsilon`` to the
    ``R^n`` coordinates and runs the sampled admissibility, immersion and
    injectivity checks.
    """
    if n < 1:
        raise ValueError("the lift needs at least one extra real coordinate")
    if 2 * X.n + 1 > K.n + n:
        raise ValueError(f"need 2*{X.n}+1 <= {K.n}+{n} for an embedding")
    F0 = PolyhedronMap(X, beta, K)
    F1 = proper_lift(F0, extra=n - 1)
    Y = Polyhedron([list(row) + [0] * n for row in K.A], K.b, [(0, lab) for lab in K.labels], check=False)
    Y.n = K.n + n
    lifted = Edging.from_mapping(beta.source, polyhedron_faces(Y),
                                 {C: (0, D) for C, D in beta.partial.mapping.items()})
    points = sample_strata(X, per_stratum, make_rng(seed, 0))
    flat = [p for _, p in points]
    I = _constant_arrangement(X.n)
    Jn = _constant_arrangement(n)
    span = max((math.sqrt(sum(float(x) ** 2 for x in p)) for p in flat), default=0.0)
    rho_U = BumpProfile([0.0] * X.n, span + 1, span + 2)
    last = {}
    for rnd in range(1, max_rounds + 1):
        small = cone_sample(I, Jn, 1, Q(epsilon), seed, r, rng=make_rng(seed, 1, rnd)).b
        pad = [TruncatedPoly.zero(X.n, r) for _ in range(K.n)]
        b = TruncatedPolyMap(pad + list(small.components), X.n, r)
        G = PerturbedMap(F1, b, rho_U, None)
        adm = sampled_admissibility(G, lifted, X, Y, points)
        worst_sv, corank_fail, closest, inj_fail = _immersion_and_injectivity(G, points, tol)
        last = {"admissible": adm.admissible, "smallest_singular_value": worst_sv,
                "closest_pair_distance": closest,
                "failures": [v.to_json() for v in adm.failures][:3]}
        if corank_fail is not None:
            last["corank_witness"] = [str(x) for x in corank_fail]
        if inj_fail is not None:
            last["injectivity_witness"] = [[str(x) for x in q] for q in inj_fail]
        if adm.admissible and corank_fail is None and inj_fail is None:
            rho = whitney_rho(F1, G, 1, flat) if flat else 0.0
            last["samples"] = len(flat)
            return EmbeddingReport(True, rnd, seed, rho, last)
    return EmbeddingReport(False, max_rounds, seed, math.nan, last)
