"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import itertools
import math
import time
from fractions import Fraction as Q

import numpy as np
import pytest
import sympy

from conftest import ACCEPTANCE, SHAPES, arrangement_from_minima
from corners.arrangement import MarkedSet, SetArrangement
from corners.collar import (beta_collaring_check, boundary_samples, box_facet, build_collaring_field,
                            convergence_ratio, flow, random_box_points, semigroup_defect)
from corners.edging import Edging, Polyhedron, polyhedron_faces
from corners.jets import TruncatedPoly, TruncatedPolyMap, multi_indices, rel1jet_formula, relative_basis, \
    truncate_compose
from corners.lattice import (BooleanFaceLattice, BooleanHom, FiniteLattice, LatticeError, PartialMap,
                             all_partial_maps, hom_to_partial, partial_to_hom)
from corners.perturb import (DENOM, JetCondition, ModelEscape, cone_sample, embedding_demo, make_rng,
                             mc_transversality, perturb_map, polyhedron_map)
from corners.smooth import BumpProfile
from corners.transversality import admissibility_check, corank, jacobian, restricted_corank


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


# --- 1: partial maps and Boolean lattice homomorphisms -----------------------------


def _union_tables(n: int, k: int, images):
    """Every map of ``n`` coatoms to ``images``, extended to all face sets by union."""
    for choice in itertools.product(images, repeat=n):
        table = []
        for sigma in range(1 << n):
            v = 0
            for i in range(n):
                if sigma >> i & 1:
                    v |= choice[i]
            table.append(v)
        yield tuple(table)


def test_criterion_1_equivalence():
    start = time.perf_counter()
    grounds = ["abcd"[:n] for n in range(5)]
    targets = ["wxyz"[:n] for n in range(5)]
    maps = homs = 0
    for A, B in itertools.product(grounds, targets):
        for f in all_partial_maps(A, B):
            assert hom_to_partial(partial_to_hom(f)) == f
            maps += 1
        src, tgt = BooleanFaceLattice(A), BooleanFaceLattice(B)
        singletons = [0] + [1 << j for j in range(len(B))]
        for table in _union_tables(len(A), len(B), singletons):
            phi = BooleanHom(src, tgt, table)
            assert partial_to_hom(hom_to_partial(phi)) == phi
            homs += 1
        # a coatom sent to two faces raises coheight and is not in the image
        if len(A) <= 2 and len(B) >= 2:
            for table in _union_tables(len(A), len(B), range(1 << len(B))):
                if any(bin(table[1 << i]).count("1") > 1 for i in range(len(A))):
                    with pytest.raises(LatticeError):
                        hom_to_partial(BooleanHom(src, tgt, table))
    triples = 0
    small = ["abc"[:n] for n in range(4)]
    for A, B, C in itertools.product(small, repeat=3):
        assert partial_to_hom(PartialMap.identity(A)).table == tuple(range(1 << len(A)))
        gs = list(all_partial_maps(B, C))
        for f in all_partial_maps(A, B):
            hf = partial_to_hom(f)
            for g in gs:
                assert partial_to_hom(f.then(g)) == hf.then(partial_to_hom(g))
                triples += 1
    elapsed = time.perf_counter() - start
    verdict(1, elapsed < 10, f"{maps} partial maps, {homs} homomorphisms, {triples} compositions in {elapsed:.2f}s")


# --- 2: truncated composition ------------------------------------------------------


def _random_poly(rng, nvars, r, min_degree=0):
    idx = multi_indices(nvars, r, min_degree)
    coeffs = {}
    for _ in range(int(rng.integers(0, 5))):
        coeffs[idx[int(rng.integers(len(idx)))]] = Q(int(rng.integers(-9, 10)), int(rng.integers(1, 8)))
    return TruncatedPoly(nvars, r, coeffs)


def _sympy_compose_truncate(g, f, r):
    xs = sympy.symbols(f"x1:{f.nvars + 1}")
    ys = sympy.symbols(f"y1:{g.nvars + 1}")

    def expr(p, vs):
        return sum((sympy.Rational(c.numerator, c.denominator) * sympy.prod([v ** a for v, a in zip(vs, al)])
                    for al, c in p.coeffs.items()), sympy.Integer(0))

    subs = dict(zip(ys, [expr(c, xs) for c in f.components]))
    out = []
    for c in g.components:
        full = sympy.Poly(sympy.expand(expr(c, ys).subs(subs, simultaneous=True)), *xs)
        out.append(TruncatedPoly(f.nvars, r, {tuple(m): Q(int(v.p), int(v.q)) for m, v in full.terms()
                                              if sum(m) <= r}))
    return TruncatedPolyMap(out, f.nvars, r)


def test_criterion_2_truncated_composition():
    start = time.perf_counter()
    rng = make_rng(2026)
    for _ in range(500):
        m, n, p, r = (int(v) for v in rng.integers(1, 4, size=4))
        f = TruncatedPolyMap([_random_poly(rng, m, r, 1) for _ in range(n)], m, r)
        g = TruncatedPolyMap([_random_poly(rng, n, r) for _ in range(p)], n, r)
        assert truncate_compose(g, f) == _sympy_compose_truncate(g, f, r)
    elapsed = time.perf_counter() - start
    verdict(2, elapsed < 30, f"500 random triples agree with compose-then-truncate in {elapsed:.2f}s")


# --- 3: degree-one relative dimension ----------------------------------------------


def test_criterion_3_relative_dimension():
    rng = make_rng(3)
    shapes = [S for S in SHAPES if len(S) <= 5]
    checked = []
    for _ in range(50):
        S = shapes[int(rng.integers(len(shapes)))]
        m, n = int(rng.integers(0, 4)), int(rng.integers(1, 4))
        I = arrangement_from_minima(S, MarkedSet(m, int(rng.integers(0, m + 1))),
                                    [int(rng.integers(len(S))) for _ in range(m)])
        J = arrangement_from_minima(S, MarkedSet(n, int(rng.integers(0, n + 1))),
                                    [int(rng.integers(len(S))) for _ in range(n)])
        assert I.is_valid() and J.is_valid()
        checked.append(relative_basis(I, J, 1).degree_count(1) == rel1jet_formula(I, J))
    verdict(3, all(checked), f"{sum(checked)}/50 arrangement pairs match the closed formula")


# --- 4: the fold counterexample ------------------------------------------------------


def test_criterion_4_fold_counterexample():
    P = Polyhedron.box(["I", "I"])
    F = polyhedron_faces(P)
    beta = Edging.from_mapping(F, F, {"x1=0": "x1=0", "x1=1": "x1=1"})
    fold = TruncatedPolyMap([TruncatedPoly(2, 2, {(2, 0): 1}),
                             TruncatedPoly(2, 2, {(1, 0): Q(1, 2), (1, 1): Q(-1, 2), (0, 1): 1})])
    rep = admissibility_check(fold, beta, P, P)
    along = all(v.ok for v in rep.verdicts if v.condition == "along")
    edge = restricted_corank(fold, (0, 0), P, 1 << P.row("x1=0"))
    full = corank(jacobian(fold, (0, 0)))
    ok = along and edge == 0 and full == 1 and not rep.admissible and rep.witness == (0, 0)
    verdict(4, ok, f"along={along}, edge corank={edge}, full corank={full}, witness={tuple(map(str, rep.witness or ()))}")


# --- 5: perturbations stay in the model ---------------------------------------------


def _cone_cases():
    chain = FiniteLattice.chain(2)
    square = FiniteLattice.boolean(2)
    one = FiniteLattice.chain(1)
    x = lambda m, i, r=2: TruncatedPoly.var(m, i, r)  # noqa: E731
    return {
        "half-line identity": (SetArrangement.constant(one, MarkedSet(1, 0)),
                               SetArrangement.constant(one, MarkedSet(1, 0)),
                               TruncatedPolyMap([x(1, 1)])),
        "quadrant shear": (SetArrangement.constant(one, MarkedSet(2, 0)),
                           SetArrangement.constant(one, MarkedSet(2, 0)),
                           TruncatedPolyMap([x(2, 1) + x(2, 2), x(2, 2)])),
        "chain fold": (SetArrangement(chain, MarkedSet(1, 0), [set(), {1}]),
                       SetArrangement(chain, MarkedSet(2, 1), [{2}, {1, 2}]),
                       TruncatedPolyMap([x(1, 1), x(1, 1) * x(1, 1)])),
        "square shape, neat target": (SetArrangement(square, MarkedSet(2, 2), [set(), {1}, {2}, {1, 2}]),
                                      SetArrangement(square, MarkedSet(3, 2), [{3}, {1, 3}, {2, 3}, {1, 2, 3}]),
                                      TruncatedPolyMap([x(2, 1), x(2, 2), x(2, 1) * x(2, 1) + x(2, 2) * x(2, 2)])),
    }


def _model_points(rng, ambient: MarkedSet, count: int, reach: Q):
    pts = []
    for _ in range(count):
        p = []
        for i in ambient.coords:
            if i in ambient.unmarked:
                p.append(Q(0) if rng.integers(3) == 0 else Q(int(rng.integers(0, 257)), 128) * reach)
            else:
                p.append(Q(int(rng.integers(-256, 257)), 128) * reach)
        pts.append(p)
    return pts


@pytest.mark.parametrize("case", list(_cone_cases()))
def test_criterion_5_cone_safety(case):
    I, J, F = _cone_cases()[case]
    delta, eps = Q(1, 2), Q(1, 10)
    rho_U = BumpProfile([0.0] * I.ambient.m, float(delta) / 4, float(delta) / 2)
    rho_V = BumpProfile([0.0] * J.ambient.m, 1.0, 2.0)
    rng = make_rng(5)
    evaluations = escapes = 0
    for s in range(20):
        G = perturb_map(F, cone_sample(I, J, delta, eps, seed=s, r=2), rho_U, rho_V)
        for p in _model_points(rng, I.ambient, 500, delta):
            assert J.ambient.contains(F(p))
            try:
                value = G.exact(p)
                assert all(value[j - 1] >= 0 for j in J.ambient.unmarked)
            except ModelEscape:
                escapes += 1
            evaluations += 1
    verdict(5, escapes == 0 and evaluations == 10_000, f"{case}: {evaluations} exact evaluations, {escapes} escapes")


# --- 6: Monte-Carlo transversality against exact lattice-point counts ------------------

EPS = Q(0.02)
TOL = Q(1e-4)
N_TRIALS = 500
SEED = 0


def _strict_count(lo, hi) -> int:
    """Integers ``k`` in ``[-DENOM, DENOM]`` with ``lo < k < hi``."""
    top = min(DENOM, math.ceil(hi) - 1)
    bottom = max(-DENOM, math.floor(lo) + 1)
    return max(0, top - bottom + 1)


def _p_small() -> Q:
    # one coefficient eps*k/D within TOL of zero
    s = TOL * DENOM / EPS
    return Q(_strict_count(-s, s), 2 * DENOM + 1)


def _oracle_point_line():
    return _p_small()


def _oracle_point_plane():
    return _p_small() ** 2


def _oracle_translate(grid):
    s = DENOM / EPS
    count = sum(_strict_count((-TOL - x) * s, (TOL - x) * s) for x in grid)
    return Q(count, 2 * DENOM + 1) * _p_small()


def _oracle_fold(grid):
    s = DENOM / EPS
    hits = 0
    for x in grid:
        lo1 = math.floor((-TOL - 2 * x) * s) + 1
        hi1 = math.ceil((TOL - 2 * x) * s) - 1
        for k1 in range(max(lo1, -DENOM), min(hi1, DENOM) + 1):
            a1 = EPS * k1 / DENOM
            c = x * x + a1 * x
            hits += _strict_count((-TOL - c) * s, (TOL - c) * s)
    return Q(hits, (2 * DENOM + 1) ** 2)


def _oracle_chain(grid):
    eps, tol = float(EPS), float(TOL)
    k12 = np.arange(-DENOM, DENOM + 1, dtype=np.float64)
    c = 1.0 + eps * k12 / DENOM
    hits = 0
    for x in grid:
        lo = np.maximum(-tol / x - c * x, -tol - 2 * c * x) * DENOM / eps
        hi = np.minimum(tol / x - c * x, tol - 2 * c * x) * DENOM / eps
        top = np.minimum(np.ceil(hi) - 1, DENOM)
        bottom = np.maximum(np.floor(lo) + 1, -DENOM)
        hits += int(np.maximum(top - bottom + 1, 0).sum())
    return hits / (2 * DENOM + 1) ** 2


def _scenarios():
    one = FiniteLattice.chain(1)
    pt = SetArrangement.constant(one, MarkedSet(0, 0))
    line = SetArrangement.constant(one, MarkedSet(1, 1))
    plane = SetArrangement.constant(one, MarkedSet(2, 2))
    chain = FiniteLattice.chain(2)
    ray = SetArrangement(chain, MarkedSet(1, 0), [set(), {1}])
    neat = SetArrangement(chain, MarkedSet(2, 1), [{2}, {1, 2}])
    zero0 = lambda k: TruncatedPolyMap([TruncatedPoly(0, 0)] * k, 0, 0)  # noqa: E731
    g3 = [Q(i, 50) for i in range(-5, 6)]
    g4 = [Q(i, 200) for i in range(-20, 21)]
    g5 = [Q(i, 200) for i in range(1, 21)]
    return {
        "point to line": (zero0(1), pt, line, [JetCondition(1, ())], [[]], 0, _oracle_point_line),
        "point to plane": (zero0(2), pt, plane, [JetCondition(1, ()), JetCondition(2, ())], [[]], 0,
                           _oracle_point_plane),
        "line translate": (TruncatedPolyMap([TruncatedPoly.var(1, 1, 1), TruncatedPoly(1, 1)]), line, plane,
                           [JetCondition(1, (0,)), JetCondition(2, (0,))], [[float(x)] for x in g3], 0,
                           lambda: _oracle_translate(g3)),
        "line fold": (TruncatedPolyMap([TruncatedPoly(1, 2, {(2,): 1})]), line, line,
                      [JetCondition(1, (0,)), JetCondition(1, (1,))], [[float(x)] for x in g4], 1,
                      lambda: _oracle_fold(g4)),
        "ray into neat chain": (TruncatedPolyMap([TruncatedPoly(1, 2, {(2,): 1}), TruncatedPoly(1, 2, {(0,): 1})]),
                                ray, neat, [JetCondition(1, (0,)), JetCondition(1, (1,))],
                                [[float(x)] for x in g5], 2, lambda: _oracle_chain([float(x) for x in g5])),
    }


@pytest.mark.parametrize("name", list(_scenarios()))
def test_criterion_6_monte_carlo(name):
    F, I, J, W, grid, r, oracle = _scenarios()[name]
    assert len(W) > I.ambient.m  # codim W exceeds the source dimension
    start = time.perf_counter()
    rep = mc_transversality(F, I, J, W, grid, epsilons=(float(EPS),), trials=N_TRIALS, seed=SEED, r=r,
                            tol=float(TOL))
    elapsed = time.perf_counter() - start
    res = rep["results"][0]
    p_hit = float(oracle())
    p = 1.0 - p_hit
    sigma = math.sqrt(N_TRIALS * p * (1 - p))
    within = abs(res["successes"] - N_TRIALS * p) <= 4 * sigma + 1
    ok = res["rate"] >= 0.95 and within and elapsed < 120
    verdict(6, ok, f"{name}: rate {res['rate']:.3f} (expected {p:.4f}, {res['successes']}/{N_TRIALS}) "
                   f"in {elapsed:.2f}s")


# --- 7: flow laws --------------------------------------------------------------------


def test_criterion_7_flow_laws():
    model = Polyhedron.box(["I", "I"])
    xi = build_collaring_field(model, "x1=0")
    rng = make_rng(7)
    semigroup = 0.0
    for p in random_box_points(model, 100, rng):
        t1, t2 = rng.uniform(0, 0.5, size=2)
        semigroup = max(semigroup, semigroup_defect(xi, p, t1, t2, 1e-3, model))
    drift = 0.0
    for label, p in boundary_samples(model, 100, rng):
        if label == "x1=0":
            continue
        k, _ = box_facet(model, label)
        res = flow(xi, p, float(rng.uniform(0, 0.5)), 1e-3, model)
        drift = max(drift, abs(res.point[k] - p[k]), res.clamped)
    ratios = [convergence_ratio(xi, p, model=model) for p in ([0.0, 0.5], [0.1, 0.2], [0.25, 0.8])]
    ok = semigroup < 1e-6 and drift < 1e-9 and all(12 <= q <= 20 for q in ratios)
    verdict(7, ok, f"semigroup {semigroup:.2e}, stratum drift {drift:.2e}, "
                   f"ratios {', '.join(f'{q:.2f}' for q in ratios)}")


# --- 8: commuting collars --------------------------------------------------------------


def _edging(X, Y, mapping):
    return Edging.from_mapping(polyhedron_faces(X), polyhedron_faces(Y), mapping)


def test_criterion_8_collaring():
    square, cube = Polyhedron.box(["I", "I"]), Polyhedron.box(["I", "I", "I"])
    strip, interval = Polyhedron.box(["I", "R+"]), Polyhedron.box(["I"])
    suite = {
        "square": (square, Edging.identity(polyhedron_faces(square)), 30),
        "cube": (cube, Edging.identity(polyhedron_faces(cube)), 10),
        "strip": (strip, Edging.identity(polyhedron_faces(strip)), 30),
        "square to interval": (square, _edging(square, interval, {"x1=0": "x1=0", "x1=1": "x1=1"}), 30),
        "square fold": (square, _edging(square, interval, {"x1=0": "x1=0", "x1=1": "x1=0",
                                                          "x2=0": "x1=1"}), 30),
    }
    worst = 0.0
    for name, (model, beta, count) in suite.items():
        rep = beta_collaring_check(model, beta, count=count)
        assert rep["ok"], (name, rep)
        worst = max(worst, rep["max_square_defect"])
    baseline = 0.0
    for kinds in (["R+", "R+"], ["R+", "R+", "R+"]):
        corner = Polyhedron.box(kinds)
        rep = beta_collaring_check(corner, Edging.identity(polyhedron_faces(corner)), count=20, baseline=True)
        baseline = max(baseline, rep["max_square_defect"])
    verdict(8, worst < 1e-5 and baseline < 1e-10,
            f"box suite square defect {worst:.2e}, coordinate baseline {baseline:.2e}")


# --- 9: polyhedron maps -------------------------------------------------------------------


def test_criterion_9_polyhedron_maps():
    interval, ray = Polyhedron.box(["I"]), Polyhedron.box(["R+"])
    square = Polyhedron.box(["I", "I"])
    triangle = Polyhedron([[1, 0], [0, 1], [-1, -1]], [0, 0, -1], ["a", "b", "c"])
    fixtures = {
        "interval to interval": (interval, _edging(interval, interval, {"x1=0": "x1=0", "x1=1": "x1=1"}), interval),
        "interval to ray": (interval, _edging(interval, ray, {"x1=0": "x1=0"}), ray),
        "square to square": (square, Edging.identity(polyhedron_faces(square)), square),
        "square to interval": (square, _edging(square, interval, {"x1=0": "x1=0", "x1=1": "x1=1"}), interval),
        "triangle to square": (triangle, _edging(triangle, square, {}), square),
    }
    lines = []
    for name, (X, beta, K) in fixtures.items():
        _, rep = polyhedron_map(X, beta, K, per_stratum=20, seed=9)
        assert rep["ok"], (name, rep["failures"][:3])
        lines.append(f"{name} ({rep['samples']})")
    verdict(9, True, "exact containment on " + ", ".join(lines))


# --- 10: embedding ---------------------------------------------------------------------------

REGRESSION_ROUNDS = 1


def test_criterion_10_embedding():
    X = Polyhedron.box(["I"])
    beta = Edging.identity(polyhedron_faces(X))
    rep = embedding_demo(X, beta, X, 2, seed=0, epsilon=0.05, max_rounds=50)
    ok = rep.ok and rep.rounds == REGRESSION_ROUNDS and rep.rounds <= 50
    verdict(10, ok, f"seed 0 embeds I into I x R^2 in {rep.rounds} round(s), "
                    f"Whitney distance {rep.whitney_distance:.4f}")
