"""Collaring vector fields on box models and their flows."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .edging import Edging, Polyhedron
from .smooth import StepDown

log = logging.getLogger(__name__)

FD_STEP = 1e-5
CLAMP_LIMIT = 1e-9


class CollarError(ValueError):
    pass


class FlowError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FieldTerm:
    """``prod_k profile_k(x_k)`` times a constant vector."""

    profiles: tuple[tuple[int, StepDown], ...]
    vector: tuple[float, ...]

    def weight(self, p: Sequence[float]) -> float:
        w = 1.0
        for k, prof in self.profiles:
            w *= prof(p[k])
            if w == 0.0:
                break
        return w

    def weight_gradient(self, p: Sequence[float]) -> list[float]:
        g = [0.0] * len(p)
        vals = [prof(p[k]) for k, prof in self.profiles]
        for idx, (k, prof) in enumerate(self.profiles):
            rest = math.prod(v for j, v in enumerate(vals) if j != idx)
            g[k] += prof.derivative(p[k]) * rest
        return g


@dataclass(frozen=True)
class FlowField:
    dim: int
    terms: tuple[FieldTerm, ...] = ()

    def __call__(self, p: Sequence[float]) -> np.ndarray:
        out = np.zeros(self.dim)
        for t in self.terms:
            w = t.weight(p)
            if w:
                out += w * np.asarray(t.vector)
        return out

    def jacobian(self, p: Sequence[float]) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for t in self.terms:
            out += np.outer(t.vector, t.weight_gradient(p))
        return out

    def __add__(self, other: "FlowField") -> "FlowField":
        if other.dim != self.dim:
            raise CollarError("fields live in different dimensions")
        return FlowField(self.dim, self.terms + other.terms)

    def scale(self, c: float) -> "FlowField":
        return FlowField(self.dim, tuple(FieldTerm(t.profiles, tuple(c * v for v in t.vector)) for t in self.terms))

    def zero_components(self) -> frozenset[int]:
        """Coordinates (from 0) whose component vanishes identically."""
        return frozenset(k for k in range(self.dim) if all(t.vector[k] == 0 for t in self.terms))

    def support_slabs(self) -> list[dict[int, tuple[float, float]]]:
        """Per term, the coordinate intervals outside of which the weight is zero."""
        out = []
        for t in self.terms:
            box = {}
            for k, prof in t.profiles:
                lo, hi = sorted((prof.a, prof.b))
                box[k] = (-math.inf, hi) if prof.a < prof.b else (lo, math.inf)
            out.append(box)
        return out


def constant_field(dim: int, vector: Sequence[float]) -> FlowField:
    return FlowField(dim, (FieldTerm((), tuple(float(v) for v in vector)),))


# --- box models -----------------------------------------------------------


def box_facet(model: Polyhedron, label) -> tuple[int, int]:
    """``(k, side)`` for an axis-aligned facet: ``x_k >= c`` gives side +1, ``x_k <= c`` gives -1."""
    row = model.A[model.row(label)]
    nz = [k for k, v in enumerate(row) if v]
    if len(nz) != 1:
        raise CollarError(f"facet {label!r} is not axis-aligned; only box models are supported")
    return nz[0], 1 if row[nz[0]] > 0 else -1


def _facet_level(model: Polyhedron, label) -> float:
    k, side = box_facet(model, label)
    return float(model.b[model.row(label)] / model.A[model.row(label)][k])


def build_collaring_field(model: Polyhedron, face, width: float = 0.2) -> FlowField:
    """Field pointing into the model along the normal of ``face``.

    It equals the unit inward normal within ``width`` of the face and is zero
    beyond ``2 * width``, so it is tangent to every other facet as long as
    parallel facets are more than ``2 * width`` away.
    """
    if face not in model.labels:
        raise CollarError(f"{face!r} is not a facet of the model")
    k, side = box_facet(model, face)
    level = _facet_level(model, face)
    for other in model.labels:
        if other == face:
            continue
        k2, _ = box_facet(model, other)
        if k2 == k and abs(_facet_level(model, other) - level) <= 2 * width:
            raise CollarError(f"collar width {width} is too wide: {face!r} and {other!r} are too close")
    prof = StepDown(level + side * width, level + side * 2 * width) if side > 0 else \
        StepDown(level - width, level - 2 * width)
    vec = [0.0] * model.n
    vec[k] = float(side)
    return FlowField(model.n, (FieldTerm(((k, prof),), tuple(vec)),))


def boundary_samples(model: Polyhedron, count: int, rng: np.random.Generator, spread: float = 1.5) -> list:
    """Random points on the facets of a box (unbounded directions cut at ``spread``)."""
    lower, upper = _bounds(model)
    lo = np.where(np.isfinite(lower), lower, -spread)
    hi = np.where(np.isfinite(upper), upper, lo + 2 * spread)
    out = []
    if not model.labels:
        return out
    for _ in range(count):
        label = model.labels[int(rng.integers(len(model.labels)))]
        k, _ = box_facet(model, label)
        p = rng.uniform(lo, hi)
        p[k] = _facet_level(model, label)
        out.append((label, p))
    return out


def field_invariants(xi: FlowField, model: Polyhedron, face, count: int = 1000, seed: int = 0) -> dict:
    """Inward at every facet, transversal to ``face``, tangent to the other facets."""
    rng = np.random.Generator(np.random.PCG64(seed))
    inward = transversal = tangent = True
    worst_tangent = 0.0
    for label, p in boundary_samples(model, count, rng):
        k, side = box_facet(model, label)
        normal = side * xi(p)[k]
        if normal < 0:
            inward = False
        if label == face:
            transversal = transversal and bool(normal > 0)
        else:
            worst_tangent = max(worst_tangent, abs(normal))
    tangent = worst_tangent < 1e-12
    return {"ok": inward and transversal and tangent, "inward": inward, "transversal": transversal,
            "tangent": tangent, "max_tangent_defect": worst_tangent, "samples": count}


# --- integration ------------------------------------------------------------


@dataclass
class FlowResult:
    point: np.ndarray
    h: float
    steps: int
    clamped: float = 0.0
    trajectory: list = field(default_factory=list)
    error_estimate: float | None = None


def _rk4(xi: FlowField, p: np.ndarray, t: float, n: int, lower, upper, record: bool):
    x = np.array(p, dtype=float)
    dt = t / n
    clamped = 0.0
    traj = [x.copy()] if record else []
    for _ in range(n):
        k1 = xi(x)
        k2 = xi(x + dt / 2 * k1)
        k3 = xi(x + dt / 2 * k2)
        k4 = xi(x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise FlowError("integration blew up")
        if lower is not None:
            below = np.maximum(lower - x, 0.0)
            above = np.maximum(x - upper, 0.0)
            m = float(max(below.max(initial=0.0), above.max(initial=0.0)))
            if m > CLAMP_LIMIT:
                raise FlowError(f"trajectory left the model by {m}")
            if m > 0:
                clamped = max(clamped, m)
                log.debug("clamped a coordinate by %.3g", m)
                x = np.clip(x, lower, upper)
        if record:
            traj.append(x.copy())
    return x, clamped, traj


def _bounds(model: Polyhedron | None):
    if model is None:
        return None, None
    lower = np.full(model.n, -np.inf)
    upper = np.full(model.n, np.inf)
    for label in model.labels:
        k, side = box_facet(model, label)
        if side > 0:
            lower[k] = _facet_level(model, label)
        else:
            upper[k] = _facet_level(model, label)
    return lower, upper


def flow(xi: FlowField, p: Sequence[float], t: float, h: float = 1e-3, model: Polyhedron | None = None,
         record: bool = False, estimate: bool = False) -> FlowResult:
    """Classical fourth-order Runge-Kutta with ``ceil(t/h)`` equal steps."""
    if t < 0:
        raise FlowError("flow time must be non-negative")
    if h <= 0:
        raise FlowError("step must be positive")
    p = np.array(p, dtype=float)
    if t == 0:
        return FlowResult(p.copy(), h, 0, trajectory=[p.copy()] if record else [])
    n = max(1, math.ceil(t / h - 1e-12))
    if n > 10 ** 7:
        raise FlowError("step underflow: too many steps")
    lower, upper = _bounds(model)
    x, clamped, traj = _rk4(xi, p, t, n, lower, upper, record)
    est = None
    if estimate:
        coarse, _, _ = _rk4(xi, p, t, max(1, n // 2), lower, upper, False)
        est = float(np.linalg.norm(x - coarse)) / 15
    return FlowResult(x, h, n, clamped, traj, est)


def flow_point(xi: FlowField, p, t: float, h: float = 1e-3, model: Polyhedron | None = None) -> np.ndarray:
    return flow(xi, p, t, h, model).point


def lie_bracket(X: FlowField, Y: FlowField, p: Sequence[float], step: float = FD_STEP) -> np.ndarray:
    """``[X, Y](p) = DY(p) X(p) - DX(p) Y(p)`` with central differences along the fields."""
    p = np.asarray(p, dtype=float)
    xp, yp = X(p), Y(p)
    dy = (Y(p + step * xp) - Y(p - step * xp)) / (2 * step)
    dx = (X(p + step * yp) - X(p - step * yp)) / (2 * step)
    return dy - dx


def semigroup_defect(xi: FlowField, p, t: float, t2: float, h: float, model: Polyhedron | None = None) -> float:
    a = flow_point(xi, flow_point(xi, p, t, h, model), t2, h, model)
    b = flow_point(xi, p, t + t2, h, model)
    return float(np.max(np.abs(a - b)))


def convergence_ratio(xi: FlowField, p, t: float = 1.0, steps: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                      model: Polyhedron | None = None) -> float:
    """``|phi_h1 - phi_h2| / |phi_h2 - phi_h3|``; close to 16 for a fourth-order method."""
    a, b, c = (flow_point(xi, p, t, h, model) for h in steps)
    den = float(np.linalg.norm(b - c))
    if den == 0:
        return math.inf
    return float(np.linalg.norm(a - b)) / den


def random_box_points(model: Polyhedron, count: int, rng: np.random.Generator, spread: float = 1.5) -> list:
    lower, upper = _bounds(model)
    lo = np.where(np.isfinite(lower), lower, -spread)
    hi = np.where(np.isfinite(upper), upper, lo + 2 * spread)
    return [rng.uniform(lo, hi) for _ in range(count)]


# --- collaring along an edging -----------------------------------------------


def beta_fields(model: Polyhedron, beta: Edging, width: float = 0.2, baseline: bool = False) -> dict:
    """``xi_D = sum of xi_C over the facets C sent to D``.

    With ``baseline`` each ``xi_C`` is the constant inward normal instead of
    the cut-off field.
    """
    if beta.source.faces != model.labels:
        raise CollarError("edging source must be the facets of the model")
    out: dict = {}
    for C, D in sorted(beta.partial.mapping.items(), key=lambda cd: model.row(cd[0])):
        if baseline:
            k, side = box_facet(model, C)
            vec = [0.0] * model.n
            vec[k] = float(side)
            xi = constant_field(model.n, vec)
        else:
            xi = build_collaring_field(model, C, width)
        out[D] = out[D] + xi if D in out else xi
    return out


def _supports_disjoint(model: Polyhedron, beta: Edging, width: float) -> bool:
    groups: dict = {}
    for C, D in beta.partial.mapping.items():
        groups.setdefault(D, []).append(C)
    for faces in groups.values():
        for C1, C2 in itertools.combinations(faces, 2):
            k1, _ = box_facet(model, C1)
            k2, _ = box_facet(model, C2)
            if k1 != k2 or abs(_facet_level(model, C1) - _facet_level(model, C2)) <= 4 * width:
                return False
    return True


def beta_collaring_check(model: Polyhedron, beta: Edging, samples: Sequence | None = None, h: float = 1e-3,
                         width: float = 0.2, t_max: float = 0.3, seed: int = 0, count: int = 30,
                         baseline: bool = False) -> dict:
    """Brackets, commuting squares and the identity at time zero for the fields ``xi_D``.

    The square compares flowing along ``xi_D`` for ``t1`` then ``xi_E`` for
    ``t2`` (both orders) with the flow of ``t1 xi_D + t2 xi_E`` for unit time.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    fields = beta_fields(model, beta, width, baseline)
    pts = [np.asarray(p, dtype=float) for p in samples] if samples is not None else \
        random_box_points(model, count, rng)
    names = list(fields)
    bracket = square = 0.0
    identity = 0.0
    for p in pts:
        for D in names:
            identity = max(identity, float(np.max(np.abs(flow_point(fields[D], p, 0.0, h, model) - p))))
        for D, E in itertools.combinations(names, 2):
            X, Y = fields[D], fields[E]
            bracket = max(bracket, float(np.max(np.abs(lie_bracket(X, Y, p)))))
            t1, t2 = rng.uniform(0, t_max, size=2)
            de = flow_point(Y, flow_point(X, p, t1, h, model), t2, h, model)
            ed = flow_point(X, flow_point(Y, p, t2, h, model), t1, h, model)
            joint = flow_point(X.scale(t1) + Y.scale(t2), p, 1.0, h, model)
            square = max(square, float(np.max(np.abs(de - joint))), float(np.max(np.abs(ed - joint))))
    disjoint = _supports_disjoint(model, beta, width) if not baseline else True
    ok = bracket < 1e-6 and square < 1e-5 and identity == 0.0 and disjoint
    return {"ok": ok, "max_bracket": bracket, "max_square_defect": square, "max_identity_defect": identity,
            "supports_disjoint": disjoint, "h": h, "samples": len(pts), "pairs": len(names) * (len(names) - 1) // 2,
            "seed": seed, "baseline": baseline, "provenance": f"sampled({len(pts)})"}


def collar_embedding_check(xi: FlowField, model: Polyhedron, face, delta: float = 0.1, count: int = 40,
                           h: float = 1e-3, seed: int = 0) -> dict:
    """``(q, t) -> phi(q, t)`` on ``face x [0, delta]``: injectivity on samples and Jacobian conditioning."""
    rng = np.random.Generator(np.random.PCG64(seed))
    k, _ = box_facet(model, face)
    base = [p for _, p in boundary_samples(model, count * len(model.labels), rng) if _ == face][:count]
    pairs = [(q, float(t)) for q, t in zip(base, rng.uniform(0, delta, size=len(base)))]
    images = [flow_point(xi, q, t, h, model) for q, t in pairs]
    closest = math.inf
    for a, b in itertools.combinations(range(len(images)), 2):
        closest = min(closest, float(np.linalg.norm(images[a] - images[b])))
    free = [c for c in range(model.n) if c != k]
    worst = 1.0
    s = 1e-6
    for q, t in pairs:
        cols = []
        for c in free:
            e = np.zeros(model.n)
            e[c] = s
            cols.append((flow_point(xi, q + e, t, h, model) - flow_point(xi, q - e, t, h, model)) / (2 * s))
        cols.append((flow_point(xi, q, t + s, h, model) - flow_point(xi, q, max(t - s, 0.0), h, model))
                    / (t + s - max(t - s, 0.0)))
        worst = max(worst, float(np.linalg.cond(np.column_stack(cols))))
    return {"ok": closest > 0 and math.isfinite(worst), "closest_pair": closest, "max_condition": worst,
            "samples": len(pairs)}
