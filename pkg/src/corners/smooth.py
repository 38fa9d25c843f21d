"""Smooth step functions and bump profiles with closed-form derivatives."""

from __future__ import annotations

import math
from typing import Sequence


def _flat(t: float) -> float:
    return math.exp(-1.0 / t) if t > 0 else 0.0


def _flat_d(t: float) -> float:
    return math.exp(-1.0 / t) / (t * t) if t > 0 else 0.0


def smoothstep(t: float) -> float:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    if t <= 0:
        return 0.0
    if t >= 1:
        return 1.0
    a, b = _flat(t), _flat(1 - t)
    return a / (a + b)


def smoothstep_d(t: float) -> float:
    if t <= 0 or t >= 1:
        return 0.0
    a, b = _flat(t), _flat(1 - t)
    da, db = _flat_d(t), -_flat_d(1 - t)
    return (da * (a + b) - a * (da + db)) / (a + b) ** 2


def ramp(u: float) -> float:
    """Smooth ramp equal to ``u`` on ``[0, 1/3]`` and to 1 from ``2/3`` on.

    Unlike :func:`smoothstep` it leaves zero with slope one, so weights built
    from it vanish on a face to first order only.
    """
    lam = 1.0 - smoothstep(3 * u - 1)
    return lam * u + (1.0 - lam)


def ramp_d(u: float) -> float:
    lam = 1.0 - smoothstep(3 * u - 1)
    dlam = -3.0 * smoothstep_d(3 * u - 1)
    return lam + dlam * (u - 1.0)


class BumpProfile:
    """Radial bump: 1 within ``inner`` of ``center``, 0 beyond ``outer``."""

    def __init__(self, center: Sequence[float], inner: float, outer: float):
        if not 0 <= inner < outer:
            raise ValueError("need 0 <= inner < outer")
        self.center = tuple(float(c) for c in center)
        self.inner = float(inner)
        self.outer = float(outer)

    def __repr__(self) -> str:
        return f"BumpProfile(center={self.center}, inner={self.inner}, outer={self.outer})"

    def _radius(self, p: Sequence[float]) -> float:
        return math.sqrt(sum((float(x) - c) ** 2 for x, c in zip(p, self.center)))

    def __call__(self, p: Sequence[float]) -> float:
        d = self._radius(p)
        return 1.0 - smoothstep((d - self.inner) / (self.outer - self.inner))

    def gradient(self, p: Sequence[float]) -> list[float]:
        d = self._radius(p)
        w = self.outer - self.inner
        t = (d - self.inner) / w
        if d == 0 or t <= 0 or t >= 1:
            return [0.0] * len(self.center)
        s = -smoothstep_d(t) / w
        return [s * (float(x) - c) / d for x, c in zip(p, self.center)]

    def support_radius(self) -> float:
        return self.outer


class StepDown:
    """One-variable profile: 1 for ``x <= a``, 0 for ``x >= b`` (or mirrored)."""

    def __init__(self, a: float, b: float):
        if a == b:
            raise ValueError("degenerate profile")
        self.a, self.b = float(a), float(b)

    def __repr__(self) -> str:
        return f"StepDown({self.a}, {self.b})"

    def __call__(self, x: float) -> float:
        return 1.0 - smoothstep((x - self.a) / (self.b - self.a))

    def derivative(self, x: float) -> float:
        w = self.b - self.a
        return -smoothstep_d((x - self.a) / w) / w
