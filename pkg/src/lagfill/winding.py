"""Continuous argument of nonvanishing complex paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnwrapError

TWO_PI = 2.0 * math.pi

# Increments must stay well inside (-pi, pi) for the unwrapping to be unambiguous.
MAX_INCREMENT = math.pi / 2
VANISHING_FLOOR = 1e-10


@dataclass(frozen=True)
class ArgumentTrace:
    s: np.ndarray
    values: np.ndarray
    unwrapped: np.ndarray

    @property
    def total_rotation(self) -> float:
        return float(self.unwrapped[-1] - self.unwrapped[0])

    @property
    def max_increment(self) -> float:
        if len(self.unwrapped) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.unwrapped))))

    @property
    def winding(self) -> float:
        return self.total_rotation / TWO_PI

    def returns_to_initial_angle(self) -> int:
        """Number of full turns k != 0 for which the path passes arg0 + 2 pi k."""
        rel = (self.unwrapped[1:] - self.unwrapped[0]) / TWO_PI
        lo, hi = float(np.min(rel)), float(np.max(rel))
        ks = range(math.ceil(lo), math.floor(hi) + 1)
        return sum(1 for k in ks if k != 0)


def unwrap_samples(s, values, max_increment: float = MAX_INCREMENT,
                   floor: float = VANISHING_FLOOR) -> ArgumentTrace:
    """Unwrap the argument of already-sampled complex values.

    Increments are taken as principal arguments of consecutive ratios, which
    is exact regardless of where the branch cut of ``angle`` falls.
    """
    values = np.asarray(values, dtype=complex)
    s = np.asarray(s, dtype=float)
    mags = np.abs(values)
    if np.min(mags) <= floor:
        i = int(np.argmin(mags))
        raise UnwrapError(f"path comes within {mags[i]:.3g} of the origin at s={s[i]:.6g}")
    steps = np.angle(values[1:] / values[:-1])
    if steps.size and np.max(np.abs(steps)) >= max_increment:
        i = int(np.argmax(np.abs(steps)))
        raise UnwrapError(f"argument jumps by {steps[i]:.3g} between s={s[i]:.6g} and s={s[i + 1]:.6g}")
    unwrapped = np.empty(len(values))
    unwrapped[0] = np.angle(values[0])
    np.cumsum(steps, out=unwrapped[1:])
    unwrapped[1:] += unwrapped[0]
    return ArgumentTrace(s=s, values=values, unwrapped=unwrapped)


def trace_argument(path: Callable[[np.ndarray], np.ndarray], a: float = 0.0, b: float = 1.0,
                   n: int = 1001, max_increment: float = MAX_INCREMENT,
                   floor: float = VANISHING_FLOOR, max_refinements: int = 12) -> ArgumentTrace:
    """Sample ``path`` on [a, b] and unwrap its argument, refining until increments are small.

    An accepted trace is confirmed on a second grid whose spacing is not a
    multiple of the first, so that a path turning by whole multiples of
    2 pi between samples cannot pass unnoticed.
    """

    def sample(m):
        s = np.linspace(a, b, m)
        values = np.asarray(path(s), dtype=complex)
        mags = np.abs(values)
        if np.min(mags) <= floor:
            i = int(np.argmin(mags))
            raise UnwrapError(f"path comes within {mags[i]:.3g} of the origin at s={s[i]:.6g}")
        steps = np.angle(values[1:] / values[:-1])
        return s, values, float(np.max(np.abs(steps))), float(np.sum(steps))

    for _ in range(max_refinements + 1):
        s, values, worst, total = sample(n)
        if worst < max_increment:
            _, _, worst2, total2 = sample(3 * n // 2 + 1)
            if worst2 < max_increment and abs(total2 - total) < 1e-6:
                return unwrap_samples(s, values, max_increment, floor)
        n = 2 * n - 1
    raise UnwrapError(f"argument increments still >= {max_increment:.3g} after {max_refinements} refinements")


def winding_number(x, y) -> float:
    """Turns made by the planar vector field (x, y) sampled along a closed loop.

    The first sample is not repeated at the end; the closing increment is included.
    """
    z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    z = np.append(z, z[0])
    trace = unwrap_samples(np.arange(len(z)), z)
    return trace.winding
