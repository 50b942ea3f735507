"""Parametric maps with closed-form derivatives, and the contact and
symplectization forms they are tested against.

Coordinate conventions used throughout the package:

* contact space R^{2m+1}: ``(x1, y1, ..., xm, ym, z)``
* symplectization R x R^{2m+1}: ``(t, x1, y1, ..., xm, ym, z)``

so for ``m = 1`` a point of the symplectization is ``(t, x, y, z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch

TWO_PI = 2.0 * math.pi

GridSpec = Union[int, Sequence[int]]


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    periodic = False

    def sample(self, n: int) -> np.ndarray:
        # closed interval, both endpoints included
        return np.linspace(self.a, self.b, n)

    def random(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.uniform(self.a, self.b, size)


@dataclass(frozen=True)
class Circle:
    period: float = TWO_PI

    periodic = True

    def sample(self, n: int) -> np.ndarray:
        return np.linspace(0.0, self.period, n, endpoint=False)

    def random(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.uniform(0.0, self.period, size)


Factor = Union[Interval, Circle]


def stack(*components) -> np.ndarray:
    """Stack scalar-or-array components into points along a trailing axis."""
    arrays = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in components))
    return np.stack(arrays, axis=-1)


@dataclass(frozen=True)
class ParametricMap:
    """A smooth map from a product of intervals and circles into R^d.

    ``fn(*params)`` returns points with shape ``(..., d)``; ``partials[k]``
    has the same signature and returns the exact derivative along factor k.
    """

    domain: tuple
    codomain_dim: int
    fn: Callable[..., np.ndarray]
    partials: tuple
    name: str = "map"

    def __post_init__(self):
        if len(self.partials) != len(self.domain):
            raise ValueError(f"{self.name}: need one partial per domain factor")

    @property
    def ndim(self) -> int:
        return len(self.domain)

    def _args(self, params):
        if len(params) != self.ndim:
            raise ValueError(f"{self.name} takes {self.ndim} parameters, got {len(params)}")
        return np.broadcast_arrays(*(np.asarray(p, dtype=float) for p in params))

    def __call__(self, *params) -> np.ndarray:
        return self.fn(*self._args(params))

    def deriv(self, k: int, *params) -> np.ndarray:
        return self.partials[k](*self._args(params))

    def jacobian(self, *params) -> np.ndarray:
        """Tangent vectors as columns: shape ``(..., d, ndim)``."""
        args = self._args(params)
        return np.stack([d(*args) for d in self.partials], axis=-1)

    def grid_axes(self, grid: GridSpec) -> list:
        sizes = [grid] * self.ndim if np.isscalar(grid) else list(grid)
        if len(sizes) != self.ndim:
            raise ValueError(f"grid must give one size per factor ({self.ndim})")
        if min(sizes) < 2:
            raise ValueError("grid needs at least 2 samples per factor")
        return [f.sample(int(n)) for f, n in zip(self.domain, sizes)]

    def grid(self, grid: GridSpec) -> list:
        return np.meshgrid(*self.grid_axes(grid), indexing="ij")

    def restrict(self, k: int, value: float, name: str | None = None) -> "ParametricMap":
        """Freeze factor ``k`` at ``value``; the result has one factor fewer."""

        def insert(params):
            params = list(params)
            params.insert(k, np.full(np.shape(params[0]) if params else (), value))
            return params

        keep = [i for i in range(self.ndim) if i != k]
        return ParametricMap(
            domain=tuple(self.domain[i] for i in keep),
            codomain_dim=self.codomain_dim,
            fn=lambda *p: self.fn(*insert(p)),
            partials=tuple((lambda i: lambda *p: self.partials[i](*insert(p)))(i) for i in keep),
            name=name or f"{self.name}|{k}={value:g}",
        )


def finite_difference_error(fmap: ParametricMap, params, step: float = 1e-5) -> float:
    """Largest relative gap between the closed-form partials and central differences.

    The gap is measured as ``|fd - exact| / max(1, |exact|)`` per component.
    """
    args = fmap._args(params)
    worst = 0.0
    for k in range(fmap.ndim):
        plus = list(args)
        minus = list(args)
        plus[k] = args[k] + step
        minus[k] = args[k] - step
        fd = (fmap.fn(*plus) - fmap.fn(*minus)) / (2.0 * step)
        exact = fmap.partials[k](*args)
        rel = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
        worst = max(worst, float(np.max(rel)))
    return worst


def periodicity_error(fmap: ParametricMap, params) -> float:
    """Largest displacement ``|f(..., s + period, ...) - f(...)|`` over circle factors."""
    args = fmap._args(params)
    base = fmap.fn(*args)
    worst = 0.0
    for k, factor in enumerate(fmap.domain):
        if not factor.periodic:
            continue
        shifted = list(args)
        shifted[k] = args[k] + factor.period
        worst = max(worst, float(np.max(np.abs(fmap.fn(*shifted) - base))))
    return worst


class ContactForm:
    """The standard contact form dz - sum_j y_j dx_j on R^{2m+1}."""

    def __init__(self, m: int):
        if m not in (1, 2):
            raise ValueError("m must be 1 or 2")
        self.m = m
        self.dim = 2 * m + 1

    def __call__(self, point, v) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        v = np.asarray(v, dtype=float)
        out = v[..., 2 * self.m].copy()
        for j in range(self.m):
            out -= point[..., 2 * j + 1] * v[..., 2 * j]
        return out

    def __repr__(self):
        return f"ContactForm(m={self.m})"


class SymplectizationForm:
    """d(e^t alpha) = e^t (dt ^ alpha + sum_j dx_j ^ dy_j) on R x R^{2m+1}."""

    def __init__(self, m: int):
        if m not in (1, 2):
            raise ValueError("m must be 1 or 2")
        self.m = m
        self.dim = 2 * m + 2
        self.contact = ContactForm(m)

    def __call__(self, point, u, v) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        space = point[..., 1:]
        au = self.contact(space, u[..., 1:])
        av = self.contact(space, v[..., 1:])
        out = u[..., 0] * av - v[..., 0] * au
        for j in range(self.m):
            x, y = 1 + 2 * j, 2 + 2 * j
            out += u[..., x] * v[..., y] - u[..., y] * v[..., x]
        return np.exp(point[..., 0]) * out

    def gram(self, point) -> np.ndarray:
        """Matrix of omega on the coordinate basis at ``point``."""
        basis = np.eye(self.dim)
        p = np.asarray(point, dtype=float)
        return np.array([[float(self(p, basis[i], basis[j])) for j in range(self.dim)]
                         for i in range(self.dim)])

    def top_power(self, point, vectors) -> float:
        """omega^m+1 evaluated on ``2m+2`` vectors, via the Pfaffian of their Gram matrix."""
        vectors = np.asarray(vectors, dtype=float)
        p = np.asarray(point, dtype=float)
        g = np.array([[float(self(p, a, b)) for b in vectors] for a in vectors])
        return math.factorial(self.m + 1) * pfaffian(g)

    def __repr__(self):
        return f"SymplectizationForm(m={self.m})"


def pfaffian(a: np.ndarray) -> float:
    """Pfaffian of a small antisymmetric matrix by expansion along the first row."""
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    total = 0.0
    rest = list(range(1, n))
    for idx, j in enumerate(rest):
        if a[0, j] == 0.0:
            continue
        minor = [r for r in rest if r != j]
        total += (-1) ** idx * a[0, j] * pfaffian(a[np.ix_(minor, minor)])
    return total


class UnitaryFrame:
    """The symplectic frame e_1 = d/dt, f_1 = d/dz, e_{j+1} = d/dx_j + y_j d/dz, f_{j+1} = d/dy_j.

    omega(e_k, f_k) = e^t and all other pairings vanish, so the complex
    coordinates ``X + iY`` of a tangent vector (X along the e's, Y along the
    f's) trivialize the symplectization up to the common factor e^t.
    """

    def __init__(self, m: int):
        self.form = SymplectizationForm(m)
        self.m = m
        self.rank = m + 1

    def vectors(self, point) -> tuple[np.ndarray, np.ndarray]:
        """The e's and f's at ``point`` as rows of two ``(m+1, 2m+2)`` arrays."""
        p = np.asarray(point, dtype=float)
        dim = self.form.dim
        z = dim - 1
        e = np.zeros((self.rank, dim))
        f = np.zeros((self.rank, dim))
        e[0, 0] = 1.0
        f[0, z] = 1.0
        for j in range(self.m):
            e[j + 1, 1 + 2 * j] = 1.0
            e[j + 1, z] = p[2 + 2 * j]
            f[j + 1, 2 + 2 * j] = 1.0
        return e, f

    def components(self, point, v) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of ``v`` along the e's and the f's (vectorized)."""
        point = np.asarray(point, dtype=float)
        v = np.asarray(v, dtype=float)
        xs = [v[..., 0]]
        ys = [self.form.contact(point[..., 1:], v[..., 1:])]
        for j in range(self.m):
            xs.append(v[..., 1 + 2 * j])
            ys.append(v[..., 2 + 2 * j])
        return np.stack(xs, axis=-1), np.stack(ys, axis=-1)

    def complex_components(self, point, v) -> np.ndarray:
        x, y = self.components(point, v)
        return x + 1j * y

    def omega(self, point, u, v) -> np.ndarray:
        """omega(u, v) computed from frame coordinates."""
        xu, yu = self.components(point, u)
        xv, yv = self.components(point, v)
        t = np.asarray(point, dtype=float)[..., 0]
        return np.exp(t) * np.sum(xu * yv - yu * xv, axis=-1)


def pullback_2form_residual(surface: ParametricMap, form: SymplectizationForm,
                            grid: GridSpec = 200) -> float:
    """max over the grid, and over pairs of partials, of |omega(d_i F, d_j F)|.

    The first factor is processed in slices so that fine 3-parameter grids
    stay within memory; slices are reduced in a fixed order.
    """
    if surface.codomain_dim != form.dim:
        raise DimensionMismatch(
            f"{surface.name} lands in R^{surface.codomain_dim}, form lives on R^{form.dim}")
    if surface.ndim < 2:
        raise ValueError("need at least two parameters")
    axes = surface.grid_axes(grid)
    worst = 0.0
    for first in np.array_split(axes[0], max(1, len(axes[0]) // 64)):
        params = np.meshgrid(first, *axes[1:], indexing="ij")
        point = surface(*params)
        tangents = [surface.deriv(k, *params) for k in range(surface.ndim)]
        for i, j in combinations(range(surface.ndim), 2):
            worst = max(worst, float(np.max(np.abs(form(point, tangents[i], tangents[j])))))
    return worst


def pullback_1form_residual(curve: ParametricMap, form: ContactForm,
                            grid: GridSpec = 10_000) -> float:
    """max over the grid of |alpha(d_k c)| for every parameter direction k."""
    if curve.codomain_dim != form.dim:
        raise DimensionMismatch(
            f"{curve.name} lands in R^{curve.codomain_dim}, form lives on R^{form.dim}")
    params = curve.grid(grid)
    point = curve(*params)
    return max(float(np.max(np.abs(form(point, curve.deriv(k, *params)))))
               for k in range(curve.ndim))
