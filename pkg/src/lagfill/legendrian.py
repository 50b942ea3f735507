"""Legendrian knots in R^3_st, their fronts and rotation numbers, and front S^1-spinning."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import NonConvergence, UnwrapError
from .geometry import Circle, ContactForm, ParametricMap, pullback_1form_residual, stack
from .winding import winding_number

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

DEFAULT_SPIN_SHIFT = 4.0

# Looseness of the spun torus is taken from the literature, never computed here.
LOOSENESS_NOTE = ("front S^1-spinning of a stabilized knot is loose "
                  "(Dimitroglou Rizell-Golovko); recorded as metadata only")


@dataclass
class LegendrianCurve:
    map: ParametricMap
    name: str = "curve"

    @cached_property
    def residual(self) -> float:
        return pullback_1form_residual(self.map, ContactForm(1), 10_000)

    @cached_property
    def embedding_gap(self) -> float:
        """Minimum distance between image points whose parameters are >= 0.1 apart."""
        theta = Circle().sample(1500)
        pts = self.map(theta)
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        sep = np.abs(theta[:, None] - theta[None, :])
        sep = np.minimum(sep, TWO_PI - sep)
        return float(np.min(d[sep >= 0.1]))

    def __call__(self, theta):
        return self.map(theta)

    def tangent(self, theta) -> np.ndarray:
        return self.map.deriv(0, theta)


def _k1(theta):
    return stack(np.sin(theta), -np.sin(2 * theta), 2.0 / 3.0 * np.cos(theta) ** 3)


def _dk1(theta):
    c, s = np.cos(theta), np.sin(theta)
    return stack(c, -2.0 * np.cos(2 * theta), -2.0 * c ** 2 * s)


def _k2(theta):
    c = np.cos(theta)
    return stack(np.sin(theta), np.sin(4 * theta), 4.0 / 3.0 * c ** 3 - 8.0 / 5.0 * c ** 5)


def _dk2(theta):
    c, s = np.cos(theta), np.sin(theta)
    return stack(c, 4.0 * np.cos(4 * theta), -4.0 * c ** 2 * s + 8.0 * c ** 4 * s)


def make_K1() -> LegendrianCurve:
    """The standard Legendrian unknot (sin t, -sin 2t, 2/3 cos^3 t)."""
    return LegendrianCurve(ParametricMap((Circle(),), 3, _k1, (_dk1,), "K1"), "K1")


def make_K2() -> LegendrianCurve:
    """The stabilized unknot (sin t, sin 4t, 4/3 cos^3 t - 8/5 cos^5 t)."""
    return LegendrianCurve(ParametricMap((Circle(),), 3, _k2, (_dk2,), "K2"), "K2")


def fourier_legendrian(x_coeffs: dict, y_coeffs: dict, name: str = "fourier") -> LegendrianCurve:
    """Exact Legendrian with trigonometric-polynomial x and y; z integrates y dx.

    Coefficients are given as ``{k: c_k}`` for ``sum_k c_k e^{ik theta}`` with
    ``c_{-k} = conj(c_k)`` implied (only ``k >= 0`` may be passed). The
    constant term of ``y x'`` must vanish, otherwise z is not periodic.
    """

    def full(coeffs):
        out = {}
        for k, c in coeffs.items():
            if k < 0:
                raise ValueError("pass only k >= 0")
            c = complex(c)
            if k == 0:
                out[0] = complex(c.real)
            else:
                out[k] = c
                out[-k] = c.conjugate()
        return out

    X, Y = full(x_coeffs), full(y_coeffs)
    dX = {k: 1j * k * c for k, c in X.items()}
    dY = {k: 1j * k * c for k, c in Y.items()}
    prod: dict = {}
    for j, yj in Y.items():
        for k, xk in dX.items():
            prod[j + k] = prod.get(j + k, 0) + yj * xk
    if abs(prod.get(0, 0)) > 1e-12:
        raise ValueError(f"y dx has nonzero mean {prod[0]:.3g}; z would not close up")
    Z = {k: c / (1j * k) for k, c in prod.items() if k != 0}

    def ev(coeffs, theta):
        theta = np.asarray(theta, dtype=float)
        total = np.zeros(theta.shape, dtype=complex)
        for k, c in coeffs.items():
            total = total + c * np.exp(1j * k * theta)
        return total.real

    def fn(theta):
        return stack(ev(X, theta), ev(Y, theta), ev(Z, theta))

    def dfn(theta):
        xp, yp = ev(dX, theta), ev(dY, theta)
        return stack(xp, yp, ev(Y, theta) * xp)

    return LegendrianCurve(ParametricMap((Circle(),), 3, fn, (dfn,), name), name)


@dataclass(frozen=True)
class Cusp:
    theta: float
    x: float
    z: float
    direction: str  # "up" or "down": sign of d(z - y0 x)/dtheta just after the cusp


@dataclass
class FrontDiagram:
    name: str
    theta: np.ndarray
    x: np.ndarray
    z: np.ndarray
    cusps: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)

    @property
    def signed_cusp_count(self) -> int:
        down = sum(1 for c in self.cusps if c.direction == "down")
        up = sum(1 for c in self.cusps if c.direction == "up")
        return down - up


# A zero of dx/dtheta is a semicubical cusp when |x''| and |y'| both exceed this.
CUSP_TRANSVERSALITY = 1e-6
_CUSP_PROBE = 1e-4


def _x_prime(curve, theta):
    return float(curve.tangent(theta)[0])


def _x_second(curve, theta, h=1e-6):
    # central difference of the exact first derivative; used only to classify roots
    return (_x_prime(curve, theta + h) - _x_prime(curve, theta - h)) / (2 * h)


def front_project(curve: LegendrianCurve, n_samples: int = 2000) -> FrontDiagram:
    """(x, z) samples of the front plus its cusps, located as roots of dx/dtheta."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    theta = Circle().sample(n_samples)
    pts = curve(theta)
    xp = curve.tangent(theta)[:, 0]
    step = TWO_PI / n_samples

    roots = []
    for i in range(n_samples):
        a, b = theta[i], theta[i] + step
        fa, fb = xp[i], xp[(i + 1) % n_samples]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            try:
                roots.append(brentq(lambda s: _x_prime(curve, s), a, b, xtol=1e-15))
            except (ValueError, RuntimeError) as exc:
                raise NonConvergence(f"dx/dtheta root search failed: {exc}", bracket=(a, b)) from exc

    # zeros of even multiplicity do not change sign; look for near-zero local minima of |x'|
    ax = np.abs(xp)
    prev, nxt = np.roll(ax, 1), np.roll(ax, -1)
    for i in np.nonzero((ax <= prev) & (ax <= nxt) & (ax < 10 * step))[0]:
        if xp[i - 1] * xp[(i + 1) % n_samples] < 0:
            continue
        res = minimize_scalar(lambda s: abs(_x_prime(curve, s)),
                              bounds=(theta[i] - step, theta[i] + step), method="bounded",
                              options={"xatol": 1e-12})
        if abs(_x_prime(curve, res.x)) < 1e-9:
            roots.append(res.x)

    cusps, degenerate = [], []
    seen = []
    for r in sorted(float(np.mod(r, TWO_PI)) for r in roots):
        if any(min(abs(r - q), TWO_PI - abs(r - q)) < 1e-9 for q in seen):
            continue
        seen.append(r)
        yp = float(curve.tangent(r)[1])
        if abs(_x_second(curve, r)) > CUSP_TRANSVERSALITY and abs(yp) > CUSP_TRANSVERSALITY:
            # height change just after the cusp, measured against the cusp's tangent line
            p = curve(r)
            after = curve.tangent(r + _CUSP_PROBE)
            rise = float(after[2] - p[1] * after[0])
            cusps.append(Cusp(r, float(p[0]), float(p[2]), "up" if rise > 0 else "down"))
        else:
            degenerate.append(r)
    return FrontDiagram(curve.name, theta, pts[:, 0], pts[:, 2], cusps, degenerate)


def z_extremum_count(curve: LegendrianCurve, n_samples: int = 2000) -> int:
    """Number of sign changes of dz/dtheta around the loop, i.e. local extrema of z on the front."""
    dz = curve.tangent(Circle().sample(n_samples))[:, 2]
    dz = dz[np.abs(dz) > 1e-12]
    return int(np.count_nonzero(np.sign(dz) != np.sign(np.roll(dz, 1))))


def cusp_tangent_defect(curve: LegendrianCurve, front: FrontDiagram) -> float:
    """max over cusps of max(|dx/dtheta|, |dz/dtheta|)."""
    if not front.cusps:
        return 0.0
    d = curve.tangent(np.array([c.theta for c in front.cusps]))
    return float(np.max(np.abs(d[:, [0, 2]])))


def rotation_number(curve: LegendrianCurve, n_samples: int = 20_000) -> int:
    """Winding number of the Lagrangian-projection tangent (dx, dy), by argument unwrapping."""
    for attempt in range(3):
        # an offset grid avoids hitting an isolated near-zero of the tangent twice
        theta = Circle().sample(n_samples) + (0.5 * TWO_PI / n_samples if attempt else 0.0)
        d = curve.tangent(theta)
        try:
            w = winding_number(d[:, 0], d[:, 1])
        except UnwrapError:
            log.debug("tangent too close to origin on attempt %d, refining", attempt)
            n_samples *= 2
            continue
        k = round(w)
        if abs(w - k) > 1e-6:
            raise UnwrapError(f"non-integer winding {w!r}")
        return int(k)
    raise UnwrapError("Lagrangian projection is not immersed along the sampled loop")


def cusp_rotation_number(front: FrontDiagram) -> int:
    """Rotation number from the front: half the signed cusp count."""
    signed = front.signed_cusp_count
    if signed % 2:
        raise ValueError(f"odd signed cusp count {signed}")
    return signed // 2


@dataclass
class SpunSurface:
    """F(theta, p) = (t, x cos theta, y cos theta, x sin theta, y sin theta, z) for a shifted base."""

    map: ParametricMap
    base: ParametricMap
    shift: float
    boundary_is_loose: bool = True
    looseness_source: str = LOOSENESS_NOTE

    def boundary_torus(self, t_end: float | None = None) -> ParametricMap:
        """The spun Legendrian torus in R^5 at the top end, as a map (theta, phi) -> R^5."""
        t_dom = self.base.domain[0]
        t_end = t_dom.b if t_end is None else t_end
        fmap = self.map

        def fn(theta, phi):
            return fmap(theta, np.full(np.shape(theta), t_end), phi)[..., 1:]

        def d_theta(theta, phi):
            return fmap.deriv(0, theta, np.full(np.shape(theta), t_end), phi)[..., 1:]

        def d_phi(theta, phi):
            return fmap.deriv(2, theta, np.full(np.shape(theta), t_end), phi)[..., 1:]

        return ParametricMap((Circle(), self.base.domain[1]), 5, fn, (d_theta, d_phi),
                             f"spun boundary of {self.base.name}")


def spin(filling, shift: float = DEFAULT_SPIN_SHIFT, check_grid: int = 200) -> SpunSurface:
    """Front S^1-spinning of a surface in R x R^3 after translating x by ``shift``.

    ``filling`` is a ParametricMap (t, phi) -> (t, x, y, z), or any object
    carrying one as ``.map``.
    """
    base = getattr(filling, "map", filling)
    if base.codomain_dim != 4 or base.ndim != 2:
        raise ValueError("spin expects a two-parameter map into R x R^3")
    if shift <= 0:
        raise ValueError("shift must be positive")
    xs = base(*base.grid(check_grid))[..., 1] + shift
    if np.min(xs) <= 0:
        raise ValueError(f"min x after shift is {np.min(xs):.4g}; increase the shift")

    def fn(theta, t, phi):
        b = base(t, phi)
        c, s = np.cos(theta), np.sin(theta)
        x = b[..., 1] + shift
        return stack(b[..., 0], x * c, b[..., 2] * c, x * s, b[..., 2] * s, b[..., 3])

    def d_theta(theta, t, phi):
        b = base(t, phi)
        c, s = np.cos(theta), np.sin(theta)
        x = b[..., 1] + shift
        return stack(0.0 * c, -x * s, -b[..., 2] * s, x * c, b[..., 2] * c, 0.0 * c)

    def along_base(k):
        def d(theta, t, phi):
            db = base.deriv(k, t, phi)
            c, s = np.cos(theta), np.sin(theta)
            return stack(db[..., 0], db[..., 1] * c, db[..., 2] * c, db[..., 1] * s,
                         db[..., 2] * s, db[..., 3])
        return d

    fmap = ParametricMap((Circle(),) + tuple(base.domain), 6, fn,
                         (d_theta, along_base(0), along_base(1)), f"spun {base.name}")
    return SpunSurface(fmap, base, shift)

