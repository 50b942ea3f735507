"""The front homotopy from K1 to K2, its Legendrian lift and trace, the perturbed
Lagrangian immersion, and double points of immersed surfaces.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import bisect, newton
from scipy.spatial import cKDTree

from .errors import AmbiguousRoots, CensusError
from .geometry import (Circle, Interval, ParametricMap, SymplectizationForm,
                       pullback_2form_residual, stack)
from .legendrian import make_K1, make_K2

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

TANGENCY_LEVEL = 5.0 / 7.0

# Orientation of R x R^3 used for intersection signs: omega ^ omega > 0.
SYMPLECTIC_ORIENTATION = 1

MIN_TRANSVERSALITY = 1e-6


def _g(u):
    """exp(-1/u) for u > 0, extended by zero."""
    pos = u > 0
    safe = np.where(pos, u, 1.0)
    return np.where(pos, np.exp(-1.0 / safe), 0.0)


def _g1(u):
    pos = u > 0
    safe = np.where(pos, u, 1.0)
    return np.where(pos, np.exp(-1.0 / safe) / safe ** 2, 0.0)


def _g2(u):
    pos = u > 0
    safe = np.where(pos, u, 1.0)
    return np.where(pos, np.exp(-1.0 / safe) * (1.0 - 2.0 * safe) / safe ** 4, 0.0)


def smooth_step(s, lo: float, hi: float, order: int = 0):
    """Smooth monotone step: 0 for s <= lo, 1 for s >= hi, flat to all orders at both joins.

    ``order`` selects the value (0) or the first/second derivative in s.
    """
    s = np.asarray(s, dtype=float)
    w = hi - lo
    u = (s - lo) / w
    a, b = _g(u), _g(1.0 - u)
    total = a + b
    if order == 0:
        return a / total
    a1, b1 = _g1(u), _g1(1.0 - u)
    num = a1 * b + a * b1
    if order == 1:
        return num / total ** 2 / w
    if order == 2:
        num1 = _g2(u) * b - a * _g2(1.0 - u)
        total1 = a1 - b1
        return (num1 / total ** 2 - 2.0 * num * total1 / total ** 3) / w ** 2
    raise ValueError("order must be 0, 1 or 2")


@dataclass(frozen=True)
class CutoffFunction:
    """rho_2(t) = rho_1(t / n) on [0, n].

    ``variant="smooth-plateau"`` uses a smooth step on [1/3, 2/3];
    ``variant="identity"`` is rho_1(s) = s, used for index computations.
    """

    variant: str = "smooth-plateau"
    n: float = 7

    def __post_init__(self):
        if self.variant not in ("smooth-plateau", "identity"):
            raise ValueError(f"unknown cutoff variant {self.variant!r}")
        if self.n <= 0:
            raise ValueError("n must be positive")

    def __call__(self, t):
        return self.value(t)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.variant == "identity":
            return t / self.n
        return smooth_step(t / self.n, 1.0 / 3.0, 2.0 / 3.0)

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        if self.variant == "identity":
            return np.full(t.shape, 1.0 / self.n)
        return smooth_step(t / self.n, 1.0 / 3.0, 2.0 / 3.0, 1) / self.n

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        if self.variant == "identity":
            return np.zeros(t.shape)
        return smooth_step(t / self.n, 1.0 / 3.0, 2.0 / 3.0, 2) / self.n ** 2

    @property
    def interval(self) -> Interval:
        return Interval(0.0, float(self.n))

    @property
    def collar_width(self) -> float | None:
        """Width of the product collars at both ends; None when there are none."""
        return self.n / 3.0 if self.variant == "smooth-plateau" else None


# theta-profiles shared by the homotopy, the lift and the immersion
def _z1(th):
    return 2.0 / 3.0 * np.cos(th) ** 3


def _dz1(th):
    return -2.0 * np.cos(th) ** 2 * np.sin(th)


def _y1(th):
    return -np.sin(2 * th)


def _dy1(th):
    return -2.0 * np.cos(2 * th)


def _gz(th):
    c = np.cos(th)
    return 2.0 / 3.0 * c ** 3 - 8.0 / 5.0 * c ** 5


def _dgz(th):
    c, s = np.cos(th), np.sin(th)
    return -2.0 * c ** 2 * s + 8.0 * c ** 4 * s


def _hy(th):
    return np.sin(4 * th) + np.sin(2 * th)


def _dhy(th):
    return 4.0 * np.cos(4 * th) + 2.0 * np.cos(2 * th)


def front_homotopy(cutoff: CutoffFunction) -> ParametricMap:
    """k_fr(t, theta) = (sin theta, 2/3 cos^3 theta + rho(t) (2/3 cos^3 theta - 8/5 cos^5 theta))."""
    rho = cutoff

    def fn(t, th):
        return stack(np.sin(th), _z1(th) + rho(t) * _gz(th))

    def d_t(t, th):
        return stack(0.0 * th, rho.d1(t) * _gz(th))

    def d_th(t, th):
        return stack(np.cos(th), _dz1(th) + rho(t) * _dgz(th))

    return ParametricMap((cutoff.interval, Circle()), 2, fn, (d_t, d_th), "front homotopy")


def tangency_time(cutoff: CutoffFunction, level: float = TANGENCY_LEVEL) -> float:
    """The unique T with rho(T) = level: bisection to 1e-6, then Newton."""
    if cutoff.variant == "identity":
        lo, hi = 0.0, float(cutoff.n)
    else:
        lo, hi = cutoff.n / 3.0, 2.0 * cutoff.n / 3.0
    f = lambda t: float(cutoff(t)) - level
    t0 = bisect(f, lo, hi, xtol=1e-6)
    return float(newton(f, t0, fprime=lambda t: float(cutoff.d1(t)), tol=1e-15, maxiter=50))


def legendrian_lift(cutoff: CutoffFunction) -> ParametricMap:
    """The Legendrian regular homotopy f: [0, n] x S^1 -> R^3 lifting the front homotopy."""
    rho = cutoff

    def fn(t, th):
        r = rho(t)
        return stack(np.sin(th), _y1(th) + r * _hy(th), _z1(th) + r * _gz(th))

    def d_t(t, th):
        r1 = rho.d1(t)
        return stack(0.0 * th, r1 * _hy(th), r1 * _gz(th))

    def d_th(t, th):
        r = rho(t)
        return stack(np.cos(th), _dy1(th) + r * _dhy(th), _dz1(th) + r * _dgz(th))

    return ParametricMap((cutoff.interval, Circle()), 3, fn, (d_t, d_th), "Legendrian lift")


def trace_map(cutoff: CutoffFunction) -> ParametricMap:
    """Tr(f)(t, theta) = (t, f(t, theta)) in R x R^3."""
    f = legendrian_lift(cutoff)

    def fn(t, th):
        p = f(t, th)
        return stack(t, p[..., 0], p[..., 1], p[..., 2])

    def d_t(t, th):
        d = f.deriv(0, t, th)
        return stack(1.0 + 0.0 * th, d[..., 0], d[..., 1], d[..., 2])

    def d_th(t, th):
        d = f.deriv(1, t, th)
        return stack(0.0 * th, d[..., 0], d[..., 1], d[..., 2])

    return ParametricMap((cutoff.interval, Circle()), 4, fn, (d_t, d_th), "trace")


def trace_residual_closed_form(cutoff: CutoffFunction, grid: int = 200) -> float:
    """max e^t |rho'(t) cos(theta) (sin 4 theta + sin 2 theta)|: the exact omega on the trace."""
    t = cutoff.interval.sample(grid)[:, None]
    th = Circle().sample(grid)[None, :]
    return float(np.max(np.abs(np.exp(t) * cutoff.d1(t) * np.cos(th) * _hy(th))))


@dataclass
class LagrangianImmersedSurface:
    map: ParametricMap
    cutoff: CutoffFunction
    lower_end: str = "K1"
    upper_end: str = "K2"

    @property
    def collar_width(self) -> float | None:
        return self.cutoff.collar_width

    @cached_property
    def lagrangian_residual(self) -> float:
        return pullback_2form_residual(self.map, SymplectizationForm(1), 200)

    def collar_error(self, samples: int = 200) -> float:
        """Largest deviation from (t, K1) near t = 0 and (t, K2) near t = n over the collars."""
        eps = self.collar_width
        if eps is None:
            raise ValueError("identity cutoff has no product collars")
        n = self.cutoff.n
        th = Circle().sample(samples)
        worst = 0.0
        for knot, ts in ((make_K1(), np.linspace(0.0, eps, samples)),
                         (make_K2(), np.linspace(n - eps, n, samples))):
            T, TH = np.meshgrid(ts, th, indexing="ij")
            expected = np.concatenate([T[..., None], knot(TH)], axis=-1)
            worst = max(worst, float(np.max(np.abs(self.map(T, TH) - expected))))
        return worst


def immersion_map(cutoff: CutoffFunction) -> ParametricMap:
    """The perturbed trace: z gains rho' so that omega vanishes on the surface."""
    rho = cutoff

    def fn(t, th):
        r = rho(t)
        return stack(t, np.sin(th), _y1(th) + r * _hy(th),
                     _z1(th) + (r + rho.d1(t)) * _gz(th))

    def d_t(t, th):
        r1 = rho.d1(t)
        return stack(1.0 + 0.0 * th, 0.0 * th, r1 * _hy(th), (r1 + rho.d2(t)) * _gz(th))

    def d_th(t, th):
        r = rho(t)
        return stack(0.0 * th, np.cos(th), _dy1(th) + r * _dhy(th),
                     _dz1(th) + (r + rho.d1(t)) * _dgz(th))

    return ParametricMap((cutoff.interval, Circle()), 4, fn, (d_t, d_th), "perturbed immersion")


def perturbed_immersion(cutoff: CutoffFunction, validate: bool = True,
                        grid: int = 200) -> LagrangianImmersedSurface:
    """The Lagrangian immersion [0, n] x S^1 -> R x R^3 perturbing the trace.

    With ``validate`` the double-point census must find exactly one point,
    otherwise :class:`CensusError` ("n too small") is raised.
    """
    surface = LagrangianImmersedSurface(immersion_map(cutoff), cutoff)
    if validate:
        census = double_point_census(surface, grid=grid)
        if len(census) != 1:
            raise CensusError(f"n too small: census found {len(census)} double points for "
                              f"n={cutoff.n} ({cutoff.variant})", census)
    return surface


@dataclass(frozen=True)
class DoublePoint:
    t: float
    theta1: float
    theta2: float
    image: tuple
    sign: int
    margin: float
    residual: float

    def to_json(self) -> dict:
        d = asdict(self)
        return {"t": d["t"], "theta1": d["theta1"], "theta2": d["theta2"],
                "image": list(d["image"]), "sign": d["sign"], "margin": d["margin"]}


def _wrap(a):
    """Angles in [0, 2 pi), with values rounding up to 2 pi sent to 0."""
    a = np.mod(a, TWO_PI)
    return np.where(a > TWO_PI - 1e-12, 0.0, a)


def _circ_dist(a, b):
    d = np.abs(np.mod(a - b + math.pi, TWO_PI) - math.pi)
    return d


def _sheet_frames(fmap, t, th1, th2):
    u = fmap.jacobian(t, th1).T
    v = fmap.jacobian(t, th2).T
    return u, v


def transversality_margin(fmap: ParametricMap, t, th1, th2) -> float:
    u, v = _sheet_frames(fmap, t, th1, th2)
    return float(np.linalg.svd(np.vstack([u, v]), compute_uv=False)[-1])


def self_intersection_sign(dp: DoublePoint, surface, form: SymplectizationForm | None = None,
                           swap: bool = False) -> int:
    """Sign of omega^omega on (u1, u2, v1, v2), the two sheets' tangent frames at ``dp``.

    ``swap`` lists the second sheet first; the result must not change.
    """
    fmap = getattr(surface, "map", surface)
    form = form or SymplectizationForm(1)
    if dp.margin <= MIN_TRANSVERSALITY:
        raise ValueError(f"double point not transverse enough to sign (margin {dp.margin:.3g})")
    th1, th2 = (dp.theta2, dp.theta1) if swap else (dp.theta1, dp.theta2)
    u, v = _sheet_frames(fmap, dp.t, th1, th2)
    vol = form.top_power(np.array(dp.image), np.vstack([u, v]))
    return int(np.sign(vol)) * SYMPLECTIC_ORIENTATION


def coordinate_sign(dp: DoublePoint, surface, swap: bool = False) -> int:
    """Sign of det[u1 u2 v1 v2] in (t, x, y, z) coordinates."""
    fmap = getattr(surface, "map", surface)
    th1, th2 = (dp.theta2, dp.theta1) if swap else (dp.theta1, dp.theta2)
    u, v = _sheet_frames(fmap, dp.t, th1, th2)
    return int(np.sign(np.linalg.det(np.vstack([u, v]))))


def _newton_batch(fmap, t, a, b, t_lo, t_hi, iters=60, tol=1e-14):
    """Solve p(t, a) = p(t, b) for the spatial part p of ``fmap``, batched over seeds."""
    alive = np.ones(t.shape, dtype=bool)
    done = np.zeros(t.shape, dtype=bool)
    for _ in range(iters):
        idx = np.nonzero(alive & ~done)[0]
        if idx.size == 0:
            break
        ti, ai, bi = t[idx], a[idx], b[idx]
        G = fmap(ti, ai)[:, 1:] - fmap(ti, bi)[:, 1:]
        Ja = fmap.jacobian(ti, ai)[:, 1:, :]
        Jb = fmap.jacobian(ti, bi)[:, 1:, :]
        J = np.stack([Ja[:, :, 0] - Jb[:, :, 0], Ja[:, :, 1], -Jb[:, :, 1]], axis=-1)
        det = np.linalg.det(J)
        ok = np.abs(det) > 1e-14
        alive[idx[~ok]] = False
        idx, G, J = idx[ok], G[ok], J[ok]
        step = np.linalg.solve(J, -G[..., None])[..., 0]
        t[idx] += step[:, 0]
        a[idx] += step[:, 1]
        b[idx] += step[:, 2]
        out = (t[idx] < t_lo - 1e-9) | (t[idx] > t_hi + 1e-9) | ~np.isfinite(step).all(axis=1)
        alive[idx[out]] = False
        small = np.max(np.abs(step), axis=1) < tol * 10
        done[idx[small & ~out]] = True
    return alive & done


def _auto_radius(fmap, ts, ths):
    T, TH = np.meshgrid(ts, ths, indexing="ij")
    jac = fmap.jacobian(T, TH)
    speed_t = float(np.max(np.linalg.norm(jac[..., 0], axis=-1)))
    speed_th = float(np.max(np.linalg.norm(jac[..., 1], axis=-1)))
    return 1.5 * (speed_th * (ths[1] - ths[0]) + 2.0 * speed_t * (ts[1] - ts[0]))


def double_point_census(surface, grid: int = 200, radius: float | None = None,
                        min_separation: float = 0.1, merge_tol: float = 1e-6,
                        form: SymplectizationForm | None = None) -> list:
    """All double points of an immersed surface (t, theta) -> (t, x, y, z).

    Colliding points share t, so collisions solve three equations in
    (t, theta1, theta2). Seeds are grid pairs in one t-slice whose images lie
    within ``radius``; seeds closer than ``min_separation`` in theta would
    collapse onto the diagonal and are skipped. Refined roots within
    ``merge_tol`` are merged; if a merged cluster is not numerically a single
    root the census refuses to decide.
    """
    fmap = getattr(surface, "map", surface)
    if grid < 200:
        raise ValueError("census grid must be >= 200 per factor")
    t_dom = fmap.domain[0]
    ts = t_dom.sample(grid)
    ths = Circle().sample(grid)
    if radius is None:
        radius = _auto_radius(fmap, ts, ths)

    seeds = []
    for t in ts:
        pts = fmap(np.full(grid, t), ths)[:, 1:]
        pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
        if len(pairs) == 0:
            continue
        keep = _circ_dist(ths[pairs[:, 0]], ths[pairs[:, 1]]) >= min_separation
        for i, j in pairs[keep]:
            seeds.append((t, ths[i], ths[j]))
    if not seeds:
        return []
    seeds = np.array(seeds)
    t, a, b = seeds[:, 0].copy(), seeds[:, 1].copy(), seeds[:, 2].copy()
    ok = _newton_batch(fmap, t, a, b, t_dom.a, t_dom.b)
    log.debug("census: %d seeds, %d converged, %d diverged", len(seeds), ok.sum(), (~ok).sum())
    t, a, b = t[ok], _wrap(a[ok]), _wrap(b[ok])
    nontrivial = _circ_dist(a, b) > 1e-3
    t, a, b = t[nontrivial], a[nontrivial], b[nontrivial]
    t = np.clip(t, t_dom.a, t_dom.b)
    lo, hi = np.minimum(a, b), np.maximum(a, b)

    roots = []
    for r in sorted(zip(t.tolist(), lo.tolist(), hi.tolist())):
        for cluster in roots:
            rep = cluster[0]
            dist = max(abs(r[0] - rep[0]), _circ_dist(r[1], rep[1]), _circ_dist(r[2], rep[2]))
            if dist <= merge_tol:
                cluster.append(r)
                break
        else:
            roots.append([r])

    form = form or SymplectizationForm(1)
    points = []
    for cluster in roots:
        arr = np.array(cluster)
        spread = float(np.max(np.ptp(arr, axis=0))) if len(arr) > 1 else 0.0
        if spread > 1e-9:
            raise AmbiguousRoots(f"roots near {cluster[0]} spread over {spread:.3g}; "
                                 "cannot tell one double point from two")
        tr, a1, a2 = cluster[0]
        p1 = fmap(tr, a1)
        p2 = fmap(tr, a2)
        image = 0.5 * (p1 + p2)
        margin = transversality_margin(fmap, tr, a1, a2)
        dp = DoublePoint(tr, a1, a2, tuple(float(x) for x in image), 0, margin,
                         float(np.max(np.abs(p1 - p2))))
        if margin > MIN_TRANSVERSALITY:
            dp = DoublePoint(tr, a1, a2, dp.image, self_intersection_sign(dp, fmap, form),
                             margin, dp.residual)
        points.append(dp)
    return points


def _lattice_step(flat_idx, shape, k, shift, periodic):
    """Flat index of the grid neighbour one step along factor ``k`` (clamped on intervals)."""
    multi = list(np.unravel_index(flat_idx, shape))
    moved = multi[k] + shift
    multi[k] = np.mod(moved, shape[k]) if periodic else np.clip(moved, 0, shape[k] - 1)
    return np.ravel_multi_index(multi, shape)


def pairwise_census(fmap: ParametricMap, grid: int = 100, radius: float | None = None,
                    min_separation: float = 0.1, tol: float = 1e-10) -> list:
    """Double points of a two-parameter map into R^d without assuming a shared coordinate.

    Seeds come from a k-d tree over all grid images; each seed is refined by
    Gauss-Newton on the four parameters. Returns ``(params1, params2, gap)``
    tuples for pairs whose images agree to ``tol``.
    """
    axes = fmap.grid_axes(grid)
    P = np.meshgrid(*axes, indexing="ij")
    flat = [p.ravel() for p in P]
    pts = fmap(*flat)
    if radius is None:
        jac = fmap.jacobian(*flat)
        spacing = [ax[1] - ax[0] for ax in axes]
        radius = 1.5 * sum(float(np.max(np.linalg.norm(jac[..., k], axis=-1))) * h
                           for k, h in enumerate(spacing))
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    found = []
    if len(pairs) == 0:
        return found

    def sep(p, q):
        out = np.zeros(len(p))
        for k, factor in enumerate(fmap.domain):
            d = np.abs(p[:, k] - q[:, k])
            if factor.periodic:
                d = np.mod(d, factor.period)
                d = np.minimum(d, factor.period - d)
            out = np.maximum(out, d)
        return out

    P0 = np.stack(flat, axis=-1)
    p, q = P0[pairs[:, 0]], P0[pairs[:, 1]]
    keep = sep(p, q) >= min_separation
    # keep only discrete local minima of the image distance on the pair lattice;
    # pairs sliding towards the diagonal always have a closer neighbour
    i, j = pairs[keep, 0], pairs[keep, 1]
    dist = np.linalg.norm(pts[i] - pts[j], axis=-1)
    shape = [len(ax) for ax in axes]
    for idx in (0, 1):
        for k, factor in enumerate(fmap.domain):
            for shift in (-1, 1):
                moved = _lattice_step(i if idx == 0 else j, shape, k, shift, factor.periodic)
                a, b = (moved, j) if idx == 0 else (i, moved)
                keep_k = np.linalg.norm(pts[a] - pts[b], axis=-1) >= dist
                i, j, dist = i[keep_k], j[keep_k], dist[keep_k]
    p, q = P0[i], P0[j]
    if len(p) == 0:
        return found
    # batched Gauss-Newton on the 2k parameters of both sheets
    for _ in range(50):
        r = fmap(*p.T) - fmap(*q.T)
        J = np.concatenate([fmap.jacobian(*p.T), -fmap.jacobian(*q.T)], axis=-1)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(J), r)
        k = p.shape[1]
        p, q = p + step[:, :k], q + step[:, k:]
        if np.max(np.abs(step)) < 1e-14:
            break
    inside = np.ones(len(p), dtype=bool)
    for k, f in enumerate(fmap.domain):
        if not f.periodic:
            for x in (p, q):
                inside &= (x[:, k] >= f.a - 1e-9) & (x[:, k] <= f.b + 1e-9)
    gap = np.max(np.abs(fmap(*p.T) - fmap(*q.T)), axis=-1)
    hit = inside & np.isfinite(gap) & (gap <= tol) & (sep(p, q) > 1e-3)
    p, q = p[hit].copy(), q[hit].copy()
    for k, factor in enumerate(fmap.domain):
        if factor.periodic:
            for x in (p, q):
                x[:, k] = np.mod(x[:, k], factor.period)
                x[x[:, k] > factor.period - 1e-12, k] = 0.0
    for a, b, g in zip(p, q, gap[hit]):
        a, b = (a, b) if tuple(a) <= tuple(b) else (b, a)
        dup = any(max(sep(a[None], fa[None])[0], sep(b[None], fb[None])[0]) < 1e-6
                  for fa, fb, _ in found)
        if not dup:
            found.append((a, b, float(g)))
    return [(tuple(float(v) for v in a), tuple(float(v) for v in b), g) for a, b, g in found]
