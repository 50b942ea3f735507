"""Lagrangian frame paths, the determinant path det(X + iY), rotation angles,
the Maslov potential difference at the double point, and Maslov indices of loops.

Conventions: a Lagrangian frame is stored as a complex matrix ``Z = X + iY``
whose rows are tangent vectors and whose columns are the (e_k, f_k = J e_k)
pairs of :class:`~lagfill.geometry.UnitaryFrame`. The Maslov index of a loop
is the winding number of det(Z)^2; it does not depend on the choice of basis
of each tangent plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ToleranceExceeded, UnwrapError
from .geometry import ParametricMap, UnitaryFrame
from .winding import ArgumentTrace, trace_argument, unwrap_samples

TWO_PI = 2.0 * math.pi

# det(X(s) + iY(s)) as polynomials in c = cos(pi s)
RE_COEFFS = {9: Fraction(704, 5), 7: Fraction(-640, 3), 5: Fraction(1388, 15),
             3: Fraction(-32, 3), 1: Fraction(49)}
RE_SCALE = Fraction(1, 49)
IM_COEFFS = {6: Fraction(-8, 5), 4: Fraction(386, 3), 2: Fraction(-140), 0: Fraction(22)}
IM_SCALE = Fraction(1, 7)

# endpoint value as printed next to the closed form, kept for the discrepancy record
PRINTED_DET_AT_ZERO = (Fraction(115, 105), Fraction(136, 105))

DOUBLE_POINT_T = 4.0


def tangent_frame_matrix(fmap: ParametricMap, frame: UnitaryFrame, *params) -> np.ndarray:
    """Complex frame matrices of the tangent planes of ``fmap``: shape ``(..., k, m+1)``."""
    point = fmap(*params)
    rows = [frame.complex_components(point, fmap.deriv(k, *params)) for k in range(fmap.ndim)]
    return np.stack(rows, axis=-2)


@dataclass(frozen=True)
class LagrangianFramePath:
    s: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    formula_gap: float = 0.0

    @property
    def Z(self) -> np.ndarray:
        return self.X + 1j * self.Y

    @property
    def reference(self) -> np.ndarray:
        """The frame at s = 0, spanning the reference plane P0."""
        return self.Z[0]


def displayed_frames(s) -> tuple[np.ndarray, np.ndarray]:
    """X(s), Y(s) exactly as written out for the path theta = pi s at t = 4, n = 7."""
    s = np.asarray(s, dtype=float)
    c = np.cos(np.pi * s)
    h = np.sin(4 * np.pi * s) + np.sin(2 * np.pi * s)
    one, zero = np.ones_like(s), np.zeros_like(s)
    X = np.stack([np.stack([one, zero], -1), np.stack([zero, c], -1)], -2)
    Y = np.stack([
        np.stack([(2.0 / 3.0 * c ** 3 - 8.0 / 5.0 * c ** 5) / 7.0, h / 7.0], -1),
        np.stack([c * h / 7.0, 2.0 / 7.0 * (8 * np.cos(4 * np.pi * s) - 3 * np.cos(2 * np.pi * s))], -1),
    ], -2)
    return X, Y


def pushed_frames(surface, s, t: float = DOUBLE_POINT_T) -> tuple[np.ndarray, np.ndarray]:
    """Frame components of (f_* d/dt, f_* d/dtheta) along theta = pi s, from exact derivatives."""
    fmap = getattr(surface, "map", surface)
    s = np.asarray(s, dtype=float)
    Z = tangent_frame_matrix(fmap, UnitaryFrame(1), np.full(s.shape, t), np.pi * s)
    return Z.real, Z.imag


def frame_path_at_double_point(surface, n_samples: int = 10_001,
                               tol: float = 1e-12) -> LagrangianFramePath:
    """The frame path along l(s) = (4, pi s) on the identity-cutoff, n = 7 immersion.

    The displayed formulas and the pushed-forward frame must agree to ``tol``.
    """
    cutoff = getattr(surface, "cutoff", None)
    if cutoff is None or cutoff.variant != "identity" or cutoff.n != 7:
        raise ValueError("frame path is defined for the identity cutoff with n = 7")
    s = np.linspace(0.0, 1.0, n_samples)
    Xa, Ya = displayed_frames(s)
    Xb, Yb = pushed_frames(surface, s)
    gap = np.maximum(np.abs(Xa - Xb).max(axis=(1, 2)), np.abs(Ya - Yb).max(axis=(1, 2)))
    worst = int(np.argmax(gap))
    if gap[worst] > tol:
        raise ToleranceExceeded(f"displayed and pushed-forward frames differ by {gap[worst]:.3g} "
                                f"at s={s[worst]:.6g}")
    return LagrangianFramePath(s, Xb, Yb, float(gap[worst]))


def _poly(coeffs, scale, c):
    return float(scale) * sum(float(a) * c ** k for k, a in coeffs.items())


def closed_form_det(s) -> np.ndarray:
    c = np.cos(np.pi * np.asarray(s, dtype=float))
    return _poly(RE_COEFFS, RE_SCALE, c) + 1j * _poly(IM_COEFFS, IM_SCALE, c)


@dataclass(frozen=True)
class DetPath:
    s: np.ndarray
    direct: np.ndarray
    closed_form: np.ndarray

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.direct - self.closed_form)))


def det_path(frame: LagrangianFramePath, tol: float = 1e-10) -> DetPath:
    direct = np.linalg.det(frame.Z)
    if np.min(np.abs(direct)) <= 1e-10:
        raise UnwrapError("frame path degenerates: det(X + iY) vanishes")
    closed = closed_form_det(frame.s)
    gap = np.abs(direct - closed)
    worst = int(np.argmax(gap))
    if gap[worst] > tol:
        raise ToleranceExceeded(f"determinant and closed form differ by {gap[worst]:.3g} "
                                f"at s={frame.s[worst]:.6g}")
    return DetPath(frame.s, direct, closed)


def exact_det_at_zero() -> tuple[Fraction, Fraction]:
    """det(X(0) + iY(0)) in exact rational arithmetic from the s = 0 frame entries."""
    y11 = Fraction(1, 7) * (Fraction(2, 3) - Fraction(8, 5))
    y22 = Fraction(2, 7) * (8 - 3)
    # X(0) is the identity and Y(0) is diagonal: det = (1 + i y11)(1 + i y22)
    return 1 - y11 * y22, y11 + y22


def closed_form_at_zero() -> tuple[Fraction, Fraction]:
    """The closed-form polynomials at c = 1, exactly."""
    return RE_SCALE * sum(RE_COEFFS.values()), IM_SCALE * sum(IM_COEFFS.values())


@dataclass(frozen=True)
class PositivityCertificate:
    n_samples: int
    min_sample: float
    derivative_bound: float
    lower_bound: float
    real_part_bound: float

    @property
    def certified(self) -> bool:
        return self.lower_bound > 0


def certify_real_part_positive(n_samples: int = 100_000) -> PositivityCertificate:
    """Certify Re det(X(s) + iY(s)) > 0 on [0, 1/2).

    Re = c Q(c^2) with c = cos(pi s) > 0 on [0, 1/2), so it suffices that
    Q > 0 on the closed interval. Q is sampled in s at ``n_samples`` points;
    between neighbours it cannot drop below the smaller sample minus
    L h / 2, where L = pi * sum_k k |q_k| bounds |dQ(cos^2 pi s)/ds|.
    ``real_part_bound`` is the analogous bound for Re itself, recorded for
    comparison; it cannot certify near s = 1/2 because Re vanishes there.
    """
    q = {(k - 1) // 2: float(RE_SCALE * a) for k, a in RE_COEFFS.items()}
    s = np.linspace(0.0, 0.5, n_samples)
    u = np.cos(np.pi * s) ** 2
    Q = sum(a * u ** k for k, a in q.items())
    L = math.pi * sum(k * abs(a) for k, a in q.items())
    h = s[1] - s[0]
    lower = float(np.min(np.minimum(Q[1:], Q[:-1]))) - L * h / 2
    re_bound = math.pi * float(RE_SCALE) * sum(k * abs(float(a)) for k, a in RE_COEFFS.items())
    return PositivityCertificate(n_samples, float(Q.min()), L, lower, re_bound)


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    margin: float
    where: float | None = None
    detail: str = ""


def verify_properties(path: DetPath, tol: float = 1e-10,
                      n_certify: int = 100_000) -> list[PropertyCheck]:
    """Checks (1)-(6) of the determinant path; see the module docstring for conventions.

    (1) is checked against the exact rational value of the frame entries;
    the differing printed value is reported in ``detail``.
    """
    if len(path.s) < 10_000:
        raise ValueError("need at least 1e4 samples")
    s, d = path.s, path.direct
    re0, im0 = exact_det_at_zero()
    start = float(re0) + 1j * float(im0)
    mid = int(np.argmin(np.abs(s - 0.5)))
    if abs(s[mid] - 0.5) > 1e-15:
        raise ValueError("sample grid must contain s = 1/2")
    out = []

    gap = abs(d[0] - start)
    printed = float(PRINTED_DET_AT_ZERO[0]) + 1j * float(PRINTED_DET_AT_ZERO[1])
    out.append(PropertyCheck("(1) det at s=0", bool(gap <= tol), gap, 0.0,
                             f"exact {re0}+{im0}i; printed {PRINTED_DET_AT_ZERO[0]}+"
                             f"{PRINTED_DET_AT_ZERO[1]}i differs by {abs(printed - start):.6g}"))
    gap = abs(d[mid] - 22j / 7)
    out.append(PropertyCheck("(2) det at s=1/2", bool(gap <= tol), gap, 0.5))
    gap = abs(d[-1] - (-start.real + 1j * start.imag))
    out.append(PropertyCheck("(3) det at s=1", bool(gap <= tol), gap, 1.0))

    rev = d[::-1]
    half = s <= 0.5
    g4 = np.abs(d.real + rev.real)[half]
    g5 = np.abs(d.imag - rev.imag)[half]
    out.append(PropertyCheck("(4) Re antisymmetric", bool(g4.max() <= tol), float(g4.max()),
                             float(s[half][np.argmax(g4)])))
    out.append(PropertyCheck("(5) Im symmetric", bool(g5.max() <= tol), float(g5.max()),
                             float(s[half][np.argmax(g5)])))

    cert = certify_real_part_positive(n_certify)
    open_half = s < 0.5
    sampled_min = float(d.real[open_half].min())
    out.append(PropertyCheck("(6) Re > 0 on [0,1/2)", bool(cert.certified and sampled_min > 0),
                             cert.lower_bound, None,
                             f"Q>={cert.lower_bound:.6g} (min sample {cert.min_sample:.6g}, "
                             f"L={cert.derivative_bound:.6g}, {cert.n_samples} samples)"))
    return out


def rotation_angle(values) -> float:
    """Total unwrapped argument change along sampled complex values."""
    values = np.asarray(values, dtype=complex)
    return unwrap_samples(np.arange(len(values)), values).total_rotation


def rotation_angle_phi1(path: DetPath) -> float:
    """Rotation angle of s -> det(X(s) + iY(s)) from s = 0 to s = 1."""
    return rotation_angle(path.direct)


def arc_rotation(start: complex, end: complex) -> float:
    """Counterclockwise angle in [0, 2 pi) of the circular arc from arg(start) to arg(end)."""
    return float(np.mod(np.angle(end) - np.angle(start), TWO_PI))


@dataclass(frozen=True)
class PotentialDifference:
    value: Fraction
    turns: float
    principal: float
    margin: float


def maslov_potential_difference(det_values, ambiguity_tol: float = 1e-6) -> PotentialDifference:
    """Half-integer Maslov potential difference from the det path between the two sheets.

    ``turns`` is the unwrapped rotation of det^2 in full turns. The start
    lies on the reference angle and counts one half; every later pass
    through it counts one. The result is therefore the element of 1/2 + Z
    nearest to ``turns``. A path ending on the reference angle (integer
    turns) is not transverse and is rejected.
    """
    d2 = np.asarray(det_values, dtype=complex) ** 2
    turns = rotation_angle(d2) / TWO_PI
    principal = float(np.mod(np.angle(d2[-1]) - np.angle(d2[0]), TWO_PI) / TWO_PI)
    margin = abs(turns - round(turns))
    if margin < ambiguity_tol:
        raise ValueError(f"det^2 rotation {turns:.9f} turns is equidistant from two half-integers")
    value = Fraction(math.floor(turns)) + Fraction(1, 2)
    return PotentialDifference(value, turns, principal, margin)


LoopSource = Callable[[np.ndarray], np.ndarray]


def maslov_index_loop(loop, n: int = 2001, residual_tol: float = 1e-6) -> int:
    """Winding number of det(Z)^2 around a closed loop of Lagrangian frames.

    ``loop`` is either a callable s -> frames for s in [0, 1] (frames of
    shape ``(N, k, k)``) or an array of frames sampled in order, first and
    last spanning the same plane.
    """
    if callable(loop):
        trace = trace_argument(lambda s: np.linalg.det(loop(s)) ** 2, 0.0, 1.0, n)
    else:
        d2 = np.linalg.det(np.asarray(loop)) ** 2
        trace = unwrap_samples(np.linspace(0.0, 1.0, len(d2)), d2)
    return _integer_turns(trace, residual_tol)


def _integer_turns(trace: ArgumentTrace, residual_tol: float) -> int:
    w = trace.winding
    k = round(w)
    if abs(w - k) > residual_tol:
        raise ToleranceExceeded(f"loop rotation is {w:.9f} turns, not an integer; is it closed?")
    return int(k)


def parameter_loop(fmap: ParametricMap, frame: UnitaryFrame, base: tuple, k: int) -> LoopSource:
    """Frames along the loop that runs parameter ``k`` once around its circle, others fixed."""
    factor = fmap.domain[k]
    if not factor.periodic:
        raise ValueError(f"parameter {k} of {fmap.name} is not a circle")

    def frames(s):
        s = np.asarray(s, dtype=float)
        params = [np.full(s.shape, float(b)) for b in base]
        params[k] = base[k] + factor.period * s
        return tangent_frame_matrix(fmap, frame, *params)

    return frames


def surgery_loop_index(phi1: float, phi2: float, tol: float = 1e-6) -> int:
    """Maslov index of the orientation-reversing loop through the surgery handle.

    The loop's det^2 rotation is 2 phi1 + phi2. With phi1 in (pi/4, pi/2)
    and phi2 in (-2 pi, 2 pi) it lies in (-3 pi/2, 3 pi); the loop reverses
    orientation, so the rotation is an odd multiple of 2 pi, and the only
    one in range is 2 pi.
    """
    if not (math.pi / 4 < phi1 < math.pi / 2):
        raise ValueError(f"phi1 = {phi1} outside (pi/4, pi/2)")
    if not (-TWO_PI < phi2 < TWO_PI):
        raise ValueError(f"phi2 = {phi2} outside (-2 pi, 2 pi)")
    total = 2 * phi1 + phi2
    if not (-1.5 * math.pi < total < 3 * math.pi):
        raise ValueError(f"2 phi1 + phi2 = {total} outside (-3 pi/2, 3 pi)")
    if abs(total - TWO_PI) > tol * TWO_PI:
        raise ValueError(f"2 phi1 + phi2 = {total} is not 2 pi to within {tol} turns")
    return 1


@dataclass
class MaslovReport:
    phi1: float
    phi2: float
    potential_difference: Fraction
    meridian_index: int
    surgery_loop_index: int
    spun_circle_index: int
    k2_loop_index: int
    properties: list

    def to_dict(self) -> dict:
        return {
            "phi1": self.phi1,
            "phi2": self.phi2,
            "potential_difference": str(self.potential_difference),
            "loop_indices": {"meridian": self.meridian_index, "surgery_loop": self.surgery_loop_index,
                             "spun_circle": self.spun_circle_index, "k2_loop": self.k2_loop_index},
            "properties": {p.name: p.passed for p in self.properties},
        }
