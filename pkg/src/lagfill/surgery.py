"""Lagrangian surgery at a transverse double point, and topological bookkeeping.

The local model lives in C^2 = R^2 + iR^2 with the standard form
sum dx_k ^ dy_k. A handle profile is a planar curve gamma on [-1, 1]
running from the positive real axis to the positive imaginary axis, and the
handle is H(s, psi) = gamma(s) (cos psi, sin psi). Its ends are the unit
circles of the real plane R^2 and the imaginary plane iR^2 (scaled by
|gamma|), so it replaces a neighbourhood of the crossing of those two planes.

A normalization is a linear symplectic map taking the model's real plane to
one sheet of the double point and the imaginary plane to the other. Real
4-vectors are written in the order (e1, e2, f1, f2), matching the complex
coordinates X + iY of :class:`~lagfill.geometry.UnitaryFrame`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cobordism import MIN_TRANSVERSALITY, DoublePoint, smooth_step
from .errors import ToleranceExceeded
from .geometry import Circle, Interval, ParametricMap, UnitaryFrame
from .maslov import rotation_angle, tangent_frame_matrix

TWO_PI = 2.0 * math.pi
J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

HANDLE_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class HandleProfile:
    """gamma: [-1, 1] -> C minus 0 with its derivative."""

    gamma: Callable[[np.ndarray], np.ndarray]
    dgamma: Callable[[np.ndarray], np.ndarray]
    name: str = "profile"

    def __call__(self, s):
        return self.gamma(np.asarray(s, dtype=float))

    def derivative(self, s):
        return self.dgamma(np.asarray(s, dtype=float))

    @classmethod
    def default(cls, r: float = 0.05, ramp: tuple = (0.1, 0.9)) -> "HandleProfile":
        """gamma = R e^{i Theta}: Theta ramps smoothly from 0 to pi/2, R = r (1 + s^2 / 2).

        Theta is flat near both ends, so gamma meets each axis tangentially
        along the radial direction.
        """
        if r <= 0:
            raise ValueError("radius must be positive")
        lo, hi = ramp

        def theta(s, order=0):
            return math.pi / 2 * smooth_step((s + 1.0) / 2.0, lo, hi, order) / 2.0 ** order

        def gamma(s):
            return r * (1.0 + s ** 2 / 2.0) * np.exp(1j * theta(s))

        def dgamma(s):
            R, dR = r * (1.0 + s ** 2 / 2.0), r * s
            return (dR + 1j * R * theta(s, 1)) * np.exp(1j * theta(s))

        return cls(gamma, dgamma, f"default(r={r:g})")

    @classmethod
    def quarter_circle(cls, r: float = 0.05) -> "HandleProfile":
        """Constant radius, constant angular speed: meets both axes perpendicularly."""
        w = math.pi / 4

        def gamma(s):
            return r * np.exp(1j * w * (s + 1.0))

        def dgamma(s):
            return 1j * w * r * np.exp(1j * w * (s + 1.0))

        return cls(gamma, dgamma, f"quarter_circle(r={r:g})")

    def end_tangency_defect(self) -> float:
        """How far gamma' is from radial at the two ends (0 when tangent to the axes)."""
        d0, d1 = self.derivative(-1.0), self.derivative(1.0)
        return float(max(abs(d0.imag) / abs(d0), abs(d1.real) / abs(d1)))

    def validate(self, samples: int = 2001, tol: float = 1e-10) -> None:
        s = np.linspace(-1.0, 1.0, samples)
        g, dg = self(s), self.derivative(s)
        if np.min(np.abs(g)) <= tol:
            raise ValueError(f"{self.name}: gamma passes through the origin")
        if np.min(np.abs(dg)) <= tol:
            raise ValueError(f"{self.name}: gamma is not regular")
        a, b = self(-1.0), self(1.0)
        if abs(a.imag) > tol or a.real <= 0:
            raise ValueError(f"{self.name}: gamma(-1) = {a} is not on the positive real axis")
        if abs(b.real) > tol or b.imag <= 0:
            raise ValueError(f"{self.name}: gamma(1) = {b} is not on the positive imaginary axis")


def _to_real(z):
    """Complex 2-vectors (..., 2) -> real 4-vectors (..., 4) in (e1, e2, f1, f2) order."""
    return np.concatenate([z.real, z.imag], axis=-1)


def _to_complex(v):
    return v[..., :2] + 1j * v[..., 2:]


def omega0(u, v):
    return np.einsum("...i,ij,...j->...", u, J4, v)


@dataclass(frozen=True)
class Handle:
    map: ParametricMap
    profile: HandleProfile
    residual: float


def build_handle(profile: HandleProfile, grid: int = 200,
                 tol: float = HANDLE_RESIDUAL_TOL) -> Handle:
    """The Lagrangian handle H(s, psi) = gamma(s) (cos psi, sin psi) in the model C^2."""
    profile.validate()

    def fn(s, psi):
        g = profile(s)[..., None]
        return _to_real(g * np.stack([np.cos(psi), np.sin(psi)], -1))

    def d_s(s, psi):
        g = profile.derivative(s)[..., None]
        return _to_real(g * np.stack([np.cos(psi), np.sin(psi)], -1))

    def d_psi(s, psi):
        g = profile(s)[..., None]
        return _to_real(g * np.stack([-np.sin(psi), np.cos(psi)], -1))

    hmap = ParametricMap((Interval(-1.0, 1.0), Circle()), 4, fn, (d_s, d_psi), f"handle[{profile.name}]")
    s, psi = hmap.grid(grid)
    residual = float(np.max(np.abs(omega0(hmap.deriv(0, s, psi), hmap.deriv(1, s, psi)))))
    if residual > tol:
        raise ToleranceExceeded(f"handle is not Lagrangian: residual {residual:.3g}")
    return Handle(hmap, profile, residual)


def handle_boundary_error(handle: Handle, samples: int = 400) -> float:
    """Distance of the two boundary circles from the real and imaginary model planes."""
    psi = np.linspace(0.0, TWO_PI, samples)
    lo = handle.map(np.full_like(psi, -1.0), psi)
    hi = handle.map(np.full_like(psi, 1.0), psi)
    return float(max(np.abs(lo[:, 2:]).max(), np.abs(hi[:, :2]).max()))


@dataclass(frozen=True)
class Normalization:
    """Linear symplectic A with A(R^2) = ``real_plane`` and A(iR^2) = ``imag_plane``."""

    matrix: np.ndarray
    real_plane: np.ndarray
    imag_plane: np.ndarray
    symplectic_defect: float
    stretch: tuple
    unitary_det: complex

    @property
    def rotation_contribution(self) -> float:
        """arg det_C(U)^2 for the unitary polar factor U of A."""
        return float(np.angle(self.unitary_det ** 2))


def normalize_planes(real_plane: np.ndarray, imag_plane: np.ndarray,
                     transversality_tol: float = 1e-9) -> Normalization:
    """Normalization from two transverse Lagrangian planes given as 4 x 2 column bases."""
    V = np.asarray(real_plane, dtype=float)
    U = np.asarray(imag_plane, dtype=float)
    if np.linalg.svd(np.hstack([V, U]), compute_uv=False)[-1] <= transversality_tol:
        raise ValueError("planes are not transverse")
    for P in (V, U):
        if abs(omega0(P[:, 0], P[:, 1])) > 1e-8 * max(1.0, np.abs(P).max() ** 2):
            raise ValueError("plane is not Lagrangian")
    M = V.T @ J4 @ U
    W = U @ np.linalg.inv(M)
    A = np.hstack([V, W])
    defect = float(np.abs(A.T @ J4 @ A - J4).max())
    # polar decomposition A = P Q, P = (A A^T)^{1/2}
    evals, evecs = np.linalg.eigh(A @ A.T)
    P = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
    Q = np.linalg.solve(P, A)
    # a real symplectic orthogonal matrix is unitary: [[a, -b], [b, a]] <-> a + ib
    det_c = complex(np.linalg.det(Q[:2, :2] + 1j * Q[2:, :2]))
    return Normalization(A, V, U, defect, tuple(float(x) for x in np.sqrt(evals)), det_c)


def sheet_plane(surface, t: float, theta: float) -> np.ndarray:
    """Tangent plane of one sheet in frame coordinates, as a 4 x 2 column basis."""
    fmap = getattr(surface, "map", surface)
    Z = tangent_frame_matrix(fmap, UnitaryFrame(1), np.array(t), np.array(theta))
    return _to_real(Z).T


def normalize_double_point(dp: DoublePoint, surface) -> Normalization:
    """Real model plane to the sheet at theta2, imaginary plane to the sheet at theta1.

    The frame path along the double point leaves the sheet at theta1 and
    arrives at the sheet at theta2; the handle then leads back from theta2
    to theta1, closing the loop.
    """
    if dp.margin <= MIN_TRANSVERSALITY:
        raise ValueError(f"double point not transverse (margin {dp.margin:.3g})")
    return normalize_planes(sheet_plane(surface, dp.t, dp.theta2),
                            sheet_plane(surface, dp.t, dp.theta1))


def handle_frames(profile: HandleProfile, s, normalization: Normalization | None = None) -> np.ndarray:
    """Complex frame matrices of the handle along psi = 0, optionally pushed by A."""
    s = np.asarray(s, dtype=float)
    g, dg = profile(s), profile.derivative(s)
    zero = np.zeros_like(g)
    rows = np.stack([np.stack([dg, zero], -1), np.stack([zero, g], -1)], -2)
    if normalization is None:
        return rows
    real = _to_real(rows) @ normalization.matrix.T
    return _to_complex(real)


def handle_rotation_angle(profile: HandleProfile, normalization: Normalization | None = None,
                          reverse: bool = False, samples: int = 20_001) -> float:
    """Rotation of det^2 along the handle's psi = 0 arc, from the real end to the imaginary end."""
    s = np.linspace(-1.0, 1.0, samples)
    d2 = np.linalg.det(handle_frames(profile, s, normalization)) ** 2
    phi2 = rotation_angle(d2[::-1] if reverse else d2)
    if not (-TWO_PI < phi2 < TWO_PI):
        raise ValueError(f"handle rotation {phi2:.6g} outside (-2 pi, 2 pi)")
    return phi2


def meridian_frames(profile: HandleProfile, s0: float = 0.0,
                    normalization: Normalization | None = None):
    """Loop source for the handle's meridian psi -> H(s0, psi)."""

    def frames(u):
        psi = TWO_PI * np.asarray(u, dtype=float)
        g, dg = profile(np.full(psi.shape, s0)), profile.derivative(np.full(psi.shape, s0))
        c, sn = np.cos(psi), np.sin(psi)
        rows = np.stack([np.stack([dg * c, dg * sn], -1), np.stack([-g * sn, g * c], -1)], -2)
        if normalization is None:
            return rows
        return _to_complex(_to_real(rows) @ normalization.matrix.T)

    return frames


def surgery_loop(frame_Z: np.ndarray, profile: HandleProfile, normalization: Normalization,
                 samples: int = 20_001, closure_tol: float = 1e-8) -> np.ndarray:
    """Closed loop of frames: the double-point path followed by the handle arc back.

    The handle arc runs from its real end (sheet at theta2) to its imaginary
    end (sheet at theta1), so it picks up where the frame path stops.
    """
    frame_Z = np.asarray(frame_Z)
    arc = handle_frames(profile, np.linspace(-1.0, 1.0, samples), normalization)
    gap = max(plane_gap(frame_Z[-1], arc[0]), plane_gap(arc[-1], frame_Z[0]))
    if gap > closure_tol:
        raise ValueError(f"handle of {profile.name} does not meet the sheets tangentially "
                         f"(plane gap {gap:.3g}); the loop does not close")
    return np.concatenate([frame_Z, arc])


def plane_gap(Z1, Z2) -> float:
    """Distance between the real planes spanned by the rows of two complex frames."""
    projs = []
    for Z in (Z1, Z2):
        q, _ = np.linalg.qr(_to_real(np.asarray(Z)).T)
        projs.append(q @ q.T)
    return float(np.linalg.norm(projs[0] - projs[1], 2))


# --- topology ---------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceBookkeeping:
    euler_characteristic: int
    orientable: bool
    boundary_components: int
    history: tuple = field(default=())

    @property
    def genus(self) -> int:
        """Orientable genus, or the number of cross-caps when non-orientable."""
        closed_chi = self.euler_characteristic + self.boundary_components
        return (2 - closed_chi) // 2 if self.orientable else 2 - closed_chi

    def classification_name(self) -> str:
        b = self.boundary_components
        holes = "" if b == 0 else (" minus a disk" if b == 1 else f" minus {b} disks")
        if self.orientable:
            g = self.genus
            base = {0: "sphere", 1: "torus"}.get(g, f"genus-{g} surface")
        else:
            k = self.genus
            base = {1: "projective plane", 2: "Klein bottle"}.get(k, f"connected sum of {k} projective planes")
        if base == "sphere" and b == 1:
            return "disk"
        if base == "sphere" and b == 2:
            return "annulus"
        if base == "projective plane" and b == 1:
            return "Moebius band"
        return base + holes

    def to_dict(self) -> dict:
        return {"chi": self.euler_characteristic, "orientable": self.orientable,
                "boundary_components": self.boundary_components,
                "classification_name": self.classification_name()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def disk() -> SurfaceBookkeeping:
    return SurfaceBookkeeping(1, True, 1, ("disk",))


def cylinder() -> SurfaceBookkeeping:
    return SurfaceBookkeeping(0, True, 2, ("cylinder",))


def glue_along_circle(a: SurfaceBookkeeping, b: SurfaceBookkeeping) -> SurfaceBookkeeping:
    """Glue one boundary circle of ``a`` to one of ``b``; chi is additive since chi(S^1) = 0."""
    if a.boundary_components < 1 or b.boundary_components < 1:
        raise ValueError("both surfaces need a boundary circle to glue along")
    return SurfaceBookkeeping(a.euler_characteristic + b.euler_characteristic,
                              a.orientable and b.orientable,
                              a.boundary_components + b.boundary_components - 2,
                              a.history + b.history + ("glue",))


def bookkeeping_resolve(surface: SurfaceBookkeeping, double_points: int = 1,
                        orientation_reversing: bool = True) -> SurfaceBookkeeping:
    """Resolve ``double_points`` transverse double points by surgery.

    Each surgery removes two disks (chi - 2) and adds an annulus (chi + 0).
    A surgery whose new loop reverses orientation makes the surface
    non-orientable.
    """
    if double_points < 0:
        raise ValueError("double point count must be non-negative")
    return SurfaceBookkeeping(surface.euler_characteristic - 2 * double_points,
                              surface.orientable and not (orientation_reversing and double_points > 0),
                              surface.boundary_components,
                              surface.history + ("resolve",) * double_points)
