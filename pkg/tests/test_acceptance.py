"""The thirteen acceptance criteria at their stated tolerances."""

import math
from fractions import Fraction

import numpy as np
import pytest

from lagfill.cobordism import (CutoffFunction, double_point_census, front_homotopy, immersion_map,
                               legendrian_lift, pairwise_census, perturbed_immersion,
                               self_intersection_sign, tangency_time, trace_map)
from lagfill.geometry import (ContactForm, SymplectizationForm, UnitaryFrame,
                              pullback_1form_residual, pullback_2form_residual)
from lagfill.legendrian import make_K1, make_K2, spin
from lagfill.maslov import (arc_rotation, certify_real_part_positive, exact_det_at_zero,
                            maslov_index_loop, maslov_potential_difference, parameter_loop,
                            rotation_angle, rotation_angle_phi1, surgery_loop_index,
                            verify_properties, PRINTED_DET_AT_ZERO)
from lagfill.report import RunConfig, _Context, property_suite
from lagfill.surgery import (HandleProfile, bookkeeping_resolve, cylinder, disk, glue_along_circle,
                             handle_rotation_angle, meridian_frames, normalize_double_point,
                             surgery_loop)

IDENTITY7 = CutoffFunction("identity", 7)
TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def spun():
    return spin(perturbed_immersion(CutoffFunction("smooth-plateau", 7), validate=False), 4.0)


def test_01_legendrian_residuals(acceptance):
    alpha = ContactForm(1)
    res = [pullback_1form_residual(k.map, alpha, 10_000) for k in (make_K1(), make_K2())]
    f = legendrian_lift(IDENTITY7)
    t, th = np.meshgrid(np.linspace(0, 7, 100), np.linspace(0, TWO_PI, 10_000, endpoint=False), indexing="ij")
    res.append(float(np.max(np.abs(alpha(f(t, th), f.deriv(1, t, th))))))
    acceptance(1, max(res) <= 1e-10, f"Legendrian residuals K1, K2, f(t,.) = {max(res):.3g} <= 1e-10")


def test_02_tangency(acceptance):
    T = tangency_time(IDENTITY7)
    k = front_homotopy(IDENTITY7)
    gaps = [float(np.linalg.norm(k(T, th))) for th in (0.0, math.pi)]
    ok = T == pytest.approx(5.0, abs=1e-12) and abs(float(IDENTITY7(T)) - 5 / 7) <= 1e-12 and max(gaps) <= 1e-10
    acceptance(2, ok, f"tangency T = {T!r}, |k_fr(T,0)|, |k_fr(T,pi)| = {gaps}")


def test_03_lagrangian_residual(acceptance):
    r = pullback_2form_residual(immersion_map(IDENTITY7), SymplectizationForm(1), 500)
    acceptance(3, r <= 1e-10, f"Lagrangian residual on 500x500 = {r:.3g} <= 1e-10")


def test_04_census(acceptance, model, model_census):
    ok = len(model_census) == 1
    msg = f"{len(model_census)} double points"
    if ok:
        d = model_census[0]
        ok = (max(abs(d.t - 4), abs(d.theta1), abs(d.theta2 - math.pi)) <= 1e-8
              and np.max(np.abs(np.array(d.image) - [4, 0, 0, 0])) <= 1e-8 and d.margin > 1e-6)
        msg = f"one double point at ({d.t:.12g}, {d.theta1:.3g}, {d.theta2:.12g}), margin {d.margin:.6g}"
    trace = double_point_census(trace_map(IDENTITY7))
    ok = ok and len(trace) == 1 and abs(trace[0].t - 5) <= 1e-8
    acceptance(4, ok, msg + f"; trace: {[round(p.t, 12) for p in trace]}")


def test_05_sign(acceptance, model, model_census):
    dp = model_census[0]
    s, swapped = self_intersection_sign(dp, model), self_intersection_sign(dp, model, swap=True)
    acceptance(5, s == -1 and swapped == -1, f"self-intersection sign {s}, after sheet swap {swapped}")


def test_06_frames(acceptance, frames):
    acceptance(6, frames.formula_gap <= 1e-12 and len(frames.s) >= 10_000,
               f"displayed vs pushed-forward frames differ by {frames.formula_gap:.3g} <= 1e-12")


def test_07_det_path(acceptance, dpath):
    mid = int(np.argmin(np.abs(dpath.s - 0.5)))
    checks = verify_properties(dpath, 1e-10, 100_000)
    cert = certify_real_part_positive(100_000)
    re0, im0 = exact_det_at_zero()
    start = abs(dpath.direct[0] - (float(re0) + 1j * float(im0)))
    ok = (abs(dpath.direct[mid] - 22j / 7) <= 1e-12 and all(c.passed for c in checks)
          and cert.certified and start <= 1e-12
          and (re0, im0) == (Fraction(125, 105), Fraction(136, 105))
          and PRINTED_DET_AT_ZERO == (Fraction(115, 105), Fraction(136, 105)))
    acceptance(7, ok, f"det(1/2) = 22i/7, properties (1)-(6) hold, endpoint (125+136i)/105 "
                      f"(printed 115 differs), certified Re lower bound {cert.lower_bound:.4g}")


def test_08_phi1(acceptance, dpath):
    phi1 = rotation_angle_phi1(dpath)
    oracle = math.pi - 2 * math.atan2(136, 125)
    doubled = rotation_angle(dpath.direct ** 2)
    ok = (math.pi / 4 < phi1 < math.pi / 2 and abs(phi1 - oracle) <= 1e-9 and math.pi / 2 < doubled < math.pi
          and abs(arc_rotation(dpath.direct[0], dpath.direct[-1]) - phi1) <= 1e-9)
    acceptance(8, ok, f"phi1 = {phi1:.12f}, oracle {oracle:.12f}, 2 phi1 = {doubled:.9f}")


def test_09_potential_difference(acceptance, dpath):
    pd = maslov_potential_difference(dpath.direct)
    residual = abs(2 * float(pd.value) - round(2 * float(pd.value)))
    acceptance(9, pd.value == Fraction(1, 2) and residual <= 1e-6,
               f"Maslov potential difference {pd.value} (det^2 turns {pd.turns:.6f})")


def test_10_loops(acceptance, model, model_census, frames, dpath, spun):
    prof = HandleProfile.default()
    norm = normalize_double_point(model_census[0], model)
    meridian = maslov_index_loop(meridian_frames(prof, 0.0, norm))
    circle = maslov_index_loop(parameter_loop(spun.map, UnitaryFrame(2), (0.0, 3.5, 0.3), 0))
    k2 = maslov_index_loop(parameter_loop(spun.map, UnitaryFrame(2), (0.0, 7.0, 0.0), 2))
    loop = maslov_index_loop(surgery_loop(frames.Z, prof, norm))
    phi1, phi2 = rotation_angle_phi1(dpath), handle_rotation_angle(prof, norm)
    ok = (meridian == 0 and circle == 0 and k2 == 0 and loop == 1 == surgery_loop_index(phi1, phi2)
          and abs(2 * phi1 + phi2 - TWO_PI) <= 1e-6 * TWO_PI and -TWO_PI < phi2 < TWO_PI)
    acceptance(10, ok, f"indices meridian {meridian}, spun circle {circle}, K2 loop {k2}, "
                       f"surgery loop {loop}; phi2 = {phi2:.9f}")


def test_11_spun_filling(acceptance, spun):
    r = pullback_2form_residual(spun.map, SymplectizationForm(2), 50)
    torus = spun.boundary_torus()
    rb = pullback_1form_residual(torus, ContactForm(2), 200)
    census = pairwise_census(torus, grid=100)
    acceptance(11, r <= 1e-10 and rb <= 1e-10 and census == [] and spun.shift == 4.0,
               f"spun residual {r:.3g}, boundary residual {rb:.3g}, {len(census)} boundary double points")


def test_12_bookkeeping(acceptance):
    out = bookkeeping_resolve(glue_along_circle(disk(), cylinder()), 1, True)
    sig = (out.euler_characteristic, out.orientable, out.boundary_components)
    acceptance(12, sig == (-1, False, 1) and out.classification_name() == "Klein bottle minus a disk",
               f"resolved surface {sig}: {out.classification_name()}")


def test_13_property_suite(acceptance):
    ctx = _Context(RunConfig(diagnostics=False))
    results = property_suite(ctx, np.random.default_rng(7), 100)
    fails = {k: v["failures"] for k, v in results.items()}
    acceptance(13, len(fails) == 4 and not any(fails.values()), f"property suite failures {fails} over 100 trials each")
