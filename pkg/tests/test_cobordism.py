import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lagfill.cobordism import (CutoffFunction, DoublePoint, coordinate_sign, double_point_census,
                               front_homotopy, immersion_map, legendrian_lift, pairwise_census,
                               perturbed_immersion, self_intersection_sign, smooth_step,
                               tangency_time, trace_map, trace_residual_closed_form,
                               transversality_margin)
from lagfill.errors import CensusError
from lagfill.geometry import (Circle, ContactForm, SymplectizationForm, finite_difference_error,
                              pullback_1form_residual, pullback_2form_residual)
from lagfill.legendrian import make_K1, make_K2

CUTOFFS = [CutoffFunction("identity", 7), CutoffFunction("smooth-plateau", 7)]


def test_smooth_step_shape():
    s = np.array([-1.0, 0.0, 1 / 3, 0.5, 2 / 3, 1.0, 2.0])
    assert smooth_step(s, 1 / 3, 2 / 3) == pytest.approx([0, 0, 0, 0.5, 1, 1, 1], abs=1e-15)
    # slope 2 at the midpoint of a unit-width step, hence 6 on a step of width 1/3
    assert smooth_step(0.5, 1 / 3, 2 / 3, 1) == pytest.approx(6.0, rel=1e-14)
    u = np.linspace(0, 1, 20001)
    assert smooth_step(u, 1 / 3, 2 / 3, 1).max() == pytest.approx(6.0, rel=1e-12)
    assert np.all(np.diff(smooth_step(u, 1 / 3, 2 / 3)) >= 0)


@given(st.floats(0.34, 0.66))
def test_smooth_step_derivatives(s):
    h = 1e-6
    for order in (0, 1):
        fd = (smooth_step(s + h, 1 / 3, 2 / 3, order) - smooth_step(s - h, 1 / 3, 2 / 3, order)) / (2 * h)
        exact = smooth_step(s, 1 / 3, 2 / 3, order + 1)
        assert fd == pytest.approx(exact, rel=1e-5, abs=1e-5)


def test_cutoff_validation():
    with pytest.raises(ValueError):
        CutoffFunction("cubic", 7)
    with pytest.raises(ValueError):
        CutoffFunction("identity", 0)
    c = CutoffFunction("smooth-plateau", 9)
    assert c(0.0) == 0 and c(9.0) == 1 and c.collar_width == 3
    assert CutoffFunction("identity", 9).collar_width is None


@pytest.mark.parametrize("n", [3, 7, 10.5])
def test_tangency_time(n):
    assert tangency_time(CutoffFunction("identity", n)) == pytest.approx(5 * n / 7, rel=1e-14)
    c = CutoffFunction("smooth-plateau", n)
    T = tangency_time(c)
    assert abs(float(c(T)) - 5 / 7) <= 1e-12
    k = front_homotopy(c)
    for th in (0.0, math.pi):
        assert np.linalg.norm(k(T, th)) <= 1e-10


@pytest.mark.parametrize("c", CUTOFFS, ids=lambda c: c.variant)
def test_lift_is_legendrian_and_joins_the_knots(c):
    f = legendrian_lift(c)
    th = Circle().sample(2000)
    for t in np.linspace(0, 7, 15):
        assert pullback_1form_residual(f.restrict(0, t), ContactForm(1), 2000) <= 1e-10
    assert np.allclose(f(np.zeros_like(th), th), make_K1()(th), atol=1e-14)
    assert np.allclose(f(np.full_like(th, 7.0), th), make_K2()(th), atol=1e-14)
    front = front_homotopy(c)
    assert np.allclose(front(np.full_like(th, 7.0), th), make_K2()(th)[:, [0, 2]], atol=1e-14)


@pytest.mark.parametrize("c", CUTOFFS, ids=lambda c: c.variant)
def test_trace_is_not_lagrangian_and_matches_the_closed_form(c):
    numeric = pullback_2form_residual(trace_map(c), SymplectizationForm(1), 200)
    closed = trace_residual_closed_form(c, 200)
    assert numeric == pytest.approx(closed, rel=1e-10)
    assert closed > 1.0


@pytest.mark.parametrize("c", CUTOFFS, ids=lambda c: c.variant)
def test_immersion_is_lagrangian(c):
    m = immersion_map(c)
    assert pullback_2form_residual(m, SymplectizationForm(1), 300) <= 1e-10
    rng = np.random.default_rng(11)
    params = [rng.uniform(0.01, 6.99, 400), rng.uniform(0, 2 * math.pi, 400)]
    assert finite_difference_error(m, params) < 1e-6


def test_product_collars():
    surf = perturbed_immersion(CutoffFunction("smooth-plateau", 7), validate=False)
    assert surf.collar_error() <= 1e-14
    with pytest.raises(ValueError):
        perturbed_immersion(CutoffFunction("identity", 7), validate=False).collar_error()


def test_model_double_point(model, model_census):
    assert len(model_census) == 1
    dp = model_census[0]
    assert (dp.t, dp.theta1, dp.theta2) == pytest.approx((4.0, 0.0, math.pi), abs=1e-12)
    assert dp.image == pytest.approx((4.0, 0.0, 0.0, 0.0), abs=1e-12)
    # smallest singular value of the stacked sheet frames, 2 sqrt(2) / 15
    assert dp.margin == pytest.approx(2 * math.sqrt(2) / 15, rel=1e-12)
    assert dp.sign == -1
    assert self_intersection_sign(dp, model, swap=True) == -1
    # omega^2 = 2 e^{2t} dt dz dx dy orders like dt dx dy dz, so both routes agree
    assert coordinate_sign(dp, model) == coordinate_sign(dp, model, swap=True) == -1


def test_sign_refuses_tangential_points(model):
    dp = DoublePoint(4.0, 0.0, math.pi, (4.0, 0, 0, 0), 0, 1e-9, 0.0)
    with pytest.raises(ValueError):
        self_intersection_sign(dp, model)


@pytest.mark.parametrize("n", [3, 5, 10])
def test_identity_census_location_scales_with_n(n):
    # the z-perturbation (rho + rho') g vanishes with y at (t + 1) / n = 5/7
    census = double_point_census(perturbed_immersion(CutoffFunction("identity", n), validate=False))
    assert len(census) == 1
    assert census[0].t == pytest.approx(5 * n / 7 - 1, abs=1e-10)
    assert census[0].sign == -1


def test_trace_double_point_at_the_tangency():
    census = double_point_census(trace_map(CutoffFunction("identity", 7)))
    assert len(census) == 1
    assert census[0].t == pytest.approx(5.0, abs=1e-10)


def test_short_smooth_cutoff_has_extra_double_points():
    c = CutoffFunction("smooth-plateau", 7)
    with pytest.raises(CensusError) as err:
        perturbed_immersion(c)
    census = err.value.census
    assert len(census) == 3
    # the algebraic count is that of the single model point
    assert sorted(d.sign for d in census) == [-1, -1, 1]


def test_long_smooth_cutoff_has_one_double_point():
    surf = perturbed_immersion(CutoffFunction("smooth-plateau", 20))
    (dp,) = double_point_census(surf)
    assert dp.sign == -1


@pytest.mark.parametrize("c", CUTOFFS, ids=lambda c: c.variant)
def test_generic_census_agrees(c):
    surf = perturbed_immersion(c, validate=False)
    special = double_point_census(surf)
    generic = pairwise_census(surf.map, grid=100)
    assert len(generic) == len(special)
    for d in special:
        hits = [g for g in generic if abs(g[0][0] - d.t) < 1e-8
                and {round(g[0][1], 8), round(g[1][1], 8)} == {round(d.theta1, 8), round(d.theta2, 8)}]
        assert len(hits) == 1
