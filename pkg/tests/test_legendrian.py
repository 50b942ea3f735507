import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from lagfill.cobordism import CutoffFunction, perturbed_immersion
from lagfill.errors import UnwrapError
from lagfill.geometry import (Circle, ContactForm, ParametricMap, SymplectizationForm,
                              finite_difference_error, periodicity_error, pullback_1form_residual,
                              pullback_2form_residual, stack)
from lagfill.legendrian import (LegendrianCurve, cusp_rotation_number, cusp_tangent_defect,
                                fourier_legendrian, front_project, make_K1, make_K2,
                                rotation_number, spin, z_extremum_count)


@pytest.mark.parametrize("make", [make_K1, make_K2])
def test_unknots_are_legendrian_and_embedded(make):
    k = make()
    assert k.residual <= 1e-10
    assert k.embedding_gap > 0.05
    th = Circle().sample(500)
    assert finite_difference_error(k.map, [th]) < 1e-8
    assert periodicity_error(k.map, [th]) < 1e-12


@pytest.mark.parametrize("make", [make_K1, make_K2])
def test_cusps_of_the_unknots(make):
    k = make()
    front = front_project(k)
    assert [round(c.theta, 12) for c in front.cusps] == [round(math.pi / 2, 12), round(3 * math.pi / 2, 12)]
    assert [c.direction for c in front.cusps] == ["down", "up"]
    assert front.degenerate == []
    assert cusp_tangent_defect(k, front) < 1e-12
    assert rotation_number(k) == 0 == cusp_rotation_number(front)


def test_stabilization_adds_z_extrema():
    # z' = -2 c^2 s for K1 and 4 c^2 s (2 c^2 - 1) for K2
    assert z_extremum_count(make_K1()) == 2
    assert z_extremum_count(make_K2()) == 6


def test_fourier_builder_reproduces_K1():
    # x = sin t, y = -sin 2t
    k = fourier_legendrian({1: -0.5j}, {2: 0.5j}, "K1 again")
    th = Circle().sample(400)
    assert np.allclose(k(th), make_K1()(th), atol=1e-14)


def test_fourier_builder_rejects_open_z():
    with pytest.raises(ValueError):
        fourier_legendrian({1: 0.5}, {1: 0.5j})


def test_negative_control_front():
    # K1 with x perturbed by sin(2t)/2; z is re-integrated so the curve stays Legendrian.
    # The cusp count is unchanged but the cusps move, and x' gains a double zero at pi.
    def fn(t):
        c = np.cos(t)
        return stack(np.sin(t) + 0.5 * np.sin(2 * t), -np.sin(2 * t), 2 / 3 * c ** 3 + np.cos(4 * t) / 8)

    def dfn(t):
        return stack(np.cos(t) + np.cos(2 * t), -2 * np.cos(2 * t),
                     -2 * np.cos(t) ** 2 * np.sin(t) - np.sin(4 * t) / 2)

    curve = LegendrianCurve(ParametricMap((Circle(),), 3, fn, (dfn,), "control"), "control")
    assert curve.residual <= 1e-10
    front = front_project(curve)
    assert [c.theta for c in front.cusps] == pytest.approx([math.pi / 3, 5 * math.pi / 3], abs=1e-12)
    assert front.degenerate == pytest.approx([math.pi], abs=1e-6)


def _random_legendrian(xs, ys):
    X = {k + 1: complex(a, b) for k, (a, b) in enumerate(xs)}
    Y = {k + 1: complex(a, b) for k, (a, b) in enumerate(ys)}
    # cancel the mean of y x' through the k = 1 coefficient of y
    mean = sum(2 * ((Y[k].conjugate() * 1j * k * X[k]).real) for k in X if k in Y)
    X1 = X[1]
    Y[1] = Y[1] - mean / 2 * (1j * X1) / abs(X1) ** 2
    return fourier_legendrian(X, Y)


pairs = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=3, max_size=3)


@settings(max_examples=40)
@given(pairs, pairs)
def test_rotation_number_equals_half_signed_cusp_count(xs, ys):
    assume(abs(complex(*xs[0])) > 0.2)
    k = _random_legendrian(xs, ys)
    assert k.residual <= 1e-10
    front = front_project(k)
    assume(not front.degenerate)
    try:
        r = rotation_number(k)
    except UnwrapError:
        assume(False)
    assert cusp_rotation_number(front) == r


def test_spin_of_the_filling():
    base = perturbed_immersion(CutoffFunction("smooth-plateau", 7), validate=False)
    sp = spin(base, 4.0)
    assert sp.boundary_is_loose and "metadata" in sp.looseness_source
    assert pullback_2form_residual(sp.map, SymplectizationForm(2), 30) <= 1e-10
    torus = sp.boundary_torus()
    assert pullback_1form_residual(torus, ContactForm(2), 100) <= 1e-10
    rng = np.random.default_rng(3)
    params = [rng.uniform(0, 2 * math.pi, 50), rng.uniform(0.1, 6.9, 50), rng.uniform(0, 2 * math.pi, 50)]
    assert finite_difference_error(sp.map, params) < 1e-6
    # the boundary torus is the spun K2, at radius x + shift
    th, ph = 0.7, 1.9
    k2 = make_K2()(ph)
    assert np.allclose(torus(th, ph), [(k2[0] + 4) * math.cos(th), k2[1] * math.cos(th),
                                       (k2[0] + 4) * math.sin(th), k2[1] * math.sin(th), k2[2]])


def test_spin_needs_positive_x():
    base = perturbed_immersion(CutoffFunction("identity", 7), validate=False)
    with pytest.raises(ValueError):
        spin(base, 0.5)
    with pytest.raises(ValueError):
        spin(base, -1.0)
