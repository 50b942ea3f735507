import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lagfill.errors import UnwrapError
from lagfill.winding import trace_argument, unwrap_samples, winding_number


@given(st.integers(-5, 5), st.floats(0.2, 3.0))
def test_circle_winding(k, r):
    s = np.linspace(0, 1, 2001)
    trace = unwrap_samples(s, r * np.exp(2j * math.pi * k * s))
    assert trace.winding == pytest.approx(k, abs=1e-12)


def test_refinement_handles_fast_paths():
    trace = trace_argument(lambda s: np.exp(40j * math.pi * s), n=11)
    assert trace.winding == pytest.approx(20, abs=1e-12)
    assert trace.max_increment < math.pi / 2


def test_vanishing_path_is_rejected():
    with pytest.raises(UnwrapError):
        trace_argument(lambda s: s - 0.5 + 0j, n=101)


def test_coarse_samples_are_rejected():
    s = np.linspace(0, 1, 5)
    with pytest.raises(UnwrapError):
        unwrap_samples(s, np.exp(4j * math.pi * s))


def test_returns_to_initial_angle():
    s = np.linspace(0, 1, 1001)
    assert unwrap_samples(s, np.exp(2j * math.pi * 2.3 * s)).returns_to_initial_angle() == 2
    assert unwrap_samples(s, np.exp(1j * s)).returns_to_initial_angle() == 0


@given(st.floats(0.05, 0.95), st.floats(-3, 3), st.floats(-3, 3))
def test_concatenation_is_additive(cut, a, b):
    s = np.linspace(0, 1, 4001)
    z = np.exp(1j * (a * s + b * s ** 2)) * (2 + np.sin(5 * s))
    i = int(cut * (len(s) - 1))
    whole = unwrap_samples(s, z).total_rotation
    parts = unwrap_samples(s[:i + 1], z[:i + 1]).total_rotation + unwrap_samples(s[i:], z[i:]).total_rotation
    assert parts == pytest.approx(whole, abs=1e-9)


def test_planar_winding_number():
    th = np.linspace(0, 2 * math.pi, 500, endpoint=False)
    assert winding_number(np.cos(3 * th), -np.sin(3 * th)) == pytest.approx(-3)
