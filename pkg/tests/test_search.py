import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sqkd.search import bisect_boundary, golden_section, scan_minimize


def test_golden_section_parabola():
    x, fx = golden_section(lambda x: (x - 0.3) ** 2 + 1.0, 0.0, 1.0)
    # a quadratic minimum only pins x to about sqrt(machine epsilon)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert fx == pytest.approx(1.0)


@given(st.floats(-2.0, 2.0), st.floats(0.1, 3.0))
def test_scan_never_worse_than_grid(c, w):
    f = lambda x: np.cos(w * 7 * np.asarray(x)) + 0.1 * (np.asarray(x) - c) ** 2
    x, fx = scan_minimize(f, -2.0, 2.0, points=401)
    grid = np.linspace(-2.0, 2.0, 401)
    assert fx <= f(grid).min() + 1e-15
    assert -2.0 <= x <= 2.0


def test_scan_finds_endpoint_minimum():
    x, fx = scan_minimize(lambda x: np.asarray(x, dtype=float), 1.0, 2.0)
    assert x == 1.0 and fx == 1.0


def test_scan_degenerate_interval():
    x, fx = scan_minimize(lambda x: np.asarray(x) ** 2, 0.5, 0.5)
    assert x == 0.5 and fx == 0.25


@given(st.floats(0.001, 0.999))
def test_bisect_boundary_brackets_step(t):
    b = bisect_boundary(lambda x: x <= t, 0.0, 1.0, 1e-6)
    assert b <= t + 1e-12
    assert t - b <= 1e-6
