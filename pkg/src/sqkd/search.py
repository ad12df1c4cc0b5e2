"""One-dimensional search helpers: scanned golden-section minimisation and
bisection on a boolean predicate."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], a: float, b: float,
                   tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def scan_minimize(f_vec: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                  points: int = 2001, tol: float = 1e-10) -> tuple[float, float]:
    """Global-ish minimum of ``f_vec`` on ``[lo, hi]``.

    A uniform scan locates the best grid cell (the objective may be bimodal),
    then golden-section refines inside the neighbouring cells. ``f_vec`` must
    accept and return numpy arrays.
    """
    if hi < lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if hi - lo <= tol:
        x = 0.5 * (lo + hi)
        return x, float(f_vec(np.array([x]))[0])
    grid = np.linspace(lo, hi, points)
    vals = f_vec(grid)
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, points - 1)]
    x, fx = golden_section(lambda t: float(f_vec(np.array([t]))[0]), a, b, tol=tol)
    # never return worse than the best grid point
    if vals[i] < fx:
        return float(grid[i]), float(vals[i])
    return float(x), float(fx)


def bisect_boundary(pred: Callable[[float], bool], lo: float, hi: float,
                    width: float) -> float:
    """Largest ``x`` in ``[lo, hi]`` with ``pred(x)`` true, to within ``width``.

    Assumes ``pred(lo)`` is true, ``pred(hi)`` is false and a single switch in
    between. Returns the last point known to satisfy the predicate.
    """
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo
