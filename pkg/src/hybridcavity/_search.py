"""Derivative-free 1-D minimisation helpers."""

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section(f, a, b, xtol):
    """Minimise a unimodal ``f`` on ``[a, b]``.

    Returns ``(x_min, f_min)``. The bracket shrinks until it is narrower
    than ``xtol`` (absolute).
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= xtol:
        x = 0.5 * (a + b)
        return x, f(x)
    n = int(math.ceil(math.log(xtol / h) / math.log(INV_PHI)))
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(n - 1):
        h *= INV_PHI
        if fc < fd:
            b, d, fd = d, c, fc
            c = a + INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * h
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def grid_bracket(values):
    """Index triple ``(lo, best, hi)`` around the minimum of a sampled sequence."""
    best = min(range(len(values)), key=values.__getitem__)
    return max(best - 1, 0), best, min(best + 1, len(values) - 1)
