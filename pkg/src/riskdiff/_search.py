"""One-dimensional search helpers: golden-section refinement and
sign-change bisection.  Deterministic, derivative-free."""

from __future__ import annotations

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0          # 1/phi
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0         # 1/phi^2


def golden_section_max(f, lo: float, hi: float, tol: float,
                       max_iter: int = 200):
    """Locate the maximiser of a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x))``.  The interval is shrunk until its width falls
    below ``tol`` (or ``max_iter`` iterations, whichever comes first);
    the best evaluated point is returned, with the endpoints included in
    the comparison.
    """
    a, b = float(lo), float(hi)
    if b < a:
        a, b = b, a
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = f(c)
    fd = f(d)
    for _ in range(max_iter):
        if h <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INVPHI * h
            fd = f(d)
    candidates = [(fc, c), (fd, d)]
    fa, fb = f(a), f(b)
    candidates += [(fa, a), (fb, b)]
    best_f, best_x = max(candidates, key=lambda t: t[0])
    return best_x, best_f


def bisect_sign_change(f, lo: float, hi: float, xtol: float,
                       max_iter: int = 200) -> float:
    """Root of ``f`` on a bracket where ``f(lo)`` and ``f(hi)`` differ in
    sign, by plain bisection to a width of ``xtol``."""
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise ValueError("bisect_sign_change requires a sign change")
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return 0.5 * (a + b)
