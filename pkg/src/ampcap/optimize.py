"""One-dimensional minimisation helpers."""

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section(f, a, b, tol=1e-6, max_iter=200):
    """Minimise a unimodal ``f`` on ``[a, b]``.

    Returns ``(x_min, f_min, evaluations)``; the bracket shrinks until its
    width is below ``tol``.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    evals = 2
    while h > tol and evals < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
        evals += 1
    if fc < fd:
        return c, fc, evals
    return d, fd, evals
