"""Amplitude <-> dB conversions.

Two conventions are supported and must always be named explicitly:
``"half-range"`` maps ``dB`` to ``A = 10^(dB/10) / 2`` and ``"linear"`` maps
it to ``A = 10^(dB/10)``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

CONVENTIONS = ("half-range", "linear")


def _scale(convention):
    if convention == "half-range":
        return 0.5
    if convention == "linear":
        return 1.0
    raise DomainError(f"unknown dB convention {convention!r}; use one of {CONVENTIONS}")


def db_to_linear(db, convention):
    s = _scale(convention)
    return s * np.power(10.0, np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else (
        s * 10.0 ** (float(db) / 10.0)
    )


def linear_to_db(a, convention):
    s = _scale(convention)
    if np.ndim(a):
        return 10.0 * np.log10(np.asarray(a, dtype=float) / s)
    a = float(a)
    if a <= 0:
        return -math.inf
    return 10.0 * math.log10(a / s)


def db_grid(start, stop, step=None, points=None):
    """Evenly spaced dB grid from ``start`` to ``stop`` inclusive.

    Give either ``step`` (the count is rounded from the span) or ``points``.
    """
    if (step is None) == (points is None):
        raise DomainError("give exactly one of step or points")
    if stop < start:
        raise DomainError("dB grid needs stop >= start")
    if step is not None:
        if step <= 0:
            raise DomainError("dB step must be positive")
        points = int(round((stop - start) / step)) + 1
        if not math.isclose(start + (points - 1) * step, stop, rel_tol=1e-9, abs_tol=1e-9):
            raise DomainError("dB step does not divide the range")
    if points < 1 or (points == 1 and stop != start):
        raise DomainError("dB grid needs at least one point")
    return np.linspace(start, stop, int(points))
