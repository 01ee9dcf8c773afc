"""Input distributions, PAM constellations and dither specifications."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DimensionError, DomainError
from .geometry import check_orthogonal


@dataclass(frozen=True)
class PamConstellation:
    """``points`` equispaced symbols on ``[-amplitude, amplitude]``.

    A single-point constellation sits at the origin and has zero spacing.
    """

    points: int
    amplitude: float

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 1:
            raise DomainError(f"PAM needs at least one point, got {self.points}")
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise DomainError(f"PAM amplitude must be finite and >= 0, got {self.amplitude}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def half_spacing(self):
        if self.points == 1:
            return 0.0
        return self.amplitude / (self.points - 1)

    def symbols(self):
        if self.points == 1:
            return np.zeros(1)
        return np.linspace(-self.amplitude, self.amplitude, self.points)

    @property
    def entropy_bits(self):
        return math.log2(self.points)


@dataclass(frozen=True, eq=False)
class DitherSpec:
    """Uniform dither on ``prod [-halfwidth_i, halfwidth_i)``."""

    halfwidths: np.ndarray

    def __post_init__(self):
        hw = np.array(self.halfwidths, dtype=float).ravel()
        if not np.all(np.isfinite(hw)) or np.any(hw < 0):
            raise DomainError("dither halfwidths must be finite and >= 0")
        hw.setflags(write=False)
        object.__setattr__(self, "halfwidths", hw)

    @property
    def dim(self):
        return self.halfwidths.size

    def sample(self, n, rng):
        return rng.uniform(-1.0, 1.0, size=(n, self.dim)) * self.halfwidths

    def entropy_bits(self):
        """Differential entropy in bits (``-inf`` for a degenerate dither)."""
        if np.any(self.halfwidths == 0):
            return -math.inf
        return float(np.sum(np.log2(2.0 * self.halfwidths)))


class InputDistribution:
    """Base class: a sampleable law on R^dim.

    Discrete laws also expose ``support()`` and ``pmf()``. ``symmetric`` is
    True when ``-X`` has the same law as ``X``.
    """

    dim: int
    discrete = False
    symmetric = True

    def sample(self, n, rng):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class UniformBox(InputDistribution):
    halfwidths: np.ndarray

    def __post_init__(self):
        hw = np.array(self.halfwidths, dtype=float).ravel()
        if not np.all(np.isfinite(hw)) or np.any(hw < 0):
            raise DomainError("halfwidths must be finite and >= 0")
        hw.setflags(write=False)
        object.__setattr__(self, "halfwidths", hw)

    @property
    def dim(self):
        return self.halfwidths.size

    def sample(self, n, rng):
        return rng.uniform(-1.0, 1.0, size=(n, self.dim)) * self.halfwidths


@dataclass(frozen=True, eq=False)
class PrecodedUniform(InputDistribution):
    """``X = V X~`` with ``X~`` uniform on ``Box(a)`` and independent components."""

    V: np.ndarray
    halfwidths: np.ndarray

    def __post_init__(self):
        V = check_orthogonal(self.V).copy()
        hw = np.array(self.halfwidths, dtype=float).ravel()
        if hw.size != V.shape[0]:
            raise DimensionError("precoder and halfwidth sizes differ")
        if not np.all(np.isfinite(hw)) or np.any(hw < 0):
            raise DomainError("halfwidths must be finite and >= 0")
        V.setflags(write=False)
        hw.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "halfwidths", hw)

    @property
    def dim(self):
        return self.halfwidths.size

    def sample(self, n, rng):
        xt = rng.uniform(-1.0, 1.0, size=(n, self.dim)) * self.halfwidths
        return xt @ self.V.T


class PointMass(InputDistribution):
    discrete = True

    def __init__(self, x):
        x = np.array(x, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise DomainError("point mass location must be finite")
        x.setflags(write=False)
        self.x = x
        self.dim = x.size
        self.symmetric = bool(np.all(x == 0))

    def support(self):
        return self.x[None, :]

    def pmf(self):
        return np.ones(1)

    def entropy_bits(self):
        return 0.0

    def sample(self, n, rng):
        return np.broadcast_to(self.x, (n, self.dim)).copy()


class PamProduct(InputDistribution):
    """Independent uniform PAM symbols, one constellation per input."""

    discrete = True

    def __init__(self, constellations):
        self.constellations = tuple(constellations)
        if not self.constellations:
            raise DomainError("PAM product needs at least one constellation")
        self.dim = len(self.constellations)

    @property
    def size(self):
        return math.prod(c.points for c in self.constellations)

    def support(self):
        axes = [c.symbols() for c in self.constellations]
        return np.array(list(product(*axes)), dtype=float).reshape(-1, self.dim)

    def pmf(self):
        return np.full(self.size, 1.0 / self.size)

    def entropy_bits(self):
        return float(sum(c.entropy_bits for c in self.constellations))

    def min_spacing(self):
        """Per-dimension minimum distance between distinct symbols (inf if single)."""
        return np.array(
            [2.0 * c.half_spacing if c.points > 1 else math.inf for c in self.constellations]
        )

    def sample(self, n, rng):
        cols = []
        for c in self.constellations:
            idx = rng.integers(0, c.points, size=n)
            cols.append(c.symbols()[idx])
        return np.column_stack(cols)


class FiniteDiscrete(InputDistribution):
    """Arbitrary finite-support law given by points and probabilities."""

    discrete = True

    def __init__(self, points, probs=None):
        pts = np.atleast_2d(np.array(points, dtype=float))
        if probs is None:
            probs = np.full(pts.shape[0], 1.0 / pts.shape[0])
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (pts.shape[0],) or np.any(probs < 0):
            raise DomainError("probabilities must be nonnegative, one per point")
        if not math.isclose(probs.sum(), 1.0, rel_tol=1e-9):
            raise DomainError("probabilities must sum to one")
        self.points = pts
        self.probs = probs
        self.dim = pts.shape[1]
        self.symmetric = False

    def support(self):
        return self.points

    def pmf(self):
        return self.probs

    def entropy_bits(self):
        p = self.probs[self.probs > 0]
        return float(-np.sum(p * np.log2(p)))

    def sample(self, n, rng):
        idx = rng.choice(self.points.shape[0], size=n, p=self.probs)
        return self.points[idx]
