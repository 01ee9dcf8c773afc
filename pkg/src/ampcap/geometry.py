"""Input constraint sets, channel matrices and their geometric functionals."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    BudgetError,
    DimensionError,
    DomainError,
    RankDeficiencyError,
)
from .specialfn import log_ball_volume

# exact r_max over a box enumerates 2^(n-1) sign patterns
VERTEX_BUDGET_DIM = 24
RANK_RTOL = 1e-12
ORTHO_TOL = 1e-10


def _as_halfwidths(a):
    arr = np.array(a, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError("box needs at least one halfwidth")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("halfwidths must be finite and >= 0")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box {x : |x_i| <= a_i}."""

    halfwidths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "halfwidths", _as_halfwidths(self.halfwidths))

    @property
    def dim(self):
        return self.halfwidths.size

    def scaled(self, c):
        return Box(self.halfwidths * float(c))

    def contains(self, x, atol=1e-12):
        x = np.atleast_2d(x)
        return np.all(np.abs(x) <= self.halfwidths + atol, axis=-1)

    def sample(self, n, rng):
        u = rng.uniform(-1.0, 1.0, size=(n, self.dim))
        return u * self.halfwidths

    def describe(self):
        return "box(" + ",".join(f"{v:g}" for v in self.halfwidths) + ")"


@dataclass(frozen=True)
class Ball:
    """Centered Euclidean ball of radius ``radius`` in ``dim`` dimensions."""

    radius: float
    dim: int

    def __post_init__(self):
        r = float(self.radius)
        if not (r >= 0 and math.isfinite(r)):
            raise DomainError(f"ball radius must be finite and >= 0, got {r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"ball dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "dim", int(self.dim))

    def scaled(self, c):
        return Ball(self.radius * float(c), self.dim)

    def contains(self, x, atol=1e-12):
        x = np.atleast_2d(x)
        return np.linalg.norm(x, axis=-1) <= self.radius + atol

    def sample(self, n, rng):
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / self.dim)
        return g * rad

    def describe(self):
        return f"ball({self.radius:g};n={self.dim})"


InputSpace = Box | Ball


class ChannelMatrix:
    """Immutable real channel matrix with a cached, sign-normalized SVD.

    Singular values are nonincreasing; each right singular vector is flipped
    so that its first nonzero entry is positive (the matching left vector is
    flipped with it).
    """

    def __init__(self, entries):
        h = np.array(entries, dtype=float)
        if h.ndim == 1:
            h = h.reshape(1, -1)
        if h.ndim != 2 or h.size == 0:
            raise DimensionError(f"channel must be a nonempty matrix, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise DomainError("channel entries must be finite")
        h.setflags(write=False)
        self._h = h

    @classmethod
    def from_rows(cls, text):
        """Parse ``"0.3,0;0,0.1"`` (rows separated by ``;``)."""
        rows = [r for r in text.strip().split(";") if r.strip()]
        try:
            data = [[float(v) for v in r.split(",")] for r in rows]
        except ValueError as exc:
            raise DomainError(f"bad matrix literal {text!r}: {exc}") from None
        if len({len(r) for r in data}) != 1:
            raise DimensionError(f"ragged matrix literal {text!r}")
        return cls(data)

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            data = []
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    data.append([float(v) for v in row])
                except ValueError:
                    raise DomainError(f"{path}:{lineno}: non-numeric entry in {row}") from None
        if not data or len({len(r) for r in data}) != 1:
            raise DimensionError(f"{path}: empty or ragged matrix")
        return cls(data)

    @property
    def entries(self):
        return self._h

    @property
    def shape(self):
        return self._h.shape

    @property
    def n_r(self):
        return self._h.shape[0]

    @property
    def n_t(self):
        return self._h.shape[1]

    @property
    def n_min(self):
        return min(self._h.shape)

    @cached_property
    def svd(self):
        """``(U, sigma, V)`` with ``H = U[:, :k] diag(sigma) V[:, :k].T``."""
        u, s, vt = np.linalg.svd(self._h, full_matrices=True)
        v = vt.T.copy()
        u = u.copy()
        for j in range(v.shape[1]):
            nz = np.flatnonzero(np.abs(v[:, j]) > 1e-14)
            if nz.size and v[nz[0], j] < 0:
                v[:, j] *= -1.0
                if j < u.shape[1]:
                    u[:, j] *= -1.0
        for arr in (u, s, v):
            arr.setflags(write=False)
        return u, s, v

    @property
    def singular_values(self):
        return self.svd[1]

    @property
    def spectral_norm(self):
        s = self.singular_values
        return float(s[0]) if s.size else 0.0

    @cached_property
    def rank(self):
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > RANK_RTOL * s[0]))

    def is_diagonal(self):
        h = self._h
        return h.shape[0] == h.shape[1] and np.count_nonzero(h - np.diag(np.diag(h))) == 0

    def abs_det(self):
        if self.n_r != self.n_t:
            raise DimensionError("determinant needs a square channel")
        return float(np.prod(self.singular_values))

    def __matmul__(self, other):
        return self._h @ other

    def __repr__(self):
        return f"ChannelMatrix({self._h.tolist()!r})"


def as_channel(h):
    return h if isinstance(h, ChannelMatrix) else ChannelMatrix(h)


def _check_compat(h, space):
    if h.n_t != space.dim:
        raise DimensionError(
            f"channel has {h.n_t} inputs but the input space has dimension {space.dim}"
        )


def r_max_image(H, X):
    """Radius of the smallest centered ball containing ``H X``.

    Exact for both space types: spectral norm times radius for a ball, and
    a maximum over the box vertices (a convex function peaks at an extreme
    point) for a box.
    """
    H = as_channel(H)
    _check_compat(H, X)
    if isinstance(X, Ball):
        return H.spectral_norm * X.radius

    a = X.halfwidths
    active = np.flatnonzero(a > 0)
    if active.size == 0:
        return 0.0
    if active.size > VERTEX_BUDGET_DIM:
        relax = H.spectral_norm * float(np.linalg.norm(a))
        raise BudgetError(
            f"exact r_max needs 2^{active.size - 1} vertices (budget 2^{VERTEX_BUDGET_DIM - 1}); "
            f"ball relaxation r_max(H B(|a|)) = {relax:.6g} is available instead"
        )
    cols = H.entries[:, active] * a[active]
    m = active.size
    # first coordinate fixed to +1: -v gives the same norm
    first = cols[:, 0]
    rest = cols[:, 1:]
    best = 0.0
    n_rest = m - 1
    block = 1 << min(n_rest, 16)
    bits = np.arange(block, dtype=np.int64)
    for start in range(0, 1 << n_rest, block):
        idx = bits + start
        signs = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n_rest)) & 1) if n_rest else np.zeros((1, 0))
        img = signs @ rest.T + first
        best = max(best, float(np.max(np.einsum("ij,ij->i", img, img))))
    return math.sqrt(best)


def r_min(X):
    """Radius of the largest centered ball inside ``X``."""
    if isinstance(X, Ball):
        return X.radius
    return float(np.min(X.halfwidths))


def enclosing_box_of_image(H, X):
    """Halfwidths of the smallest axis-aligned box containing ``H X``.

    Per coordinate this is the support function of X along that row:
    ``sum_j |h_ij| a_j`` for a box, ``A * ||row_i||`` for a ball.
    """
    H = as_channel(H)
    _check_compat(H, X)
    if isinstance(X, Ball):
        return X.radius * np.linalg.norm(H.entries, axis=1)
    return np.abs(H.entries) @ X.halfwidths


def image_box_maximizers(H, X):
    """Inputs attaining each half-width of ``enclosing_box_of_image``.

    Row ``i`` of the result is an ``x`` in ``X`` with ``(H x)_i`` equal to the
    i-th half-width.
    """
    H = as_channel(H)
    _check_compat(H, X)
    h = H.entries
    if isinstance(X, Ball):
        norms = np.linalg.norm(h, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(norms > 0, h / norms, 0.0)
        return out * X.radius
    return np.sign(h) * X.halfwidths


def log_volume(X):
    if isinstance(X, Ball):
        return log_ball_volume(X.dim, X.radius)
    a = X.halfwidths
    if np.any(a == 0):
        return -math.inf
    return float(np.sum(np.log(2.0 * a)))


def volume(X):
    """Lebesgue volume of the input space."""
    return math.exp(log_volume(X))


@dataclass(frozen=True)
class PackingEfficiency:
    """Packing efficiency of ``H X``.

    ``exact`` uses the exact covering radius and the true image volume;
    ``estimate`` is the closed-form ceiling of ``paper_box_packing_estimate``
    (boxes only, ``None`` for balls).
    """

    exact: float
    estimate: float | None

    @property
    def log2_exact(self):
        return math.log2(self.exact) if self.exact > 0 else -math.inf


def _check_invertible(H):
    if H.n_r != H.n_t:
        raise RankDeficiencyError("packing efficiency needs a square channel")
    s = H.singular_values
    n = H.n_r
    if s[0] == 0 or float(np.prod(s)) <= 1e-12 * s[0] ** n:
        raise RankDeficiencyError("channel matrix is (numerically) singular")


def packing_efficiency(H, X):
    """Volume of the covering ball of ``H X`` divided by the volume of ``H X``.

    Scale invariant in ``X``. A space of zero volume with nonzero extent has
    infinite efficiency; the all-zero space is assigned the efficiency of its
    unit-scale shape.
    """
    H = as_channel(H)
    _check_compat(H, X)
    _check_invertible(H)
    n = H.n_r
    log_det = float(np.sum(np.log(H.singular_values)))

    if isinstance(X, Ball):
        log_rho = n * math.log(H.spectral_norm) - log_det
        return PackingEfficiency(math.exp(log_rho), None)

    a = X.halfwidths
    if np.all(a == 0):
        X = Box(np.ones_like(a))
        a = X.halfwidths
    if np.any(a == 0):
        return PackingEfficiency(math.inf, math.inf)

    def ratio(radius):
        return math.exp(log_ball_volume(n, radius) - log_det - log_volume(X))

    return PackingEfficiency(ratio(r_max_image(H, X)), paper_box_packing_estimate(H, a))


def paper_box_packing_estimate(H, a):
    """``(pi^{n/2}/Gamma(n/2+1)) ||H||^n ||a||^n / (|det H| prod a_i)``.

    Note the denominator uses ``prod a_i`` rather than the box volume
    ``prod 2 a_i``; kept verbatim for comparison with reference numbers.
    """
    H = as_channel(H)
    a = _as_halfwidths(a)
    n = a.size
    return math.exp(
        log_ball_volume(n, H.spectral_norm * float(np.linalg.norm(a)))
        - float(np.sum(np.log(H.singular_values)))
        - float(np.sum(np.log(a)))
    )


def check_orthogonal(V, tol=ORTHO_TOL):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise DimensionError("expected a square matrix")
    err = np.max(np.abs(V.T @ V - np.eye(V.shape[0])))
    if err > tol:
        raise DomainError(f"matrix is not orthogonal (max |V^T V - I| = {err:.3g})")
    return V


class PrecodedUniformSampler:
    """Draws ``x = V x~`` with ``x~`` uniform on ``Box(a)``.

    Iterating yields single vectors; ``draw(n)`` returns an ``(n, n_t)`` batch.
    A sampler is a single-consumer stream fixed by its seed.
    """

    def __init__(self, V, a, seed):
        self.V = check_orthogonal(V)
        self.a = _as_halfwidths(a)
        if self.a.size != self.V.shape[0]:
            raise DimensionError("halfwidths and precoder sizes differ")
        self.rng = np.random.default_rng(seed)

    def draw(self, n):
        xt = self.rng.uniform(-1.0, 1.0, size=(n, self.a.size)) * self.a
        return xt @ self.V.T

    def __iter__(self):
        return self

    def __next__(self):
        return self.draw(1)[0]


def precoded_uniform_sampler(V, a, seed):
    return PrecodedUniformSampler(V, a, seed)
