"""SVD reduction to parallel channels and the precoded lower bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .geometry import RANK_RTOL, Box, ChannelMatrix, as_channel
from .lower_bounds import epi_svd, jensen_bound_diag
from .results import BoundResult
from .upper_bounds import prelog_reference, upper_bound_set


@dataclass(frozen=True, eq=False)
class PrecodedChannel:
    """``H = U diag(sigmas) V^T`` with the equivalent model ``y~ = sigma x~ + z~``.

    ``sigmas`` is nonincreasing with length ``n_min``; values below
    ``1e-12 sigma_1`` are stored as exact zeros.
    """

    base: ChannelMatrix
    sigmas: np.ndarray
    V: np.ndarray
    U: np.ndarray

    @property
    def rank(self):
        return int(np.count_nonzero(self.sigmas))

    def reconstruct(self):
        k = self.sigmas.size
        return self.U[:, :k] @ np.diag(self.sigmas) @ self.V[:, :k].T


def precode(H):
    H = as_channel(H)
    u, s, v = H.svd
    s = s.copy()
    if s.size and s[0] > 0:
        s[s <= RANK_RTOL * s[0]] = 0.0
    s.setflags(write=False)
    return PrecodedChannel(H, s, v, u)


def _precoder_halfwidths(H, a):
    H = as_channel(H)
    a = np.asarray(a, dtype=float).ravel()
    if a.size != H.n_t:
        raise DimensionError("halfwidth vector must have n_t entries")
    return H, a


def jensen_svd(H, a):
    """Jensen bound for ``X = V X~`` with ``X~`` uniform on ``Box(a)``.

    The constraint is on the precoder-domain vector ``X~``; only the first
    ``n_min`` halfwidths matter.
    """
    H, a = _precoder_halfwidths(H, a)
    pc = precode(H)
    k = H.n_min
    if not np.any(pc.sigmas > 0):
        return BoundResult("jensen_svd", "lower", 0.0, {"n_min": k}, {"zero_gain": True})
    r = jensen_bound_diag(pc.sigmas, Box(a[:k]))
    return BoundResult("jensen_svd", "lower", r.value_bits, {"n_min": k, **r.params},
                       {**r.diagnostics, "domain": "precoder"})


def inner_scale(H, a):
    """Largest ``t`` such that ``V Box(t a_1..t a_k, 0..0)`` fits inside ``Box(a)``.

    Coordinate ``i`` of ``V x~`` is bounded by ``sum_{j<=k} |V_ij| t a_j``.
    """
    H, a = _precoder_halfwidths(H, a)
    k = H.n_min
    reach = np.abs(H.svd[2][:, :k]) @ a[:k]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(reach > 0, a / reach, np.inf)
    t = float(np.min(ratios))
    return t if math.isfinite(t) else 0.0


def _inner_halfwidths(H, a):
    t = inner_scale(H, a)
    b = np.zeros_like(a)
    b[: H.n_min] = t * a[: H.n_min]
    return t, b


def jensen_svd_inner(H, a):
    """Precoded Jensen bound that respects the constraint ``X in Box(a)`` itself."""
    H, a = _precoder_halfwidths(H, a)
    t, b = _inner_halfwidths(H, a)
    r = jensen_svd(H, b)
    return BoundResult("jensen_svd_inner", "lower", r.value_bits, {"scale": t, **r.params},
                       {k: v for k, v in r.diagnostics.items() if k != "domain"})


def epi_svd_inner(H, a):
    """Precoded EPI bound that respects the constraint ``X in Box(a)`` itself."""
    H, a = _precoder_halfwidths(H, a)
    t, b = _inner_halfwidths(H, a)
    r = epi_svd(H, b)
    return BoundResult("epi_svd_inner", "lower", r.value_bits, {"scale": t, **r.params},
                       r.diagnostics)


@dataclass(frozen=True)
class PrelogRow:
    scale: float
    lower_ratio: float
    upper_ratio: float
    rank: int
    n_min: int

    @property
    def rank_deficient(self):
        return self.rank < self.n_min


def prelog_sweep(H, scales, base=None):
    """Best lower and upper bounds over ``Box(scale * base)`` relative to the
    single-stream reference ``log2(1 + 2 r_min / sqrt(2 pi e))``.

    Lower bounds are the feasible precoded Jensen and EPI bounds; upper
    bounds include the rank-reduced channel. Both ratios tend to ``n_min``
    (the rank, for a rank-deficient channel, which is flagged per row).
    """
    H = as_channel(H)
    base = np.ones(H.n_t) if base is None else np.asarray(base, dtype=float)
    rows = []
    for s in scales:
        X = Box(s * base)
        ref = prelog_reference(X)
        a = X.halfwidths
        lower = max(jensen_svd_inner(H, a).value_bits, epi_svd_inner(H, a).value_bits)
        upper = min(r.value_bits for r in upper_bound_set(H, X))
        rows.append(PrelogRow(float(s), lower / ref, upper / ref, H.rank, H.n_min))
    return rows
