"""Capacity upper bounds: moment bound and the two duality bounds."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, NumericError
from .geometry import Ball, ChannelMatrix, as_channel, enclosing_box_of_image, r_max_image, r_min
from .optimize import golden_section
from .results import BoundResult, clamp_bits
from .specialfn import (
    DEFAULT_TOL,
    LN2,
    TWO_PI_E,
    check_moment_order,
    log_ball_volume,
    log_k_np,
    log_noncentral_chi_moment,
)

P_GRID = tuple(2.0**k for k in range(-4, 8))
P_TOL = 1e-6
SQRT_2PIE = math.sqrt(TWO_PI_E)


def effective_channel(H):
    """Rank-reduced channel ``diag(sigma_1..sigma_r) V_r^T``.

    Rotating the output by ``U^T`` and dropping the noise-only rows leaves the
    mutual information unchanged, so every upper bound may be evaluated on
    this ``r x n_t`` matrix instead of ``H``.
    """
    H = as_channel(H)
    _, s, v = H.svd
    r = max(H.rank, 1)
    return ChannelMatrix(s[:r, None] * v[:, :r].T)


def _log2_moment_objective(n, d, p, tol):
    logm, used = log_noncentral_chi_moment(n, d, p, tol=tol)
    raw = n * log_k_np(n, p) / LN2 - 0.5 * n * math.log2(TWO_PI_E) + (n / p) * logm / LN2
    return raw, used


def moment_bound_at_p(H, X, p, tol=DEFAULT_TOL):
    """Moment upper bound for a fixed moment order ``p``.

    The worst-case output ``x~ + Z`` has ``||x~|| = r_max(H X)``; the bound is
    ``n_r log(k_{n_r,p} n_r^{1/p} ||x~+Z||_p / sqrt(2 pi e))``.
    """
    H = as_channel(H)
    p = check_moment_order(p)
    d = r_max_image(H, X)
    n = H.n_r
    raw, used = _log2_moment_objective(n, d, p, tol)
    diag = {"moment_path": used}
    value = clamp_bits(raw, diag)
    return BoundResult("moment_p", "upper", value, {"p": p, "d": d}, diag)


def moment_bound(H, X, tol=DEFAULT_TOL):
    """Moment upper bound minimised over the moment order.

    A log-spaced grid ``p = 2^-4 .. 2^7`` locates the best bracket, then
    golden-section search refines ``p`` to ``1e-6``. The grid contains
    ``p = 2``, so the result never exceeds the closed form
    ``(n_r/2) log(1 + d^2/n_r)``.
    """
    H = as_channel(H)
    d = r_max_image(H, X)
    n = H.n_r
    paths = set()
    failures = 0

    def objective(p):
        nonlocal failures
        try:
            raw, used = _log2_moment_objective(n, d, p, tol)
        except NumericError:
            failures += 1
            return math.inf
        paths.add(used)
        return raw

    grid_vals = [objective(p) for p in P_GRID]
    k = int(np.argmin(grid_vals))
    best_p, best_val = P_GRID[k], grid_vals[k]
    lo = P_GRID[max(k - 1, 0)]
    hi = P_GRID[min(k + 1, len(P_GRID) - 1)]
    p_ref, v_ref, evals = golden_section(objective, lo, hi, tol=P_TOL)
    if v_ref < best_val:
        best_p, best_val = p_ref, v_ref

    closed_form = 0.5 * n * math.log2(1.0 + d * d / n)
    if not math.isfinite(best_val):
        raise NumericError("moment bound could not be evaluated at any p")
    # p = 2 is on the grid; the closed form guards against series drift there
    if best_val > closed_form:
        best_p, best_val = 2.0, closed_form
    diag = {
        "evaluations": len(P_GRID) + evals,
        "moment_path": "+".join(sorted(paths)),
    }
    if failures:
        diag["failed_p"] = failures
    value = clamp_bits(best_val, diag)
    return BoundResult("moment", "upper", value, {"p": best_p, "d": d}, diag)


def moment_closed_form_p2(n, d):
    """``(n/2) log2(1 + d^2/n)``: the moment bound at ``p = 2``."""
    return 0.5 * n * math.log2(1.0 + d * d / n)


def _log_ball_dual_terms(n, d):
    """Natural-log magnitudes of every summand inside the ball duality bound."""
    terms = [0.0]  # leading unit term
    if d > 0:
        logd = math.log(d)
        if n > 1:
            coeff = math.lgamma((n - 1) / 2.0) - 0.5 * n * LN2 - math.lgamma(n / 2.0)
            for i in range(1, n):
                log_binom = math.lgamma(n) - math.lgamma(i + 1) - math.lgamma(n - i)
                terms.append(log_binom + coeff + i * logd)
        terms.append(log_ball_volume(n, d) - 0.5 * n * math.log(TWO_PI_E))
    return terms


def duality_ball_bound(H, X):
    """Duality bound through the covering ball of the image ``H X``.

    ``log2(1 + c_n(d) + Vol(B(d)) / (2 pi e)^{n/2})`` with ``d = r_max(H X)``,
    ``n = n_r``. Summands are accumulated smallest first after a common shift.
    """
    H = as_channel(H)
    d = r_max_image(H, X)
    n = H.n_r
    terms = sorted(_log_ball_dual_terms(n, d))
    top = terms[-1]
    total = top + math.log(math.fsum(math.exp(t - top) for t in terms))
    diag = {}
    value = clamp_bits(total / LN2, diag)
    return BoundResult("dual_ball", "upper", value, {"d": d}, diag)


def _box_dual(name, halfwidths, certified=True, extra=None):
    halfwidths = np.asarray(halfwidths, dtype=float)
    per_term = np.log2(1.0 + 2.0 * halfwidths / SQRT_2PIE)
    params = {"halfwidths": halfwidths.tolist(), "per_term": per_term.tolist()}
    if extra:
        params.update(extra)
    return BoundResult(name, "upper", math.fsum(per_term), params, {}, certified)


def duality_box_bound(H, X):
    """Sum of scalar duality bounds over the enclosing box of ``H X``."""
    H = as_channel(H)
    return _box_dual("dual_box", enclosing_box_of_image(H, X))


def duality_diag_ball_paper(H, X):
    """Published per-antenna formula for a diagonal channel and a ball.

    Uses half-widths ``|h_ii| A / sqrt(n)``, which are smaller than the true
    image extents ``|h_ii| A``; the result is therefore not a certified
    bound and is reported for comparison only.
    """
    H = as_channel(H)
    if not isinstance(X, Ball):
        raise DomainError("the diagonal ball variant needs a ball constraint")
    if not H.is_diagonal():
        raise DomainError("the diagonal ball variant needs a diagonal channel")
    n = H.n_r
    hw = np.abs(np.diag(H.entries)) * X.radius / math.sqrt(n)
    return _box_dual("dual2_diag_ball_paper", hw, certified=False)


def upper_bound_set(H, X, tol=DEFAULT_TOL):
    """All certified upper bounds on ``H`` and, if it differs, on its rank-reduced form."""
    H = as_channel(H)
    results = [moment_bound(H, X, tol), duality_ball_bound(H, X), duality_box_bound(H, X)]
    if H.rank < H.n_r:
        He = effective_channel(H)
        for fn in (moment_bound, duality_ball_bound, duality_box_bound):
            r = fn(He, X, tol) if fn is moment_bound else fn(He, X)
            results.append(
                BoundResult(r.name + "_eff", r.kind, r.value_bits, r.params,
                            {**r.diagnostics, "rank": He.n_r})
            )
    return results


def prelog_reference(X):
    """``log2(1 + 2 r_min(X) / sqrt(2 pi e))``: the single-stream growth rate."""
    rm = r_min(X)
    if rm <= 0:
        raise DomainError("pre-log ratio needs r_min(X) > 0")
    return math.log2(1.0 + 2.0 * rm / SQRT_2PIE)


def high_amplitude_prelog(H, X, tol=DEFAULT_TOL):
    """Best upper bound divided by ``prelog_reference(X)``.

    As ``X`` is scaled up this ratio approaches ``min(n_r, n_t)`` (for a rank
    deficient channel, the rank).
    """
    ref = prelog_reference(X)
    best = min(r.value_bits for r in upper_bound_set(H, X, tol))
    return best / ref
