"""Capacity lower bounds: EPI, Jensen and Ozarow-Wyner (dithered PAM)."""

from __future__ import annotations

import math

import numpy as np

from .distributions import DitherSpec, PamConstellation, PamProduct
from .errors import (
    DimensionError,
    DomainError,
    NumericError,
    PreconditionError,
    RankDeficiencyError,
)
from .geometry import Ball, Box, as_channel, log_volume
from .optimize import golden_section
from .results import BoundResult, clamp_bits
from .specialfn import LN2, TWO_PI_E, check_moment_order, log_k_np, phi

SQRT_2PIE = math.sqrt(TWO_PI_E)
LOG2_2_OVER_E = math.log2(2.0 / math.e)
MIN_MC_SAMPLES = 1000
SIGMA_RTOL = 1e-12


def _epi_from_log_volume(n, log_vol):
    """``(n/2) log2(1 + exp(2 log_vol / n) / (2 pi e))``, zero for an empty volume."""
    if log_vol == -math.inf:
        return 0.0
    t = 2.0 * log_vol / n - math.log(TWO_PI_E)
    # log1p(e^t) without overflow
    soft = t + math.log1p(math.exp(-t)) if t > 0 else math.log1p(math.exp(t))
    return 0.5 * n * soft / LN2


def epi_uniform_invertible(H, X, volume_convention="exact"):
    """EPI lower bound for a square invertible channel and uniform input on ``X``.

    ``volume_convention="paper"`` replaces the box volume ``prod 2 a_i`` by
    ``prod a_i`` (the form behind the reference curve); that variant is
    flagged as uncertified.
    """
    H = as_channel(H)
    if H.n_r != H.n_t:
        raise DimensionError("EPI bound with uniform input needs n_t = n_r")
    if H.n_t != X.dim:
        raise DimensionError("channel and input space dimensions differ")
    s = H.singular_values
    if s[0] == 0 or s[-1] <= SIGMA_RTOL * s[0]:
        raise RankDeficiencyError("EPI bound with uniform input needs an invertible channel")
    n = H.n_r
    log_det = float(np.sum(np.log(s)))
    if volume_convention == "exact":
        log_vol, name, cert = log_volume(X), "epi", True
    elif volume_convention == "paper":
        if not isinstance(X, Box):
            raise DomainError("the 'paper' volume convention only differs for boxes")
        a = X.halfwidths
        log_vol = -math.inf if np.any(a == 0) else float(np.sum(np.log(a)))
        name, cert = "epi_paper_vol", False
    else:
        raise DomainError(f"unknown volume convention {volume_convention!r}")
    value = _epi_from_log_volume(n, log_det + log_vol)
    return BoundResult(name, "lower", value, {"log2_det": log_det / LN2}, {}, cert)


def epi_svd(H, a, volume_convention="exact"):
    """EPI lower bound after SVD precoding with ``V^T X`` uniform on ``Box(a)``.

    Only the first ``n_min`` entries of ``a`` matter. A zero singular value
    among them makes the image volume zero and the bound 0 (flagged).
    """
    H = as_channel(H)
    a = np.asarray(a, dtype=float).ravel()
    if a.size != H.n_t:
        raise DimensionError("halfwidth vector must have n_t entries")
    k = H.n_min
    s = H.singular_values[:k]
    diag = {}
    if volume_convention == "exact":
        name, cert, factor = "epi_svd", True, 2.0
    elif volume_convention == "paper":
        name, cert, factor = "epi_svd_paper", False, 1.0
    else:
        raise DomainError(f"unknown volume convention {volume_convention!r}")
    if s[0] == 0 or np.any(s <= SIGMA_RTOL * s[0]):
        diag["rank_deficient"] = True
        return BoundResult(name, "lower", 0.0, {"n_min": k}, diag, cert)
    ak = a[:k]
    if np.any(ak == 0):
        return BoundResult(name, "lower", 0.0, {"n_min": k}, {"zero_volume": True}, cert)
    log_vol = float(np.sum(np.log(factor * ak * s)))
    return BoundResult(name, "lower", _epi_from_log_volume(k, log_vol), {"n_min": k}, diag, cert)


# -- Jensen ------------------------------------------------------------------


def _log_psi(sigmas, b):
    return float(np.sum(np.log(phi(np.asarray(sigmas) * np.asarray(b)))))


def _ball_step(b, i, t, radius):
    """Set coordinate ``i`` to ``t`` and rescale the others onto the sphere."""
    out = b.copy()
    rest = np.delete(out, i)
    rn = float(np.linalg.norm(rest))
    remaining = math.sqrt(max(radius * radius - t * t, 0.0))
    if rest.size:
        if rn > 0:
            rest = rest * (remaining / rn)
        else:
            rest = np.full(rest.size, remaining / math.sqrt(rest.size))
        out = np.insert(rest, i, t)
    else:
        out[i] = t
    return out


def _coordinate_descent(sigmas, radius, b0, tol=1e-10, max_sweeps=200):
    b = b0.copy()
    f = _log_psi(sigmas, b)
    for _ in range(max_sweeps):
        f_start = f
        for i in range(b.size):
            t, ft, _ = golden_section(
                lambda t: _log_psi(sigmas, _ball_step(b, i, t, radius)),
                0.0,
                radius,
                tol=max(radius, 1.0) * 1e-10,
            )
            if ft < f:
                b, f = _ball_step(b, i, t, radius), ft
        if f_start - f < tol:
            break
    return b, f


def amplitude_allocate(sigmas, X, seed=0, starts=8):
    """Allocation ``b`` in ``X`` minimising ``prod phi(sigma_i b_i)``.

    For a box the answer is the box corner ``a`` (phi is decreasing in each
    coordinate). For a ball the problem is nonconvex; projected coordinate
    descent runs from the equal allocation and ``starts`` random directions
    and the best end point is returned.
    """
    sigmas = np.abs(np.asarray(sigmas, dtype=float).ravel())
    n = sigmas.size
    if not np.any(sigmas > 0):
        raise DomainError("allocation needs at least one positive gain")
    if isinstance(X, Box):
        if X.dim < n:
            raise DimensionError("box has fewer dimensions than gains")
        return X.halfwidths[:n].copy()
    if X.dim < n:
        raise DimensionError("ball has fewer dimensions than gains")
    A = X.radius
    if A == 0:
        return np.zeros(n)
    if n == 1:
        return np.array([A])
    rng = np.random.default_rng(seed)
    candidates = [np.full(n, A / math.sqrt(n))]
    for _ in range(starts):
        d = np.abs(rng.standard_normal(n))
        candidates.append(A * d / np.linalg.norm(d))
    best_b, best_f = None, math.inf
    for b0 in candidates:
        b, f = _coordinate_descent(sigmas, A, b0)
        if f < best_f - 1e-15:
            best_b, best_f = b, f
    return best_b


def _jensen_value(n, log_psi_nat):
    raw = 0.5 * n * LOG2_2_OVER_E - log_psi_nat / LN2
    return max(raw, 0.0)


def jensen_bound_diag(sigmas, X, seed=0):
    """Jensen lower bound for per-dimension gains ``sigmas``.

    Inputs are independent and uniform on ``[-b_i, b_i]`` with ``b`` from
    ``amplitude_allocate``; the bound is
    ``log+((2/e)^{n/2} / prod phi(sigma_i b_i))`` with ``n = len(sigmas)``.
    """
    sigmas = np.abs(np.asarray(sigmas, dtype=float).ravel())
    n = sigmas.size
    if not np.any(sigmas > 0):
        return BoundResult("jensen", "lower", 0.0, {"b": [0.0] * n}, {"zero_gain": True})
    b = amplitude_allocate(sigmas, X, seed=seed)
    lp = _log_psi(sigmas, b)
    return BoundResult("jensen", "lower", _jensen_value(n, lp), {"b": b.tolist()},
                       {"log2_psi": lp / LN2})


def jensen_bound_general(H, D, samples=200_000, seed=0):
    """Monte-Carlo Jensen lower bound for an arbitrary sampleable input law.

    Estimates ``E[exp(-||H(X - X')||^2 / 4)]`` from independent pairs. For
    sign-symmetric laws each pair is combined with its antithetic partner
    ``(X, -X')``. The exponent uses ``min(n_r, n_t)`` output dimensions,
    which is valid because the rank-reduced channel has at most that many
    rows.
    """
    H = as_channel(H)
    if samples < MIN_MC_SAMPLES:
        raise DomainError(f"Jensen MC budget must be at least {MIN_MC_SAMPLES} samples")
    if D.dim != H.n_t:
        raise DimensionError("input law and channel dimensions differ")
    rng = np.random.default_rng(seed)
    h = H.entries
    x = D.sample(samples, rng)
    xp = D.sample(samples, rng)
    d1 = (x - xp) @ h.T
    vals = np.exp(-0.25 * np.einsum("ij,ij->i", d1, d1))
    if D.symmetric:
        d2 = (x + xp) @ h.T
        vals = 0.5 * (vals + np.exp(-0.25 * np.einsum("ij,ij->i", d2, d2)))
    m = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(samples))
    n = H.n_min
    if not m > 0:
        raise NumericError("Jensen MC expectation underflowed to zero; use the closed form")
    value = _jensen_value(n, math.log(m))
    diag = {
        "expectation": m,
        "expectation_se": se,
        "mc_std_error_bits": se / (m * LN2),
        "samples": samples,
        "seed": seed,
        "antithetic": bool(D.symmetric),
    }
    return BoundResult("jensen_mc", "lower", value, {"n_out": n}, diag)


# -- Ozarow-Wyner ------------------------------------------------------------


def _check_disjoint(D, U):
    hw = U.halfwidths
    if isinstance(D, PamProduct):
        spacing = D.min_spacing()
        bad = np.flatnonzero(2.0 * hw > spacing * (1 + 1e-12))
        if bad.size:
            raise PreconditionError(
                f"dithered translates overlap in dimension(s) {bad.tolist()}: "
                f"2*halfwidth exceeds the symbol spacing"
            )
        return
    pts = D.support()
    m = pts.shape[0]
    if m > 5000:
        raise PreconditionError("disjointness check limited to 5000 support points")
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    separated = np.any(diff >= 2.0 * hw * (1 - 1e-12), axis=-1)
    np.fill_diagonal(separated, True)
    if not np.all(separated):
        raise PreconditionError("dithered translates of the support overlap")


def _estimator_matrix(H, estimator):
    h = H.entries
    if estimator == "inverse":
        if H.n_r != H.n_t or H.rank < H.n_t:
            raise RankDeficiencyError("matrix-inverse estimator needs an invertible channel")
        return np.linalg.inv(h)
    if estimator == "pinv":
        return np.linalg.pinv(h)
    if estimator == "identity":
        if H.n_r != H.n_t:
            raise DimensionError("identity estimator needs n_r = n_t")
        return np.eye(H.n_t)
    raise DomainError(f"unknown estimator {estimator!r}")


def ow_bound(D, H, U, p=2.0, estimator="inverse", samples=200_000, seed=0):
    """Ozarow-Wyner lower bound ``[H(X_D) - G1 - G2]^+`` for a discrete input.

    ``U`` is a uniform dither whose translates around the support points are
    disjoint. ``estimator`` selects the linear receiver ``g``: ``"inverse"``
    (``H^-1 y``), ``"pinv"`` or ``"identity"``. With ``p = 2`` and a left
    inverse the error ``U - g(Z)`` moments are closed form; otherwise they
    are estimated by Monte Carlo with the given budget and seed.
    """
    H = as_channel(H)
    p = check_moment_order(p)
    if not D.discrete:
        raise DomainError("Ozarow-Wyner bound needs a discrete input")
    n = D.dim
    if H.n_t != n or U.dim != n:
        raise DimensionError("input, dither and channel dimensions differ")
    _check_disjoint(D, U)

    entropy = D.entropy_bits()
    hw = U.halfwidths
    params = {"p": p, "estimator": estimator, "entropy_bits": entropy}
    if np.any(hw == 0):
        return BoundResult("ow", "lower", 0.0, params, {"degenerate_dither": True})

    G = _estimator_matrix(H, estimator)
    h_u = U.entropy_bits()
    diag = {}
    left_inverse = np.allclose(G @ H.entries, np.eye(n), atol=1e-10)
    rng = np.random.default_rng(seed)

    # ||U||_p^p = E||U||^p / n
    if p == 2.0:
        log_u_norm = 0.5 * math.log(float(np.sum(hw**2)) / (3.0 * n))
    elif n == 1:
        log_u_norm = (p * math.log(hw[0]) - math.log(p + 1.0)) / p
    else:
        u = U.sample(samples, rng)
        log_u_norm = math.log(float(np.mean(np.sum(u * u, axis=1) ** (p / 2))) / n) / p
        diag["u_norm"] = "mc"

    if p == 2.0 and left_inverse:
        err2 = float(np.sum(hw**2)) / 3.0 + float(np.sum(G * G))
        log_err_norm = 0.5 * math.log(err2 / n)
        diag["g1"] = "closed_form"
    else:
        x = D.sample(samples, rng)
        u = U.sample(samples, rng)
        z = rng.standard_normal((samples, H.n_r))
        y = x @ H.entries.T + z
        e = u + x - y @ G.T
        r_p = np.sum(e * e, axis=1) ** (p / 2)
        mean = float(np.mean(r_p))
        se = float(np.std(r_p, ddof=1) / math.sqrt(samples))
        log_err_norm = math.log(mean / n) / p
        diag.update(g1="mc", samples=samples, seed=seed,
                    g1_std_error_bits=n * se / (p * mean * LN2))

    g1 = n * (log_err_norm - log_u_norm) / LN2
    g2 = n * log_k_np(n, p) / LN2 + (n / p) * math.log2(n) + n * log_u_norm / LN2 - h_u
    params.update(g1_bits=g1, g2_bits=g2)
    value = clamp_bits(entropy - g1 - g2, diag)
    return BoundResult("ow", "lower", value, params, diag)


def pam_points_for(gain, amplitude):
    """``floor(1 + 2 A |h| / sqrt(2 pi e))`` constellation size."""
    return int(math.floor(1.0 + 2.0 * amplitude * abs(gain) / SQRT_2PIE))


def ow_pam_diag(H, X):
    """Per-antenna dithered-PAM Ozarow-Wyner bound for a diagonal channel.

    Each input uses ``PAM(N_i, A_i)`` with ``N_i = floor(1 + 2 A_i |h_ii| /
    sqrt(2 pi e))``, a uniform dither on ``[-Delta_i, Delta_i)``, ``p = 2``
    and ``g(y_i) = y_i / h_ii``. For a ball of radius ``A`` every antenna uses
    ``A_i = A / sqrt(n)`` so that the product constellation stays inside the
    ball. Single-point antennas contribute 0 bits.
    """
    H = as_channel(H)
    if not H.is_diagonal():
        raise DomainError("PAM Ozarow-Wyner bound needs a diagonal channel")
    n = H.n_r
    gains = np.diag(H.entries)
    if isinstance(X, Ball):
        if X.dim != n:
            raise DimensionError("ball and channel dimensions differ")
        amps = np.full(n, X.radius / math.sqrt(n))
    else:
        if X.dim != n:
            raise DimensionError("box and channel dimensions differ")
        amps = X.halfwidths
    per_dim, points = [], []
    for h, A in zip(gains, amps):
        N = pam_points_for(h, A) if h != 0 else 1
        points.append(N)
        if N < 2:
            per_dim.append(0.0)
            continue
        c = PamConstellation(N, A)
        r = ow_bound(PamProduct([c]), [[h]], DitherSpec([c.half_spacing]))
        per_dim.append(r.value_bits)
    params = {"points": points, "per_dim": per_dim, "amplitudes": amps.tolist()}
    return BoundResult("ow_pam", "lower", math.fsum(per_dim), params)
