"""Monte-Carlo estimators used to cross-check the analytic bounds."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionError, DomainError
from .geometry import as_channel
from .results import McEstimate
from .specialfn import LN2

MAX_SUPPORT = 10**6
MIN_MI_SAMPLES = 10**4
MIN_PAIR_SAMPLES = 1000
# rows * support * n_r entries per log-sum-exp block
BLOCK_ENTRIES = 2**22


def _stratum_seed(seed, m):
    return np.random.SeedSequence([seed, m])


def _stratum_stats(args):
    """Mean and variance of the information density for strata ``lo..hi``."""
    h, pts, logp, lo, hi, count, seed = args
    means = np.empty(hi - lo)
    variances = np.empty(hi - lo)
    centers = pts @ h.T  # (M, n_r)
    M, n_r = centers.shape
    rows = max(1, BLOCK_ENTRIES // max(M * n_r, 1))
    for m in range(lo, hi):
        rng = np.random.default_rng(_stratum_seed(seed, m))
        z = rng.standard_normal((count, n_r))
        y = centers[m] + z
        dens = np.empty(count)
        for s in range(0, count, rows):
            yb = y[s : s + rows]
            d2 = np.sum((yb[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
            dens[s : s + rows] = logsumexp(logp[None, :] - 0.5 * d2, axis=1)
        info = (-0.5 * np.sum(z * z, axis=1) - dens) / LN2
        means[m - lo] = info.mean()
        variances[m - lo] = info.var(ddof=1)
    return means, variances


def mutual_information_discrete(D, H, samples=10**5, seed=0, workers=1):
    """``I(X; HX + Z)`` in bits for a finite-support input law.

    Sampling is stratified: every support point receives the same number of
    noise draws (at least 2), each from its own seeded substream, so the
    estimate does not depend on ``workers``. The output density is a
    Gaussian mixture evaluated with a shifted log-sum-exp.
    """
    H = as_channel(H)
    if not getattr(D, "discrete", False):
        raise DomainError("mutual information oracle needs a discrete input")
    if D.dim != H.n_t:
        raise DimensionError("input law and channel dimensions differ")
    if samples < MIN_MI_SAMPLES:
        raise DomainError(f"MI oracle needs at least {MIN_MI_SAMPLES} samples")
    size = getattr(D, "size", None)
    if size is None:
        size = D.support().shape[0]
    if size > MAX_SUPPORT:
        raise DomainError(f"support of {size} points exceeds the limit of {MAX_SUPPORT}")
    pts = D.support()
    probs = np.asarray(D.pmf(), dtype=float)
    keep = probs > 0
    pts, probs = pts[keep], probs[keep]
    M = pts.shape[0]
    if M == 1:
        return McEstimate(0.0, 0.0, samples, seed)

    count = max(2, samples // M)
    logp = np.log(probs)
    h = H.entries
    workers = max(1, int(workers))
    edges = np.linspace(0, M, min(workers * 4, M) + 1).astype(int) if workers > 1 else [0, M]
    jobs = [(h, pts, logp, int(lo), int(hi), count, seed) for lo, hi in zip(edges[:-1], edges[1:])]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_stratum_stats, jobs))
    else:
        parts = [_stratum_stats(j) for j in jobs]
    means = np.concatenate([p[0] for p in parts])
    variances = np.concatenate([p[1] for p in parts])
    value = float(np.dot(probs, means))
    se = float(math.sqrt(np.dot(probs**2, variances) / count))
    return McEstimate(value, se, count * M, seed)


def expectation_exp_quadratic(D, H, samples=10**5, seed=0):
    """``E[exp(-||H(X - X')||^2 / 4)]`` from independent pairs.

    The value is the expectation itself (not in bits). A point mass gives
    exactly 1 with zero standard error.
    """
    H = as_channel(H)
    if samples < MIN_PAIR_SAMPLES:
        raise DomainError(f"pair estimator needs at least {MIN_PAIR_SAMPLES} samples")
    if D.dim != H.n_t:
        raise DimensionError("input law and channel dimensions differ")
    rng = np.random.default_rng(seed)
    diff = (D.sample(samples, rng) - D.sample(samples, rng)) @ H.entries.T
    vals = np.exp(-0.25 * np.sum(diff * diff, axis=1))
    return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)),
                      samples, seed)
