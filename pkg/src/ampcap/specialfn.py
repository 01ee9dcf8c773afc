"""Scalar special functions and moments used by the bound formulas.

Everything that involves ratios of Gamma functions is evaluated through
``log_gamma`` differences so that dimensions of a few hundred do not
overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericError

SQRT_PI = math.sqrt(math.pi)
TWO_PI_E = 2.0 * math.pi * math.e
LN2 = math.log(2.0)

# below this |x| phi() switches to its Taylor series
PHI_SERIES_CUTOFF = 1e-3


@dataclass(frozen=True)
class Tolerance:
    """Convergence controls for iterative evaluations."""

    rel: float = 1e-9
    abs: float = 0.0
    max_iter: int = 20000

    def __post_init__(self):
        if not (self.rel > 0 and math.isfinite(self.rel)):
            raise DomainError(f"rel must be positive, got {self.rel}")
        if not self.abs >= 0:
            raise DomainError(f"abs must be nonnegative, got {self.abs}")
        if int(self.max_iter) < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOL = Tolerance()


def check_moment_order(p):
    p = float(p)
    if not (p > 0 and math.isfinite(p)):
        raise DomainError(f"moment order p must be positive and finite, got {p}")
    return p


def _check_dim(n):
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    return int(n)


def log_gamma(x):
    """Natural log of the Gamma function for positive ``x``."""
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"log_gamma needs a positive finite argument, got {x}")
    return math.lgamma(x)


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x).

    Accepts scalars or arrays; scalars come back as ``float``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("q_function needs finite arguments")
    out = 0.5 * special.erfc(arr / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def log_k_np(n, p):
    """Natural log of the max-entropy constant k_{n,p}."""
    n = _check_dim(n)
    p = check_moment_order(p)
    return (
        0.5 * math.log(math.pi)
        + 1.0 / p
        + math.log(p / n) / p
        + log_gamma(n / p + 1.0) / n
        - log_gamma(n / 2.0 + 1.0) / n
    )


def k_np(n, p):
    """Constant of the maximum-entropy inequality under a p-th moment constraint.

    For ``p = 2`` this is ``sqrt(2*pi*e/n)``.
    """
    return math.exp(log_k_np(n, p))


def _phi_series(x):
    x2 = x * x
    return 1.0 - x2 / 6.0 + x2 * x2 / 30.0 - x2 * x2 * x2 / 168.0


def _phi_direct(x):
    # e^{-x^2} - 1 + sqrt(pi) x (1 - 2Q(sqrt2 x)), with 1 - 2Q(sqrt2 x) = erf(x)
    # divided through by x once so that huge x never forms an overflowing x^2
    with np.errstate(over="ignore"):
        e = np.expm1(-x * x)
    return (e / x + SQRT_PI * special.erf(x)) / x


def phi(x):
    """E[exp(-(X - X')^2 / 4)] scaled form for X, X' iid uniform on [-x, x].

    Equals ``(exp(-x^2) - 1 + sqrt(pi) x (1 - 2 Q(sqrt(2) x))) / x^2``;
    strictly decreasing from 1 at ``x = 0`` and ~ ``sqrt(pi)/x`` for large x.
    Scalars in, float out; arrays are evaluated elementwise.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("phi is defined for finite x >= 0")
    small = arr < PHI_SERIES_CUTOFF
    out = np.empty_like(arr)
    out[small] = _phi_series(arr[small])
    big = ~small
    out[big] = _phi_direct(arr[big])
    return float(out) if out.ndim == 0 else out


def log_ball_volume(n, r):
    n = _check_dim(n)
    r = float(r)
    if not (r >= 0 and math.isfinite(r)):
        raise DomainError(f"radius must be finite and >= 0, got {r}")
    if r == 0:
        return -math.inf
    return 0.5 * n * math.log(math.pi) + n * math.log(r) - log_gamma(0.5 * n + 1.0)


def ball_volume(n, r):
    """Volume of the n-dimensional Euclidean ball of radius ``r``."""
    return math.exp(log_ball_volume(n, r))


# -- noncentral chi moments -------------------------------------------------


def _log_series_moment(n, lam, p, tol):
    """log E[R^p] via the 1F1 series; returns None if max_iter is exceeded."""
    a = 0.5 * (n + p)
    b = 0.5 * n
    z = 0.5 * lam * lam
    prefix = 0.5 * p * LN2 - z + math.lgamma(a) - math.lgamma(b)
    if z == 0.0:
        return prefix, 1

    logz = math.log(z)
    target = math.log(tol.rel) - 7.0  # last term must be far below rel tol
    kmax = int(math.ceil(z + 12.0 * math.sqrt(z) + 40.0))
    while True:
        if kmax > tol.max_iter:
            return None
        k = np.arange(kmax + 1, dtype=float)
        terms = (
            special.gammaln(a + k)
            - special.gammaln(b + k)
            - special.gammaln(k + 1.0)
            + k * logz
        ) + (math.lgamma(b) - math.lgamma(a))
        total = special.logsumexp(terms)
        # terms past the peak are decreasing; check the tail
        if terms[-1] - total < target and terms[-1] < terms[-2]:
            return prefix + float(total), kmax + 1
        kmax *= 2


def _log_ive(nu, z):
    """log of the exponentially scaled modified Bessel function I_nu(z) e^{-z}."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1e7
    with np.errstate(divide="ignore"):
        out[small] = np.log(special.ive(nu, z[small]))
    zb = z[~small]
    # Hankel asymptotic expansion; the third term is below 1e-21 here
    mu = 4.0 * nu * nu
    t1 = (mu - 1.0) / (8.0 * zb)
    t2 = t1 * (mu - 9.0) / (2.0 * 8.0 * zb)
    t3 = t2 * (mu - 25.0) / (3.0 * 8.0 * zb)
    out[~small] = -0.5 * np.log(2.0 * math.pi * zb) + np.log1p(-t1 + t2 - t3)
    return out


def _log_ncchi_pdf(r, n, lam):
    r = np.asarray(r, dtype=float)
    out = np.full_like(r, -np.inf)
    pos = r > 0
    rp = r[pos]
    if lam == 0.0:
        out[pos] = (
            (n - 1) * np.log(rp)
            - 0.5 * rp * rp
            - (0.5 * n - 1.0) * LN2
            - math.lgamma(0.5 * n)
        )
    else:
        nu = 0.5 * n - 1.0
        with np.errstate(divide="ignore"):
            out[pos] = (
                nu * np.log(rp / lam)
                + np.log(rp)
                - 0.5 * (rp - lam) ** 2
                + _log_ive(nu, lam * rp)
            )
    return out


def _log_quadrature_moment(n, lam, p, tol):
    lo = max(0.0, lam - 12.0)
    hi = lam + 12.0 + 6.0 * math.sqrt(n)
    # reference radius keeps (r/r0)^p of order one even for huge lam and p
    r0 = math.sqrt(lam * lam + n + p)
    mode = min(max(r0, lo), hi)

    nu = 0.5 * n - 1.0
    if lam == 0.0:
        const = -(0.5 * n - 1.0) * LN2 - math.lgamma(0.5 * n)

        def log_pdf(r):
            return (n - 1) * math.log(r) - 0.5 * r * r + const

    else:
        def log_pdf(r):
            z = lam * r
            if z < 1e7:
                log_bessel = math.log(special.ive(nu, z))
            else:
                log_bessel = float(_log_ive(nu, np.array([z]))[0])
            return nu * math.log(r / lam) + math.log(r) - 0.5 * (r - lam) ** 2 + log_bessel

    def integrand(r):
        if r <= 0.0:
            return 0.0
        return math.exp(p * math.log(r / r0) + log_pdf(r))

    points = [mode] if lo < mode < hi else None
    val, err = integrate.quad(
        integrand,
        lo,
        hi,
        points=points,
        epsabs=0.0,
        epsrel=min(1e-12, tol.rel * 1e-3),
        limit=400,
    )
    if not (val > 0) or err > max(tol.rel * val, tol.abs):
        partial = math.exp(p * math.log(r0)) * val if val > 0 else val
        raise NumericError(
            f"noncentral chi moment quadrature did not converge "
            f"(n={n}, lam={lam}, p={p}, est err={err:.3g})",
            partial=partial,
        )
    return p * math.log(r0) + math.log(val)


def log_noncentral_chi_moment(n, lam, p, tol=DEFAULT_TOL, method="auto"):
    """Natural log of E[||x + Z||^p] with ||x|| = lam, Z ~ N(0, I_n).

    ``method`` is ``"auto"`` (series, quadrature fallback), ``"series"`` or
    ``"quadrature"``. Returns ``(log_moment, used)`` where ``used`` names the
    path that produced the value.
    """
    n = _check_dim(n)
    p = check_moment_order(p)
    lam = float(lam)
    if not (lam >= 0 and math.isfinite(lam)):
        raise DomainError(f"noncentrality must be finite and >= 0, got {lam}")
    if method not in ("auto", "series", "quadrature"):
        raise DomainError(f"unknown method {method!r}")

    if method != "quadrature":
        res = _log_series_moment(n, lam, p, tol)
        if res is not None:
            return res[0], "series"
        if method == "series":
            raise NumericError(
                f"1F1 series needs more than max_iter={tol.max_iter} terms "
                f"(lam={lam})"
            )
    return _log_quadrature_moment(n, lam, p, tol), "quadrature"


def noncentral_chi_moment(n, lam, p, tol=DEFAULT_TOL, method="auto"):
    """p-th moment of the noncentral chi distribution with n degrees of freedom.

    >>> round(noncentral_chi_moment(2, 5.0, 2), 9)
    27.0
    """
    logm, _ = log_noncentral_chi_moment(n, lam, p, tol=tol, method=method)
    return math.exp(logm)
