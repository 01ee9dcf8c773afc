"""Executable gap certificates and bound-ordering checks over instance ensembles."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import AmpcapError
from .geometry import Ball, Box, ChannelMatrix, as_channel, packing_efficiency
from .lower_bounds import epi_svd, epi_uniform_invertible, jensen_bound_diag, ow_pam_diag
from .specialfn import log_ball_volume
from .svd_precoding import epi_svd_inner, inner_scale, jensen_svd, jensen_svd_inner
from .units import db_grid, db_to_linear
from .upper_bounds import (
    duality_box_bound,
    duality_diag_ball_paper,
    moment_bound_at_p,
    upper_bound_set,
)

SLACK_TOL = -1e-9
PAM_GAP_CONSTANT = (
    1.0 + 0.5 * math.log2(math.pi * math.e / 6.0) + 0.5 * math.log2(1.0 + 6.0 / (math.pi * math.e))
)
ENSEMBLE_SEED = 20240601

FIG2_CHANNEL = ((0.3, 0.0), (0.0, 0.1))
FIG3_CHANNEL = ((0.6557, 0.0357, 0.8491),)


@dataclass(frozen=True)
class GapCertificate:
    """``lhs <= rhs`` up to ``SLACK_TOL``.

    ``asserted`` is False for rows kept only for comparison (reference
    forms that are not valid inequalities); those never fail an audit.
    """

    instance: str
    check: str
    lhs_bits: float
    rhs_bits: float
    asserted: bool = True
    note: str = ""

    @property
    def slack(self):
        return self.rhs_bits - self.lhs_bits

    @property
    def passed(self):
        return self.slack >= SLACK_TOL


@dataclass(frozen=True, eq=False)
class Instance:
    label: str
    H: ChannelMatrix
    X: Box | Ball
    amplitude: float

    def __str__(self):
        return f"{self.label}@A={self.amplitude!r}"


# -- gap theorems ------------------------------------------------------------


def _square_invertible(H):
    return H.n_r == H.n_t and H.rank == H.n_r


def packing_gap_certificates(H, X, label="instance"):
    """All rows of the packing-efficiency gap check.

    The left side is the p = 2 moment bound minus the exact-volume EPI bound.
    Rows:

    * ``packing_gap`` compares it with ``(n/2) log2((pi n)^{1/n} rho^{2/n})``
      for the exact efficiency ``rho`` (the closed form as stated);
    * ``packing_gap_estimate`` uses the closed-form box estimate of ``rho``;
    * ``packing_gap_direct`` uses ``(n/2) log2 max(1, (2 pi e / n)
      (rho / V_n)^{2/n})``, which follows from the two bounds without the
      Gamma-function approximation and is the asserted row.
    """
    H = as_channel(H)
    n = H.n_r
    upper = moment_bound_at_p(H, X, 2.0).value_bits
    lower = epi_uniform_invertible(H, X).value_bits
    lhs = upper - lower
    pe = packing_efficiency(H, X)

    def paper_rhs(rho):
        if math.isinf(rho):
            return math.inf
        return 0.5 * math.log2(math.pi * n) + math.log2(rho)

    def direct_rhs(rho):
        if math.isinf(rho):
            return math.inf
        log_v1 = log_ball_volume(n, 1.0)
        inner = math.log(2.0 * math.pi * math.e / n) + 2.0 / n * (math.log(rho) - log_v1)
        return 0.5 * n * max(inner, 0.0) / math.log(2.0)

    note = f"moment_p2={upper!r};epi={lower!r};rho={pe.exact!r}"
    rows = [
        GapCertificate(label, "packing_gap", lhs, paper_rhs(pe.exact), False, note),
        GapCertificate(label, "packing_gap_direct", lhs, direct_rhs(pe.exact), True, note),
    ]
    if pe.estimate is not None:
        rows.append(
            GapCertificate(label, "packing_gap_estimate", lhs, paper_rhs(pe.estimate), False,
                           f"{note};rho_estimate={pe.estimate!r}")
        )
    return rows


def certify_packing_gap(H, X, label="instance"):
    """Published packing-efficiency gap inequality with the exact ``rho``."""
    return packing_gap_certificates(H, X, label)[0]


def certify_pam_gap(H, X, constant=PAM_GAP_CONSTANT, label="instance"):
    """Duality bound minus the dithered-PAM bound against ``constant * n`` bits.

    For a ball the duality side uses the enclosing box of the image (the
    per-antenna ``1/sqrt(n)`` form is not an upper bound).
    """
    H = as_channel(H)
    upper = duality_box_bound(H, X)
    lower = ow_pam_diag(H, X)
    n = H.n_r
    note = f"dual={upper.value_bits!r};ow_pam={lower.value_bits!r};points=" + "/".join(
        str(p) for p in lower.params["points"]
    )
    return GapCertificate(label, "pam_gap", upper.value_bits - lower.value_bits,
                          constant * n, True, note)


# -- sandwich ----------------------------------------------------------------


def lower_bound_set(H, X):
    """Lower bounds applicable to ``(H, X)``, including flagged comparison variants."""
    H = as_channel(H)
    out = []
    if _square_invertible(H):
        out.append(epi_uniform_invertible(H, X))
        if isinstance(X, Box):
            out.append(epi_uniform_invertible(H, X, "paper"))
    if H.is_diagonal():
        out.append(jensen_bound_diag(np.abs(np.diag(H.entries)), X))
        out.append(ow_pam_diag(H, X))
    if isinstance(X, Box):
        a = X.halfwidths
        out.append(jensen_svd_inner(H, a))
        out.append(epi_svd_inner(H, a))
        # precoder-domain forms are feasible for X only when V Box(a) fits in X
        feasible = inner_scale(H, a) >= 1.0
        for r in (jensen_svd(H, a), epi_svd(H, a)):
            out.append(_with_certified(r, feasible))
        out.append(epi_svd(H, a, "paper"))
    return out


def _with_certified(r, flag):
    if r.certified == flag:
        return r
    return type(r)(r.name, r.kind, r.value_bits, r.params, r.diagnostics, flag)


def upper_bound_set_all(H, X):
    H = as_channel(H)
    out = upper_bound_set(H, X)
    if isinstance(X, Ball) and H.is_diagonal():
        out.append(duality_diag_ball_paper(H, X))
    return out


def sandwich_certificate(H, X, label="instance"):
    """``max(certified lower) <= min(certified upper)`` with named witnesses."""
    lowers = lower_bound_set(H, X)
    uppers = upper_bound_set_all(H, X)
    lo = max((r for r in lowers if r.certified), key=lambda r: r.value_bits)
    hi = min((r for r in uppers if r.certified), key=lambda r: r.value_bits)
    flagged = [f"{r.name}={r.value_bits!r}" for r in lowers + uppers if not r.certified]
    note = f"lower={lo.name};upper={hi.name}"
    if flagged:
        note += ";flagged:" + ",".join(flagged)
    return GapCertificate(label, "sandwich", lo.value_bits, hi.value_bits, True, note)


def sandwich_report(instances):
    return [sandwich_certificate(i.H, i.X, str(i)) for i in instances]


# -- ensembles ---------------------------------------------------------------


def fig2_instances():
    H = ChannelMatrix(FIG2_CHANNEL)
    amps = db_to_linear(db_grid(0.0, 30.0, points=40), "half-range")
    return [Instance("fig2", H, Box([A, A]), float(A)) for A in amps]


def fig3_instances():
    H = ChannelMatrix(FIG3_CHANNEL)
    amps = db_to_linear(db_grid(0.0, 16.25, step=1.25), "half-range")
    return [Instance("fig3", H, Box([A, A, A]), float(A)) for A in amps]


def random_instances(n=3, draws=20, amplitudes=(1.0, 10.0, 100.0, 1000.0), seed=ENSEMBLE_SEED):
    rng = np.random.default_rng([seed, n])
    out = []
    k = 0
    while k < draws:
        G = rng.standard_normal((n, n))
        if np.linalg.cond(G) > 1e6:
            continue
        H = ChannelMatrix(G)
        out.extend(Instance(f"rand{n}x{n}#{k}", H, Box(np.full(n, A)), A) for A in amplitudes)
        k += 1
    return out


PAM_GAINS = (0.1, 0.3, 0.5, 1.0, 2.0)
PAM_AMPLITUDES = (10.0, 100.0, 1000.0, 10000.0)


def pam_instances(gains=PAM_GAINS, amplitudes=PAM_AMPLITUDES):
    out = []
    for h1 in gains:
        for h2 in gains:
            H = ChannelMatrix([[h1, 0.0], [0.0, h2]])
            out.extend(Instance(f"diag({h1},{h2})", H, Box([A, A]), A) for A in amplitudes)
    return out


def default_ensemble():
    return fig2_instances() + fig3_instances() + random_instances() + pam_instances()


# -- running -----------------------------------------------------------------


def audit_instance(inst, pam_constant=PAM_GAP_CONSTANT):
    """Every applicable certificate for one instance."""
    H, X, label = inst.H, inst.X, str(inst)
    certs = []
    try:
        certs.append(sandwich_certificate(H, X, label))
        if H.is_diagonal():
            certs.append(certify_pam_gap(H, X, pam_constant, label))
        if _square_invertible(H):
            certs.extend(packing_gap_certificates(H, X, label))
    except AmpcapError as exc:
        certs.append(GapCertificate(label, "error", math.inf, -math.inf, True,
                                    f"{type(exc).__name__}: {exc}"))
    return certs


def audit_failed(certs):
    return any(c.asserted and not c.passed for c in certs)


CSV_COLUMNS = ("instance", "check", "lhs_bits", "rhs_bits", "slack", "passed", "asserted", "note")


def format_certificates_csv(certs):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in certs:
        w.writerow([c.instance, c.check, repr(c.lhs_bits), repr(c.rhs_bits), repr(c.slack),
                    int(c.passed), int(c.asserted), c.note])
    return buf.getvalue()


def write_certificates_csv(certs, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_certificates_csv(certs))


def format_report(certs):
    lines = []
    checks = sorted({c.check for c in certs})
    for check in checks:
        rows = [c for c in certs if c.check == check]
        asserted = rows[0].asserted
        fails = [c for c in rows if not c.passed]
        worst = min(rows, key=lambda c: c.slack)
        tag = "asserted" if asserted else "reported only"
        lines.append(
            f"{check} ({tag}): {len(rows)} rows, {len(fails)} below tolerance, "
            f"worst slack {worst.slack:.6g} at {worst.instance}"
        )
    failed = audit_failed(certs)
    lines.append("result: " + ("FAIL" if failed else "PASS"))
    if failed:
        for c in certs:
            if c.asserted and not c.passed:
                lines.append(f"  failed {c.check} {c.instance}: lhs={c.lhs_bits!r} "
                             f"rhs={c.rhs_bits!r} {c.note}")
    return "\n".join(lines) + "\n"
