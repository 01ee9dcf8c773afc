"""Amplitude sweeps: evaluate a set of named bounds over a grid and write CSV."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import UniformBox
from .errors import AmpcapError, DomainError
from .geometry import Box
from .lower_bounds import (
    epi_svd,
    epi_uniform_invertible,
    jensen_bound_diag,
    jensen_bound_general,
    ow_pam_diag,
)
from .svd_precoding import epi_svd_inner, jensen_svd, jensen_svd_inner
from .upper_bounds import (
    duality_ball_bound,
    duality_box_bound,
    duality_diag_ball_paper,
    moment_bound,
    moment_bound_at_p,
)

CSV_COLUMNS = ("amplitude_linear", "amplitude_dB", "bound", "kind", "bits", "note")


def _box_halfwidths(X, name):
    if not isinstance(X, Box):
        raise DomainError(f"{name} needs a box constraint")
    return X.halfwidths


def _diag_gains(H, name):
    if not H.is_diagonal():
        raise DomainError(f"{name} needs a diagonal channel")
    return np.abs(np.diag(H.entries))


def _jensen_mc(H, X, samples, seed):
    return jensen_bound_general(H, UniformBox(_box_halfwidths(X, "jensen_mc")), samples, seed)


# name -> f(H, X, samples, seed)
BOUNDS = {
    "moment": lambda H, X, n, s: moment_bound(H, X),
    "moment_p2": lambda H, X, n, s: moment_bound_at_p(H, X, 2.0),
    "dual_ball": lambda H, X, n, s: duality_ball_bound(H, X),
    "dual_box": lambda H, X, n, s: duality_box_bound(H, X),
    "dual2_diag_ball_paper": lambda H, X, n, s: duality_diag_ball_paper(H, X),
    "epi": lambda H, X, n, s: epi_uniform_invertible(H, X),
    "epi_paper_vol": lambda H, X, n, s: epi_uniform_invertible(H, X, "paper"),
    "jensen": lambda H, X, n, s: jensen_bound_diag(_diag_gains(H, "jensen"), X),
    "jensen_mc": _jensen_mc,
    "ow_pam": lambda H, X, n, s: ow_pam_diag(H, X),
    "jensen_svd": lambda H, X, n, s: jensen_svd(H, _box_halfwidths(X, "jensen_svd")),
    "epi_svd": lambda H, X, n, s: epi_svd(H, _box_halfwidths(X, "epi_svd")),
    "epi_svd_paper": lambda H, X, n, s: epi_svd(H, _box_halfwidths(X, "epi_svd"), "paper"),
    "jensen_svd_inner": lambda H, X, n, s: jensen_svd_inner(H, _box_halfwidths(X, "jensen_svd")),
    "epi_svd_inner": lambda H, X, n, s: epi_svd_inner(H, _box_halfwidths(X, "epi_svd")),
}


@dataclass(frozen=True)
class SweepRow:
    amplitude_linear: float
    amplitude_db: float
    bound: str
    kind: str
    bits: float | None
    note: str

    def cells(self):
        bits = "" if self.bits is None else repr(self.bits)
        return [repr(self.amplitude_linear), repr(self.amplitude_db), self.bound, self.kind,
                bits, self.note]


def _kind_of(name):
    return "upper" if name.startswith(("moment", "dual")) else "lower"


def _point_seed(seed, index):
    # one independent, worker-count-free stream per grid point
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def evaluate_point(cfg, index):
    """All selected bounds at grid point ``index``, in selection order."""
    A = cfg.amplitudes[index]
    X = cfg.space(A)
    rows = []
    for name in cfg.bounds:
        try:
            r = BOUNDS[name](cfg.channel, X, cfg.samples, _point_seed(cfg.seed, index))
            rows.append(SweepRow(A, cfg.amplitudes_db[index], name, r.kind, r.value_bits,
                                 r.note()))
        except AmpcapError as exc:
            rows.append(SweepRow(A, cfg.amplitudes_db[index], name, _kind_of(name), None,
                                 f"error={type(exc).__name__}: {exc}"))
    return rows


def _evaluate_chunk(args):
    cfg, indices = args
    return [evaluate_point(cfg, i) for i in indices]


def run_sweep(cfg, workers=None):
    """Rows for every (amplitude, bound) pair in grid order.

    Points are distributed over a process pool when ``workers > 1``; the
    output does not depend on the worker count.
    """
    workers = cfg.workers if workers is None else workers
    idx = list(range(len(cfg.amplitudes)))
    if workers <= 1 or len(idx) < 2:
        per_point = [evaluate_point(cfg, i) for i in idx]
    else:
        chunks = [idx[k::workers] for k in range(workers) if idx[k::workers]]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_evaluate_chunk, [(cfg, c) for c in chunks]))
        per_point = [None] * len(idx)
        for chunk, res in zip(chunks, results):
            for i, rows in zip(chunk, res):
                per_point[i] = rows
    return [row for rows in per_point for row in rows]


def format_csv(cfg, rows):
    buf = io.StringIO()
    buf.write(cfg.header() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def read_sweep_csv(path):
    """Parse a sweep CSV back into dictionaries (``bits`` as float or None)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        rec["amplitude_linear"] = float(rec["amplitude_linear"])
        rec["amplitude_dB"] = float(rec["amplitude_dB"])
        rec["bits"] = float(rec["bits"]) if rec["bits"] else None
        out.append(rec)
    return out


def finite_rows(rows):
    return [r for r in rows if r.bits is not None and math.isfinite(r.bits)]
