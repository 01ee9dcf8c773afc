"""Line-oriented ``key = value`` configuration for sweeps, audits and MI runs.

Blank lines are ignored and ``#`` starts a comment (also after a value). Lists are comma
separated; matrices use ``;`` between rows (``channel = 0.3,0;0,0.1``) or
a CSV file via ``channel_csv``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import AmpcapError, ConfigError
from .geometry import Ball, Box, ChannelMatrix
from .units import CONVENTIONS, db_grid, db_to_linear, linear_to_db

KNOWN_KEYS = {
    "preset",
    "channel",
    "channel_csv",
    "constraint",
    "halfwidths",
    "amplitudes",
    "db_start",
    "db_stop",
    "db_step",
    "db_points",
    "db_convention",
    "bounds",
    "samples",
    "seed",
    "out",
    "workers",
    "pam_gap_constant",
    "input",
    "pam_points",
    "pam_amplitudes",
    "point",
}


@dataclass(frozen=True, eq=False)
class SweepConfig:
    channel: ChannelMatrix
    constraint: str
    amplitudes: tuple
    amplitudes_db: tuple
    db_convention: str
    bounds: tuple
    base: np.ndarray | None = None
    samples: int = 200_000
    seed: int = 0
    out: str | None = None
    workers: int = 1
    pam_gap_constant: float | None = None
    preset: str | None = None
    mi_input: tuple | None = None

    def space(self, amplitude):
        """Input space at grid amplitude ``amplitude``."""
        if self.constraint == "ball":
            return Ball(amplitude, self.channel.n_t)
        base = np.ones(self.channel.n_t) if self.base is None else self.base
        return Box(amplitude * base)

    def header(self):
        return (
            f"# seed={self.seed} samples={self.samples} constraint={self.constraint} "
            f"db_convention={self.db_convention}"
        )


PRESETS = {
    "fig2": {
        "preset": "fig2",
        "channel": "0.3,0;0,0.1",
        "constraint": "box",
        "db_start": "0",
        "db_stop": "30",
        "db_points": "40",
        "db_convention": "half-range",
        "bounds": "moment,dual_ball,dual_box,jensen,epi,epi_paper_vol,ow_pam",
    },
    "fig3": {
        "preset": "fig3",
        "channel": "0.6557,0.0357,0.8491",
        "constraint": "box",
        "db_start": "0",
        "db_stop": "16.25",
        "db_step": "1.25",
        "db_convention": "half-range",
        "bounds": "moment,dual_ball,dual_box,jensen_svd,epi_svd,epi_svd_paper,"
        "jensen_svd_inner,epi_svd_inner",
    },
}


def parse_lines(text):
    """``{key: (value, line_number)}`` from config text."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, field=key)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, field=key)
        out[key] = (value, lineno)
    return out


def _floats(raw, key, line):
    try:
        vals = [float(s) for s in raw.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {raw!r}",
                          line=line, field=key) from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError("expected finite numbers", line=line, field=key)
    return vals


def _int(raw, key, line, minimum=None):
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", line=line, field=key) from None
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}", line=line, field=key)
    return v


def build_config(entries, base_dir=".", mode="sweep"):
    """Validate parsed entries into a ``SweepConfig``.

    ``mode`` is ``"sweep"``, ``"audit"`` or ``"mi"``; the amplitude grid is
    optional for ``"mi"`` and the bound list is required only for sweeps.
    """
    if "preset" in entries:
        name, line = entries["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}", line=line, field="preset")
        merged = {k: (v, None) for k, v in PRESETS[name].items()}
        # keys given next to the preset override it; a grid override replaces the whole grid
        if any(k in entries for k in ("amplitudes", "db_start", "db_stop", "db_step", "db_points")):
            for k in ("db_start", "db_stop", "db_step", "db_points"):
                merged.pop(k, None)
        merged.update(entries)
        entries = merged

    def get(key, default=None):
        return entries.get(key, (default, None))

    # channel
    if "channel" in entries and "channel_csv" in entries:
        raise ConfigError("give either channel or channel_csv", line=entries["channel_csv"][1],
                          field="channel_csv")
    try:
        if "channel" in entries:
            H = ChannelMatrix.from_rows(entries["channel"][0])
        elif "channel_csv" in entries:
            path = entries["channel_csv"][0]
            H = ChannelMatrix.from_csv(os.path.join(base_dir, path))
        else:
            raise ConfigError("missing channel (channel or channel_csv)", field="channel")
    except ConfigError:
        raise
    except (AmpcapError, OSError, ValueError) as exc:
        key = "channel" if "channel" in entries else "channel_csv"
        raise ConfigError(str(exc), line=entries[key][1], field=key) from None

    constraint, line = get("constraint", "box")
    if constraint not in ("box", "ball"):
        raise ConfigError("constraint must be 'box' or 'ball'", line=line, field="constraint")

    base = None
    if "halfwidths" in entries:
        raw, line = entries["halfwidths"]
        if constraint != "box":
            raise ConfigError("halfwidths only apply to a box", line=line, field="halfwidths")
        base = np.array(_floats(raw, "halfwidths", line))
        if base.size != H.n_t or np.any(base < 0):
            raise ConfigError(f"need {H.n_t} nonnegative halfwidths", line=line,
                              field="halfwidths")

    convention, cline = get("db_convention")
    if convention is not None and convention not in CONVENTIONS:
        raise ConfigError(f"db_convention must be one of {CONVENTIONS}", line=cline,
                          field="db_convention")
    db_keys = [k for k in ("db_start", "db_stop", "db_step", "db_points") if k in entries]
    if "amplitudes" in entries and db_keys:
        raise ConfigError("give either amplitudes or a dB range", line=entries["amplitudes"][1],
                          field="amplitudes")
    if "amplitudes" in entries:
        raw, line = entries["amplitudes"]
        amps = np.array(_floats(raw, "amplitudes", line))
        if np.any(amps < 0):
            raise ConfigError("amplitudes must be >= 0", line=line, field="amplitudes")
        convention = convention or "linear"
        dbs = np.array([linear_to_db(a, convention) for a in amps])
    elif db_keys:
        if convention is None:
            raise ConfigError("a dB range needs an explicit db_convention", field="db_convention")
        for k in ("db_start", "db_stop"):
            if k not in entries:
                raise ConfigError(f"missing {k}", field=k)
        start = _floats(entries["db_start"][0], "db_start", entries["db_start"][1])[0]
        stop = _floats(entries["db_stop"][0], "db_stop", entries["db_stop"][1])[0]
        step = points = None
        if "db_step" in entries:
            step = _floats(entries["db_step"][0], "db_step", entries["db_step"][1])[0]
        if "db_points" in entries:
            points = _int(entries["db_points"][0], "db_points", entries["db_points"][1], 1)
        try:
            dbs = db_grid(start, stop, step=step, points=points)
        except AmpcapError as exc:
            key = db_keys[-1]
            raise ConfigError(str(exc), line=entries[key][1], field=key) from None
        amps = db_to_linear(dbs, convention)
    elif mode == "mi":
        amps = dbs = np.zeros(0)
        convention = convention or "linear"
    else:
        raise ConfigError("missing amplitude grid (amplitudes or db_start/db_stop)",
                          field="amplitudes")
    if np.any(np.diff(amps) <= 0):
        key = "amplitudes" if "amplitudes" in entries else db_keys[0]
        raise ConfigError("amplitude grid must be strictly increasing",
                          line=entries[key][1], field=key)

    raw, line = get("bounds", "")
    bounds = tuple(s.strip() for s in raw.split(",") if s.strip())
    from .sweep import BOUNDS  # registry lives next to the evaluators

    if not bounds and mode == "sweep":
        raise ConfigError("at least one bound must be selected", line=line, field="bounds")
    for b in bounds:
        if b not in BOUNDS:
            raise ConfigError(f"unknown bound {b!r}; known: {', '.join(sorted(BOUNDS))}",
                              line=line, field="bounds")

    samples = _int(get("samples", "200000")[0], "samples", get("samples")[1], 1)
    seed = _int(get("seed", "0")[0], "seed", get("seed")[1], 0)
    workers = _int(get("workers", "1")[0], "workers", get("workers")[1], 1)
    pgc = None
    if "pam_gap_constant" in entries:
        raw, line = entries["pam_gap_constant"]
        pgc = _floats(raw, "pam_gap_constant", line)[0]

    mi_input = _parse_mi_input(entries, H)
    if mode == "mi" and mi_input is None:
        raise ConfigError("mi needs an input spec (input = pam | point)", field="input")

    return SweepConfig(
        channel=H,
        constraint=constraint,
        amplitudes=tuple(float(a) for a in amps),
        amplitudes_db=tuple(float(d) for d in dbs),
        db_convention=convention,
        bounds=bounds,
        base=base,
        samples=samples,
        seed=seed,
        out=get("out")[0],
        workers=workers,
        pam_gap_constant=pgc,
        preset=get("preset")[0],
        mi_input=mi_input,
    )


def _parse_mi_input(entries, H):
    if "input" not in entries:
        return None
    kind, line = entries["input"]
    if kind == "pam":
        if "pam_points" not in entries or "pam_amplitudes" not in entries:
            raise ConfigError("pam input needs pam_points and pam_amplitudes", line=line,
                              field="input")
        pr, pl = entries["pam_points"]
        ar, al = entries["pam_amplitudes"]
        pts = _floats(pr, "pam_points", pl)
        amps = _floats(ar, "pam_amplitudes", al)
        if len(pts) != H.n_t or any(p != int(p) or p < 1 for p in pts):
            raise ConfigError(f"need {H.n_t} positive integer point counts", line=pl,
                              field="pam_points")
        if len(amps) != H.n_t:
            raise ConfigError(f"need {H.n_t} amplitudes", line=al, field="pam_amplitudes")
        return ("pam", tuple(int(p) for p in pts), tuple(amps))
    if kind == "point":
        if "point" not in entries:
            raise ConfigError("point input needs point", line=line, field="input")
        raw, pl = entries["point"]
        x = _floats(raw, "point", pl)
        if len(x) != H.n_t:
            raise ConfigError(f"need {H.n_t} coordinates", line=pl, field="point")
        return ("point", tuple(x))
    raise ConfigError("input must be 'pam' or 'point'", line=line, field="input")


def load_config(path=None, text=None, overrides=None, mode="sweep"):
    """Parse a config file (or text); ``overrides`` replace validated fields."""
    if text is None:
        if path is None:
            raise ConfigError("no configuration given")
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    base_dir = os.path.dirname(os.path.abspath(path)) if path else "."
    cfg = build_config(parse_lines(text), base_dir, mode)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg


def preset_config(name, overrides=None, mode="sweep"):
    return load_config(text=f"preset = {name}\n", overrides=overrides, mode=mode)
