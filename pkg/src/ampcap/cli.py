"""Command-line front end: ``ampcap {sweep,audit,mi,fig2,fig3}``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from . import audit
from .config import load_config, parse_lines, preset_config
from .distributions import PamConstellation, PamProduct, PointMass
from .errors import AmpcapError, ConfigError
from .oracle import mutual_information_discrete
from .sweep import format_csv, run_sweep

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _workers(args):
    if args.workers is not None:
        return args.workers
    env = os.environ.get("AMPCAP_WORKERS")
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ConfigError(f"AMPCAP_WORKERS must be an integer, got {env!r}") from None
        if w < 1:
            raise ConfigError("AMPCAP_WORKERS must be >= 1")
        return w
    return None


def _overrides(args):
    return {"seed": args.seed, "samples": args.samples, "out": args.out, "workers": _workers(args)}


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args, mode, preset=None):
    if args.config:
        cfg = load_config(args.config, overrides=_overrides(args), mode=mode)
    elif preset:
        cfg = preset_config(preset, overrides=_overrides(args), mode=mode)
    else:
        raise ConfigError(f"{args.command} needs --config")
    return cfg


def cmd_sweep(args, preset=None):
    cfg = _load(args, "sweep", preset)
    rows = run_sweep(cfg)
    _emit(format_csv(cfg, rows), cfg.out)
    return EXIT_OK


def _config_instances(cfg):
    label = cfg.preset or "config"
    return [
        audit.Instance(label, cfg.channel, cfg.space(A), A) for A in cfg.amplitudes
    ]


def _audit_chunk(job):
    instances, constant = job
    return [audit.audit_instance(i, constant) for i in instances]


def _default_audit_settings(path):
    """Settings for a config without a channel: the shipped ensemble is audited."""
    with open(path, encoding="utf-8") as fh:
        entries = parse_lines(fh.read())
    if any(k in entries for k in ("channel", "channel_csv", "preset")):
        return None
    extra = set(entries) - {"pam_gap_constant", "out", "workers"}
    if extra:
        raise ConfigError(f"keys {sorted(extra)} need a channel", field=sorted(extra)[0])
    settings = {"pam_gap_constant": None, "out": None, "workers": 1}
    if "pam_gap_constant" in entries:
        raw, line = entries["pam_gap_constant"]
        try:
            settings["pam_gap_constant"] = float(raw)
        except ValueError:
            raise ConfigError("expected a number", line=line, field="pam_gap_constant") from None
    if "out" in entries:
        settings["out"] = entries["out"][0]
    if "workers" in entries:
        raw, line = entries["workers"]
        if not raw.isdigit() or int(raw) < 1:
            raise ConfigError("must be an integer >= 1", line=line, field="workers")
        settings["workers"] = int(raw)
    return settings


def cmd_audit(args):
    defaults = _default_audit_settings(args.config) if args.config else None
    if defaults is not None:
        instances = audit.default_ensemble()
        constant = defaults["pam_gap_constant"]
        out = args.out or defaults["out"]
        workers = _workers(args) or defaults["workers"]
    elif args.config:
        cfg = load_config(args.config, overrides=_overrides(args), mode="audit")
        instances = _config_instances(cfg)
        constant = cfg.pam_gap_constant
        out, workers = cfg.out, cfg.workers
    else:
        instances = audit.default_ensemble()
        constant = None
        out, workers = args.out, _workers(args) or 1
    if constant is None:
        constant = audit.PAM_GAP_CONSTANT

    if workers > 1 and len(instances) > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [instances[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_audit_chunk, [(c, constant) for c in chunks]))
        per_inst = [None] * len(instances)
        for k, part in enumerate(parts):
            for j, certs in enumerate(part):
                per_inst[k + j * workers] = certs
    else:
        per_inst = [audit.audit_instance(i, constant) for i in instances]
    certs = [c for group in per_inst for c in group]

    _emit(audit.format_certificates_csv(certs), out)
    report = audit.format_report(certs)
    report_path = args.report or (os.path.splitext(out)[0] + ".report.txt" if out else None)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(report)
    sys.stderr.write(report)
    return EXIT_FAILED if audit.audit_failed(certs) else EXIT_OK


def _mi_distribution(spec):
    if spec[0] == "pam":
        return PamProduct([PamConstellation(n, a) for n, a in zip(spec[1], spec[2])])
    return PointMass(spec[1])


def cmd_mi(args):
    cfg = _load(args, "mi")
    est = mutual_information_discrete(_mi_distribution(cfg.mi_input), cfg.channel,
                                      samples=cfg.samples, seed=cfg.seed, workers=cfg.workers)
    buf = io.StringIO()
    buf.write(f"# seed={cfg.seed} samples={cfg.samples}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["estimate_bits", "std_error_bits", "samples", "seed"])
    w.writerow([repr(est.value), repr(est.std_error), est.samples, est.seed])
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ampcap",
        description="Capacity bounds for amplitude-constrained MIMO Gaussian channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "sweep": "evaluate selected bounds over an amplitude grid",
        "audit": "run gap certificates (default ensemble without --config)",
        "mi": "Monte-Carlo mutual information of a discrete input",
        "fig2": "2x2 diagonal figure preset sweep",
        "fig3": "1x3 SVD-precoding figure preset sweep",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--workers", type=int)
        if name == "audit":
            p.add_argument("--report", metavar="PATH", help="human-readable report file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    for flag in ("seed", "samples", "workers"):
        v = getattr(args, flag)
        if v is not None and v < (0 if flag == "seed" else 1):
            sys.stderr.write(f"ampcap: --{flag} out of range\n")
            return EXIT_USAGE
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command in ("fig2", "fig3"):
            return cmd_sweep(args, preset=args.command)
        if args.command == "audit":
            return cmd_audit(args)
        return cmd_mi(args)
    except ConfigError as exc:
        sys.stderr.write(f"ampcap: config error: {exc}\n")
        return EXIT_USAGE
    except AmpcapError as exc:
        sys.stderr.write(f"ampcap: {type(exc).__name__}: {exc}\n")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
