"""Command-line front end: ``adrm <subcommand> --config run.ini [--out PATH] [--seed N] [--workers N]``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from ._ipm import BarrierError
from .analysis import mi_standard_error, standard_noise, theory_curve, mi_estimate
from .baselines import SCHEMES
from .channel import draw_channel, mean_channel
from .codebook import DesignError, design_codebook_sca
from .config import ConfigError, watt_to_dbm
from .engine import ROLE_CHANNEL, run_ber_sweep, stream
from .modem import qam
from .runconfig import RunConfig, load_run_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
ROLE_THEORY = 2


def _meta_lines(run: RunConfig, command: str, extra: dict | None = None) -> str:
    meta = {"tool": f"adrm {__version__}", "command": command, "seed": run.seed,
            "config": run.system.to_dict()}
    if run.sweep is not None:
        meta["sweep"] = {k: getattr(run.sweep, k) for k in
                         ("p_ap_grid", "bits_per_point", "channels_per_point", "csi_delta",
                          "noise_mode", "codebook_policy")}
    meta.update(extra or {})
    return "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in meta.items())


def _need_sweep(run: RunConfig):
    if run.sweep is None:
        raise ConfigError("this command needs a [sweep] section")
    return run.sweep


def cmd_design(run: RunConfig, args) -> str:
    cfg = run.system
    const = qam(cfg.mod_order)
    channel = mean_channel(cfg) if args.mean_channel else draw_channel(cfg, stream(run.seed, ROLE_CHANNEL, 0))
    try:
        codebook, trace = design_codebook_sca(channel, const, cfg, run.power_form, run.init)
    except DesignError as exc:
        raise DesignError(f"{exc} (P_AP={watt_to_dbm(cfg.p_ap):.2f} dBm)") from exc
    extra = {"channel": "mean" if args.mean_channel else "drawn",
             "tau_per_iter": [float(f"{t:.12g}") for t in trace.tau_per_iter],
             "min_distance_per_iter": [float(f"{d:.12g}") for d in trace.min_distance_per_iter],
             "iterations": trace.iterations, "converged": trace.converged}
    return _meta_lines(run, "design", extra) + codebook.to_text()


def cmd_ber(run: RunConfig, args, scheme_name: str | None = None) -> str:
    sweep = _need_sweep(run)
    scheme = run.build_scheme(scheme_name)
    curve = run_ber_sweep(run.system, sweep, scheme, workers=args.workers)
    return curve.to_csv()


def cmd_theory(run: RunConfig, args) -> str:
    sweep = _need_sweep(run)
    cfg = run.system
    const = qam(cfg.mod_order)

    def design(cfg_i):
        return design_codebook_sca(mean_channel(cfg_i), const, cfg_i, run.power_form, run.init)[0]

    curve = theory_curve(cfg, const, sweep.p_ap_grid, design, mgf=run.mgf, mi_samples=run.mi_samples,
                         rng=stream(run.seed, ROLE_THEORY))
    lines = ["p_ap_dBm,abep_bound,mi"]
    for p, b, m in zip(curve.p_ap_grid, curve.abep_bound, curve.mi_estimate):
        lines.append(f"{watt_to_dbm(p):.6f},{b:.9e},{m:.9e}")
    return _meta_lines(run, "theory", {"mgf": run.mgf, "mi_samples": run.mi_samples}) + "\n".join(lines) + "\n"


def cmd_mi(run: RunConfig, args) -> str:
    sweep = _need_sweep(run)
    cfg = run.system
    const = qam(cfg.mod_order)
    channel = draw_channel(cfg, stream(run.seed, ROLE_CHANNEL, 0))
    noise = standard_noise(cfg.codebook_order * cfg.mod_order, run.mi_samples, stream(run.seed, ROLE_THEORY))
    lines = ["p_ap_dBm,mi,stderr"]
    for p in sweep.p_ap_grid:
        cfg_i = cfg.replace(p_ap=p)
        cb, _ = design_codebook_sca(channel, const, cfg_i, run.power_form, run.init)
        mi = mi_estimate(channel.h, cb, const, cfg_i, noise=noise)
        se = mi_standard_error(channel.h, cb, const, cfg_i, noise)
        lines.append(f"{watt_to_dbm(p):.6f},{mi:.9e},{se:.9e}")
    return _meta_lines(run, "mi", {"mi_samples": run.mi_samples}) + "\n".join(lines) + "\n"


def cmd_baseline_compare(run: RunConfig, args) -> str:
    sweep = _need_sweep(run)
    rows = ["scheme,p_ap_dBm,ber,errors,trials,stderr"]
    flags = {}
    for name in ("adrm",) + SCHEMES:
        scheme = run.build_scheme(name)
        rate = getattr(scheme, "rate", run.system.rate)
        if rate != run.system.rate:
            raise ConfigError(f"{name} carries {rate} bpcu but the configuration carries {run.system.rate}")
        curve = run_ber_sweep(run.system, sweep, scheme, workers=args.workers)
        body = curve.csv_body().splitlines()[1:]
        rows += [f"{name},{line}" for line in body]
        flags[name] = {"low_confidence_dBm": [round(float(watt_to_dbm(p)), 6)
                                              for p in curve.p_ap[curve.low_confidence]],
                       "params": scheme.describe()}
    return _meta_lines(run, "baseline-compare", {"schemes": flags}) + "\n".join(rows) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adrm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"adrm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "design": "design an AAP codebook for one channel",
        "ber": "Monte-Carlo BER sweep for the configured scheme",
        "theory": "ABEP union bound and MI on the sweep grid",
        "mi": "mutual information of one drawn channel over the sweep grid",
        "mimo-ber": "BER sweep of the multi-antenna scheme",
        "baseline-compare": "BER of ADRM and every benchmark on one grid",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="INI configuration file")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, metavar="U64", help="override the master seed")
        p.add_argument("--workers", type=int, default=1, metavar="N", help="worker processes")
        if name == "design":
            p.add_argument("--mean-channel", action="store_true",
                           help="design on the mean channel instead of a drawn one")
    return parser


COMMANDS = {
    "design": cmd_design,
    "ber": cmd_ber,
    "theory": cmd_theory,
    "mi": cmd_mi,
    "mimo-ber": lambda run, args: cmd_ber(run, args, "adrm-mimo"),
    "baseline-compare": cmd_baseline_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        run = load_run_config(text)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            run = run.with_seed(args.seed)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.command == "mimo-ber" and run.sweep is not None and run.sweep.csi_delta > 0:
            raise ConfigError("mimo-ber supports perfect CSI only")
        out = COMMANDS[args.command](run, args)
    except ConfigError as exc:
        print(f"adrm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DesignError, BarrierError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"adrm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
