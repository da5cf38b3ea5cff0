"""Command line interface: `cqed <task> --config device.json ...`.

Writes delimited sweep output to --out (stdout by default) and, when
--figures DIR is given, renders the task's plots into that directory.
Exit codes: 0 on success, 2 for configuration or usage errors, 3 when
the sweep finished but some cells produced solver diagnostics.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import figures, sweep
from .params import ConfigError, load_config

__all__ = ["main", "build_parser"]


def _add_common(sp):
    sp.add_argument("--config", required=True,
                    help="device JSON file")
    sp.add_argument("--out", default="-",
                    help="output path, '-' for stdout (default)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="output format (default csv)")
    sp.add_argument("--workers", type=int,
                    default=int(os.environ.get("CQED_WORKERS", "1")),
                    help="worker processes (default $CQED_WORKERS or 1)")
    sp.add_argument("--figures", metavar="DIR", default=None,
                    help="also render figures into DIR")


def _add_flux_axis(sp):
    sp.add_argument("--omega-f-ghz", required=True, metavar="START:STOP:N",
                    help="flux bias axis in GHz (start:stop:count or a value)")


def _add_map_axes(sp):
    _add_flux_axis(sp)
    sp.add_argument("--omega-p-ghz", required=True, metavar="START:STOP:N",
                    help="pump axis in GHz (start:stop:count or a value)")
    sp.add_argument("--power-dbm", type=float, required=True,
                    help="pump power at the input port, dBm")
    sp.add_argument("--branch", choices=("ground", "excited", "combined"),
                    default="ground", help="thermal branch (default ground)")


def build_parser():
    p = argparse.ArgumentParser(
        prog="cqed",
        description="steady states, spectra and response maps of a "
                    "cavity-coupled flux qubit")
    sub = p.add_subparsers(dest="task", required=True)

    sp = sub.add_parser("transmission-map",
                        help="pump transmission over a flux/pump grid")
    _add_common(sp)
    _add_map_axes(sp)

    sp = sub.add_parser("imd", help="sideband signal/idler gain map")
    _add_common(sp)
    _add_map_axes(sp)
    sp.add_argument("--signal-offset-khz", type=float, default=100.0,
                    help="signal offset from the pump in kHz (default 100)")

    sp = sub.add_parser("shr-map",
                        help="transmission map on a harmonic qubit resonance")
    _add_common(sp)
    _add_map_axes(sp)
    sp.add_argument("--shr-order", type=int, default=2,
                    help="harmonic order n of omega_a ~ n*omega_p (default 2)")

    sp = sub.add_parser("bistability",
                        help="cubic response coefficients and onset vs flux")
    _add_common(sp)
    _add_flux_axis(sp)
    sp.add_argument("--pump-ghz", type=float, default=None,
                    help="pump frequency (default: the bare cavity)")
    sp.add_argument("--branch", choices=("ground", "excited", "combined"),
                    default="ground", help="thermal branch (default ground)")

    sp = sub.add_parser("spectrum", help="dressed level ladders vs flux")
    _add_common(sp)
    _add_flux_axis(sp)
    sp.add_argument("--n-max", type=int, default=3,
                    help="highest photon doublet (default 3)")
    sp.add_argument("--model", choices=("jc", "bs", "both"), default="both",
                    help="level model (default both)")
    return p


def _sweep_kwargs(args):
    kw = {"workers": args.workers}
    kw["omega_f_ghz"] = sweep.GridSpec.parse(args.omega_f_ghz)
    if args.task in ("transmission-map", "imd", "shr-map"):
        kw["omega_p_ghz"] = sweep.GridSpec.parse(args.omega_p_ghz)
        kw["power_dbm"] = args.power_dbm
        kw["branch"] = args.branch
    if args.task == "imd":
        kw["signal_offset_khz"] = args.signal_offset_khz
    if args.task == "shr-map":
        kw["shr_order"] = args.shr_order
    if args.task == "bistability":
        kw["branch"] = args.branch
        kw["pump_ghz"] = args.pump_ghz
    if args.task == "spectrum":
        kw["n_max"] = args.n_max
        kw["model"] = args.model
    return kw


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        result = sweep.run_sweep(args.task, config, **_sweep_kwargs(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    writer = sweep.write_csv if args.format == "csv" else sweep.write_json
    if args.out == "-":
        writer(result, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            writer(result, fh)
    if args.figures is not None:
        for path in figures.render_figures(result, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    if result.diagnostics:
        print(f"warning: {result.diagnostics} cells produced solver "
              "diagnostics", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
