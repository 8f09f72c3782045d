"""Command-line entry point: ``pdfrac run|preset|calibrate|verify``."""

import argparse
import logging
import sys
from pathlib import Path

from pdfrac.config import format_config, parse_config, preset
from pdfrac.errors import ConfigurationError, SimulationFault


def _cmd_run(args):
    cfg = parse_config(Path(args.config).read_text())
    overrides = {}
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.output_every is not None:
        overrides["output_every"] = args.output_every
    if args.vtk:
        overrides["write_vtk"] = True
    if overrides:
        cfg = cfg.with_changes(**overrides)
    from pdfrac.simulation import run

    out = Path(args.out) if args.out else Path(args.config).with_suffix("")
    result = run(cfg, outdir=out, keep_snapshots=False, progress=args.verbose)
    last = result.ledger.entries[-1]
    print(f"wrote {len(result.files)} files to {out}")
    print(f"t = {last.t:.6e} s, crack length = {last.crack_length:.6f} m, "
          f"fracture = {last.fracture:.6e} J, residual = {last.residual:.3e} J "
          f"(stopped by {result.stopped_by})")
    return 0


def _cmd_preset(args):
    cfg = preset(args.name, args.scale, args.horizon_ratio)
    text = format_config(cfg)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_calibrate(args):
    from pdfrac.material import calibrate

    m = calibrate(args.k, args.g, dim=args.d, density=args.density, horizon=args.horizon)
    print(f"psi_c = {m.potential.c!r}")
    print(f"psi_beta = {m.potential.beta!r}")
    print(f"r_c = {m.critical_argument!r}")
    print(f"mu = lambda = {m.mu!r}")
    print(f"bulk_modulus = {m.bulk_modulus!r}")
    print(f"energy_release_rate = {m.G!r}")
    print(f"shear_wave_speed = {m.shear_wave_speed!r}")
    print(f"dilatational_wave_speed = {m.dilatational_wave_speed!r}")
    return 0


def _cmd_verify(args):
    from pdfrac.verification import report_csv, report_text, run_suite

    rows = run_suite(args.suite)
    text = report_text(f"verification suite: {args.suite}", rows)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verification.txt").write_text(text)
        (out / "verification.csv").write_text(report_csv(rows))
    return 0 if all(ok for *_, ok in rows) else 1


def _scale(text):
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="pdfrac",
                                     description="Nonconvex peridynamic fracture simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a simulation from a config file")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: config path without suffix)")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--output-every", type=int, dest="output_every")
    p.add_argument("--vtk", action="store_true", help="also write legacy VTK snapshots")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("preset", help="print a built-in experiment config")
    p.add_argument("name", choices=["example1", "example2"])
    p.add_argument("--scale", type=_scale, default=1, help="grid divisor: 1, 2 or 4")
    p.add_argument("--horizon-ratio", type=float, dest="horizon_ratio",
                   help="set the horizon to this multiple of the grid spacing")
    p.add_argument("--out", help="write to this file instead of stdout")
    p.set_defaults(func=_cmd_preset)

    p = sub.add_parser("calibrate", help="potential parameters from bulk modulus and G")
    p.add_argument("--k", type=float, required=True, help="bulk modulus (Pa)")
    p.add_argument("--g", type=float, required=True, help="energy release rate (J/m^2)")
    p.add_argument("--d", type=int, default=2, choices=[2, 3])
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1.0)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("verify", help="run the calibration and limit checks")
    p.add_argument("--suite", choices=["quick", "full"], default="quick")
    p.add_argument("--out", help="directory for verification.txt and verification.csv")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, SimulationFault, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
