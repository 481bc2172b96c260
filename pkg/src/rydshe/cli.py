"""Command-line front end.

Subcommands map onto the figure-style data products:

  chi             susceptibility parts vs probe detuning
  fresnel         |r_p|, |r_s| and their ratio vs incidence angle
  shift-angle     spin shifts vs incidence angle
  shift-detuning  spin shifts vs probe detuning
  map             2-D spin-shift grid over (theta_i, Delta2)
  profile         transverse intensity profiles of the spin components
  verify          run the oracle/invariant suite, exit nonzero on failure
  defaults        print the canonical configuration

Exit codes: 0 success, 1 usage, 2 config, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import ConfigError, RydsheError
from .config import RunConfig, parse_config, serialize_config, with_overrides
from .sweeps import run_sweep, emit
from .oracle import verify_suite, report_as_dicts

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="configuration file")
    p.add_argument("--out", metavar="PATH", help="output file path")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--threads", type=int, default=1, metavar="N")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--density", type=float, metavar="MM3",
                   help="atom density in mm^-3")
    p.add_argument("--omega-c", type=float, metavar="MHZ")
    p.add_argument("--omega-p", type=float, metavar="MHZ")
    p.add_argument("--d2", type=float, metavar="UM")
    p.add_argument("--w0", type=float, metavar="UM")
    p.add_argument("--delta2", type=float, metavar="MHZ",
                   help="fixed probe detuning (non-detuning sweeps)")
    p.add_argument("--theta", type=float, metavar="DEG",
                   help="fixed incidence angle (non-angle sweeps)")


def build_parser() -> _Parser:
    ap = _Parser(prog="rydshe",
                 description="Spin-resolved beam shifts off a glass-Rydberg-"
                             "glass stack under ladder EIT")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        _add_overrides(p)
        return p

    p = cmd("chi", "susceptibility vs probe detuning")
    p.add_argument("--delta2-min", type=float, default=-10.0, metavar="MHZ")
    p.add_argument("--delta2-max", type=float, default=10.0, metavar="MHZ")
    p.add_argument("--steps", type=int, default=201)

    p = cmd("fresnel", "Fresnel coefficients vs incidence angle")
    p.add_argument("--theta-min", type=float, default=20.0, metavar="DEG")
    p.add_argument("--theta-max", type=float, default=50.0, metavar="DEG")
    p.add_argument("--steps", type=int, default=601)

    p = cmd("shift-angle", "spin shifts vs incidence angle")
    p.add_argument("--theta-min", type=float, default=33.5, metavar="DEG")
    p.add_argument("--theta-max", type=float, default=34.2, metavar="DEG")
    p.add_argument("--steps", type=int, default=501)

    p = cmd("shift-detuning", "spin shifts vs probe detuning")
    p.add_argument("--delta2-min", type=float, default=-5.0, metavar="MHZ")
    p.add_argument("--delta2-max", type=float, default=5.0, metavar="MHZ")
    p.add_argument("--steps", type=int, default=201)

    p = cmd("map", "2-D shift map over angle and detuning")
    p.add_argument("--theta-min", type=float, default=33.5, metavar="DEG")
    p.add_argument("--theta-max", type=float, default=34.2, metavar="DEG")
    p.add_argument("--theta-steps", type=int, default=71)
    p.add_argument("--delta2-min", type=float, default=-5.0, metavar="MHZ")
    p.add_argument("--delta2-max", type=float, default=5.0, metavar="MHZ")
    p.add_argument("--delta2-steps", type=int, default=51)

    p = cmd("profile", "transverse intensity profiles")
    p.add_argument("--full-map", action="store_true",
                   help="emit the separable 2-D intensity map as JSON")

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--out", metavar="PATH", help="write the JSON report here")

    sub.add_parser("defaults", help="print the canonical configuration")
    return ap


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = parse_config(text)
    else:
        cfg = RunConfig()
    return with_overrides(
        cfg,
        density_mm3=getattr(args, "density", None),
        omega_c_mhz=getattr(args, "omega_c", None),
        omega_p_mhz=getattr(args, "omega_p", None),
        d2_um=getattr(args, "d2", None),
        w0_um=getattr(args, "w0", None),
        delta2_mhz=getattr(args, "delta2", None),
        theta_deg=getattr(args, "theta", None),
    )


def _sweep_config(cfg: RunConfig, args) -> RunConfig:
    c = args.command
    if c == "chi":
        return with_overrides(cfg, quantity="chi", variable="Delta2",
                              sweep_min=args.delta2_min,
                              sweep_max=args.delta2_max, steps=args.steps,
                              variable2=None)
    if c == "fresnel":
        return with_overrides(cfg, quantity="fresnel", variable="theta_i",
                              sweep_min=args.theta_min,
                              sweep_max=args.theta_max, steps=args.steps,
                              variable2=None)
    if c == "shift-angle":
        return with_overrides(cfg, quantity="shift", variable="theta_i",
                              sweep_min=args.theta_min,
                              sweep_max=args.theta_max, steps=args.steps,
                              variable2=None)
    if c == "shift-detuning":
        return with_overrides(cfg, quantity="shift", variable="Delta2",
                              sweep_min=args.delta2_min,
                              sweep_max=args.delta2_max, steps=args.steps,
                              variable2=None)
    if c == "map":
        return with_overrides(cfg, quantity="map",
                              variable="theta_i", sweep_min=args.theta_min,
                              sweep_max=args.theta_max, steps=args.theta_steps,
                              variable2="Delta2", sweep_min2=args.delta2_min,
                              sweep_max2=args.delta2_max,
                              steps2=args.delta2_steps)
    if c == "profile":
        return with_overrides(cfg, quantity="profile")
    raise ConfigError(f"unhandled command {c}")


def _cmd_verify(args) -> int:
    results = verify_suite()
    width = max(len(r.check_name) for r in results)
    ok = True
    for r in results:
        ok &= r.status == "pass"
        print(f"{r.check_name:<{width}}  {r.status.upper():4}  "
              f"measured={r.measured:.3e}  threshold={r.threshold:.0e}  "
              f"({r.runtime_ms:.0f} ms)")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report_as_dicts(results), fh, indent=1, sort_keys=True)
        print(f"report written to {args.out}")
    print("verify:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERICAL


def _cmd_profile_full_map(cfg: RunConfig, out: str) -> None:
    import math as _m
    import numpy as np
    from .quantum import susceptibility
    from .multilayer import stack_fresnel
    from .beam_shift import intensity_maps_2d
    b = susceptibility(cfg.drive_params(), cfg.atom_params())
    stack = cfg.layer_stack(b.total)
    k0 = 2 * _m.pi / cfg.lambda_um
    th = _m.radians(cfg.theta_deg)
    rp, _ = stack_fresnel(stack, th, k0, "p")
    rs, _ = stack_fresnel(stack, th, k0, "s")
    x, y, i_in, i_p, i_m = intensity_maps_2d(cfg.beam_spec(), rp, rs)
    payload = {"x_um": list(np.round(x, 6)), "y_um": list(np.round(y, 6)),
               "i_incident": np.round(i_in, 9).tolist(),
               "i_plus": np.round(i_p, 9).tolist(),
               "i_minus": np.round(i_m, 9).tolist()}
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    print(f"2-D intensity map written to {out}")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "defaults":
            print(serialize_config(RunConfig()), end="")
            return EXIT_OK
        if args.command == "verify":
            return _cmd_verify(args)
        cfg = _load_config(args)
        cfg = _sweep_config(cfg, args)
        out = args.out or cfg.out_path
        fmt = args.format or cfg.out_format
        if args.command == "profile" and args.full_map:
            _cmd_profile_full_map(cfg, out)
            return EXIT_OK
        result = run_sweep(cfg, threads=max(1, args.threads))
        emit(result, fmt, out, cfg.precision)
        n_err = sum(1 for r in result.rows if r[-1] != "")
        print(f"{args.command}: {len(result.rows)} rows -> {out} "
              f"({result.wall_time_ms:.0f} ms"
              f"{f', {n_err} failed points' if n_err else ''})")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RydsheError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
