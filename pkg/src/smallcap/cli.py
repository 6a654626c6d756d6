"""Command line interface: smallcap caps|example|project|oracle|slice|envelope|sweep|report."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import caps as capsmod
from .config import ConfigError, load_config
from .report import dumps_json, from_json, render
from .sweep import SweepConfig, run_sweep, verdict

log = logging.getLogger("smallcap")

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _family(args):
    if args.kind == "sector":
        return capsmod.sector_planks(args.R, args.scale_s)
    if args.curve == "parabola":
        return capsmod.parabola_caps(args.R, args.alpha)
    return capsmod.cone_caps(args.R, args.beta)


def _emit(args, text: str):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        log.info("wrote %s", args.output)
    else:
        sys.stdout.write(text)


def cmd_caps(args) -> int:
    _emit(args, dumps_json(_family(args).to_dict()))
    return EXIT_PASS


def _build_example(args):
    from . import extremals as ex
    if args.example == "concentrated":
        return ex.concentrated_parabola(args.R)
    if args.example == "flat":
        k = ex.middle_theta(args.R) if args.theta_index is None else args.theta_index
        return ex.flat_parabola(args.R, k)
    if args.example == "cone_bump":
        return ex.cone_bump(args.R)
    return ex.random_cone_function(args.R, args.seed)


def cmd_example(args) -> int:
    from .signal import lp_norm, save_grid_function
    if not args.output:
        raise ValueError("example needs --output")
    f = _build_example(args)
    raw, side = save_grid_function(f, args.output)
    info = {"example": args.example, "R": args.R, "grid": f.grid.to_dict(),
            "f0": [f.at_origin().real, f.at_origin().imag], "l2": lp_norm(f, 2),
            "files": [str(raw), str(side)]}
    sys.stdout.write(dumps_json(info))
    return EXIT_PASS


def cmd_project(args) -> int:
    from .signal import decompose, load_grid_function, lp_norm, save_grid_function, smooth_partition
    if not args.input:
        raise ValueError("project needs --input")
    f = load_grid_function(args.input)
    part = smooth_partition(_family(args), f.grid)
    acc = np.zeros(f.grid.N, dtype=complex)
    sq = np.zeros(f.grid.N)
    l2 = []
    for _, fg in decompose(f, part):
        acc += fg.values
        sq += np.abs(fg.values) ** 2
        l2.append(lp_norm(fg, 2) ** 2)
    err = float(np.linalg.norm(acc - f.values) / max(np.linalg.norm(f.values), 1e-300))
    info = {"n_caps": len(part), "reconstruction_error": err, "cap_l2sq": l2,
            "f_lp": lp_norm(f, args.p)}
    if args.output:
        from .signal import GridFunction
        save_grid_function(GridFunction(f.grid, np.sqrt(sq)), args.output)
        info["square_function"] = args.output
    sys.stdout.write(dumps_json(info))
    return EXIT_PASS


def cmd_oracle(args) -> int:
    from .extremals import dyadic_radii, indicator_model
    fam = _family(args)
    field = indicator_model(fam)
    if fam.dim != 2:
        from .coneoverlap import total_integral
        total = total_integral(args.p, args.R, args.beta, "brute")
        out = {"R": args.R, "beta": args.beta, "p": args.p, "shell_sums": [], "total": total}
    else:
        radii = dyadic_radii(args.R)
        total, shells = field.power_sum(args.p / 2, shell_radii=radii)
        out = {"R": args.R, "alpha": args.alpha, "p": args.p, "radii": radii.tolist(),
               "shell_sums": shells.tolist(), "total": total}
    _emit(args, dumps_json(out))
    return EXIT_PASS


def cmd_slice(args) -> int:
    from .coneoverlap import slice_report
    rep = slice_report(args.R, args.beta, args.r, args.p, seed=args.seed)
    if args.method != "both":
        rep[{"brute": "analytic", "analytic": "brute"}[args.method]] = None
        rep["ratio"] = None
    _emit(args, dumps_json(rep))
    return EXIT_PASS


def cmd_envelope(args) -> int:
    from .envelope import ThetaDecomposition, envelope_summary
    f = _build_example(args) if args.input is None else None
    if f is None:
        from .signal import load_grid_function
        f = load_grid_function(args.input)
    dec = ThetaDecomposition(f, args.R)
    scales = None if args.scale_s is None else [args.scale_s]
    _emit(args, dumps_json(envelope_summary(dec, scales, args.lam)))
    return EXIT_PASS


def _sweep_config(args) -> SweepConfig:
    lo, hi = args.R_min, args.R_max
    Rs = []
    R = lo
    while R <= hi:
        Rs.append(R)
        R *= 2
    exponent = args.alpha if args.example in ("concentrated", "flat") else args.beta
    return SweepConfig(args.example, exponent, args.p, tuple(Rs), args.backend, args.jobs,
                       args.tolerance, args.theta_index, args.output)


def cmd_sweep(args) -> int:
    res = run_sweep(_sweep_config(args))
    _emit(args, render(res, args.format))
    return EXIT_PASS if res.verdict == "pass" else EXIT_FAIL


def cmd_report(args) -> int:
    if not args.input:
        raise ValueError("report needs --input")
    res = from_json(Path(args.input).read_text(encoding="utf-8"))
    if verdict(res.to_dict()) != res.verdict:
        raise ValueError("stored verdict does not match the recomputed one")
    _emit(args, render(res, args.format))
    return EXIT_PASS if res.verdict == "pass" else EXIT_FAIL


COMMANDS = {"caps": cmd_caps, "example": cmd_example, "project": cmd_project,
            "oracle": cmd_oracle, "slice": cmd_slice, "envelope": cmd_envelope,
            "sweep": cmd_sweep, "report": cmd_report}

TYPES = {"alpha": float, "beta": float, "p": float, "R": int, "R_min": int, "R_max": int,
         "r": float, "lam": float, "scale_s": float, "jobs": int, "seed": int,
         "tolerance": float, "theta_index": int}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smallcap", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="file of 'key = value' lines; flags override it")
    ap.add_argument("--curve", choices=["parabola", "cone"], default="parabola")
    ap.add_argument("--kind", choices=["gamma", "sector"], default="gamma")
    ap.add_argument("--example", choices=["concentrated", "flat", "cone_bump", "random"],
                    default="concentrated")
    ap.add_argument("--alpha", type=float, default=0.75)
    ap.add_argument("--beta", type=float, default=0.75)
    ap.add_argument("--p", type=float, default=8.0)
    ap.add_argument("--R", type=int, default=256)
    ap.add_argument("--R-min", dest="R_min", type=int, default=128)
    ap.add_argument("--R-max", dest="R_max", type=int, default=2048)
    ap.add_argument("--r", type=float, default=0.0, help="slice height")
    ap.add_argument("--scale-s", dest="scale_s", type=float)
    ap.add_argument("--theta-index", dest="theta_index", type=int)
    ap.add_argument("--backend", choices=["indicator", "fft"], default="indicator")
    ap.add_argument("--method", choices=["brute", "analytic", "both"], default="both")
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--tolerance", type=float)
    ap.add_argument("--input")
    ap.add_argument("--output")
    ap.add_argument("--format", choices=["json", "csv", "markdown"], default="json")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def parse_args(argv=None) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        values = load_config(args.config)
        known = {a.dest for a in ap._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        ap.set_defaults(**{k: TYPES.get(k, str)(v) for k, v in values.items()})
        args = ap.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (ConfigError, OSError) as e:
        print(f"smallcap: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as e:      # report every failure as exit code 1
        log.debug("failure", exc_info=True)
        print(f"smallcap: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
