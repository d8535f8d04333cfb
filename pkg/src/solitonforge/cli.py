"""Command-line surface: builds soliton states and emits CSV/JSON artifacts.

Numeric output is printed with 17 significant digits so identical inputs and
seeds give byte-identical files.  Exit codes: 2 for bad usage or config, 3
for numerical failures (with a structured JSON error on stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

# honor the thread cap before numpy spins up its pools
_threads = os.environ.get("SOLITON_FORGE_THREADS")
if _threads:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, _threads)

import numpy as np

from . import backlund, conserved, evolution, twosoliton
from .core import BetaPoly, Grid, GridField, PhasePoint, phase_point_from_kappas
from .errors import SolitonForgeError

_FMT = "%.17g"


def _parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "")
    t = t.replace("i", "j")
    if t in ("j", "+j"):
        t = "1j"
    if t == "-j":
        t = "-1j"
    try:
        return complex(t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("bad complex number %r" % text) from exc


def _parse_grid(text: str) -> Grid:
    try:
        n_str, len_str = text.split(",")
        return Grid.centered(int(n_str), float(len_str))
    except (ValueError, SolitonForgeError) as exc:
        raise argparse.ArgumentTypeError("grid must be n,length") from exc


def _parse_region(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("region must be x0,x1,y0,y1")
    return tuple(parts)


def _parse_floats(text: str):
    return [float(v) for v in text.split(",")]


class RunConfig:
    """Validated command configuration: argparse schema + --param overrides."""

    def __init__(self, args: argparse.Namespace):
        self.command = args.command
        self.parameters = args

    def apply_overrides(self):
        for item in getattr(self.parameters, "param", None) or ():
            if "=" not in item:
                raise SolitonForgeError("--param expects key=value")
            key, val = item.split("=", 1)
            attr = key.replace("-", "_")
            if not hasattr(self.parameters, attr):
                raise SolitonForgeError("unknown parameter %r" % key)
            try:
                parsed = json.loads(val)
            except json.JSONDecodeError:
                parsed = val
            setattr(self.parameters, attr, parsed)
        return self.parameters


def _write_json(doc_text: str, path):
    if path is None:
        sys.stdout.write(doc_text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(doc_text + "\n")


def _load_point(args) -> PhasePoint:
    if getattr(args, "point", None):
        with open(args.point) as fh:
            return PhasePoint.from_json(fh.read())
    if not args.z:
        raise SolitonForgeError("need --point or at least one --z")
    zs = [_parse_complex(z) for z in args.z]
    kappas = [_parse_complex(k) for k in (args.kappa or ["0"] * len(zs))]
    if len(kappas) != len(zs):
        raise SolitonForgeError("--kappa count must match --z count")
    return phase_point_from_kappas(zs, kappas)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="solitonforge",
        description="multisoliton states of focusing NLS/mKdV: construction, "
                    "scattering, conserved quantities, and dynamics")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, grid=True):
        p.add_argument("--out", help="output file (default: stdout for JSON)")
        p.add_argument("--param", action="append",
                       help="config override key=value (JSON-typed)")
        if grid:
            p.add_argument("--grid", type=_parse_grid,
                           default=Grid.centered(4096, 80.0),
                           help="n,length (default 4096,80)")

    p = sub.add_parser("make-soliton", help="PhasePoint -> GridField CSV")
    p.add_argument("--z", action="append", help="spectral parameter (repeatable)")
    p.add_argument("--kappa", action="append",
                   help="scattering parameter for each --z")
    p.add_argument("--point", help="PhasePoint JSON file")
    add_common(p)

    p = sub.add_parser("spectrum", help="GridField CSV -> SpectrumReport JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--region", type=_parse_region, required=True)
    add_common(p, grid=False)

    p = sub.add_parser("add", help="dress a state with solitons")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--point", required=True, help="PhasePoint JSON file")
    add_common(p, grid=False)

    p = sub.add_parser("remove", help="split a state into background + point")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--region", type=_parse_region, required=True)
    p.add_argument("--out-point", help="where to write the PhasePoint JSON")
    add_common(p, grid=False)

    p = sub.add_parser("energies", help="EnergyReport JSON for a state")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--es", type=_parse_floats, default=[],
                   help="comma list of fractional Sobolev indices")
    p.add_argument("--region", type=_parse_region,
                   default=conserved.DEFAULT_REGION)
    add_common(p, grid=False)

    p = sub.add_parser("two-soliton", help="closed form + effective parameters")
    p.add_argument("--z1", required=True)
    p.add_argument("--z2", required=True)
    p.add_argument("--beta", type=_parse_floats, default=[0, 0, 0, 0],
                   help="beta0,beta1,beta2,beta3")
    p.add_argument("--out-params", help="effective-parameter JSON file")
    add_common(p)

    p = sub.add_parser("trajectory", help="regime CSV under a flow")
    p.add_argument("--z1", required=True)
    p.add_argument("--z2", required=True)
    p.add_argument("--beta", type=_parse_floats, default=[0, 0, 0, 0])
    p.add_argument("--flow", choices=("nls", "mkdv"), default="nls")
    p.add_argument("--times", type=_parse_floats, required=True,
                   help="comma list, or start,stop,count with --linspace")
    p.add_argument("--linspace", action="store_true")
    add_common(p, grid=False)

    p = sub.add_parser("evolve", help="pseudospectral time evolution")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--flow", choices=("nls", "mkdv"), default="nls")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--record", type=_parse_floats, default=None)
    add_common(p, grid=False)

    p = sub.add_parser("stability", help="orbital stability experiment CSV")
    p.add_argument("--point", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--shape", default="gaussian",
                   choices=("gaussian", "sech-bump", "band-limited-noise"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flow", choices=("nls", "mkdv"), default="nls")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-final", type=float, default=10.0)
    p.add_argument("--record", type=_parse_floats, default=None)
    add_common(p)
    return ap


def _cmd_make_soliton(args):
    point = _load_point(args)
    field = backlund.add_solitons(GridField.zero(args.grid), point,
                                  check_background=False)
    field.to_csv(args.out or "soliton.csv")
    return 0


def _cmd_spectrum(args):
    u = GridField.from_csv(args.infile)
    report = backlund.locate_spectrum(u, args.region)
    _write_json(report.to_json(), args.out)
    return 0


def _cmd_add(args):
    u = GridField.from_csv(args.infile)
    with open(args.point) as fh:
        point = PhasePoint.from_json(fh.read())
    backlund.add_solitons(u, point).to_csv(args.out or "dressed.csv")
    return 0


def _cmd_remove(args):
    v = GridField.from_csv(args.infile)
    u, point = backlund.remove_solitons(v, args.region)
    u.to_csv(args.out or "background.csv")
    _write_json(point.to_json(), args.out_point or "point.json")
    return 0


def _cmd_energies(args):
    u = GridField.from_csv(args.infile)
    report = conserved.energy_report(u, s_values=args.es, region=args.region)
    _write_json(report.to_json(), args.out)
    return 0


def _cmd_two_soliton(args):
    p = twosoliton.TwoSolParams(_parse_complex(args.z1),
                                _parse_complex(args.z2), args.beta)
    twosoliton.closed_form_field(p, args.grid).to_csv(args.out or "two.csv")
    eff = twosoliton.effective_params(p)

    def clean(v):
        if isinstance(v, complex):
            return [clean(v.real), clean(v.imag)]
        if isinstance(v, float) and not np.isfinite(v):
            return None
        return v

    doc = {k: clean(getattr(eff, k))
           for k in ("z_plus", "z_minus", "x_plus", "x_minus", "theta_plus",
                     "theta_minus", "alpha0", "sigma0", "gamma00", "x0",
                     "theta", "two_bump")}
    _write_json(json.dumps(doc), args.out_params)
    return 0


def _cmd_trajectory(args):
    p = twosoliton.TwoSolParams(_parse_complex(args.z1),
                                _parse_complex(args.z2), args.beta)
    times = args.times
    if args.linspace:
        if len(times) != 3:
            raise SolitonForgeError("--linspace expects start,stop,count")
        times = list(np.linspace(times[0], times[1], int(times[2])))
    rows = twosoliton.trajectory(p, args.flow, times)
    twosoliton.trajectory_csv(rows, args.out or "trajectory.csv")
    return 0


def _cmd_evolve(args):
    u = GridField.from_csv(args.infile)
    dt = args.dt or (1e-3 if args.flow == "nls" else 2e-4)
    record = args.record or [args.t_final]
    cfg = evolution.EvolveConfig(args.flow, dt, args.t_final, tuple(record))
    snaps = evolution.evolve(u, cfg)
    base = args.out or "evolved.csv"
    stem, ext = os.path.splitext(base)
    for i, snap in enumerate(snaps):
        path = base if len(snaps) == 1 else "%s_t%02d%s" % (stem, i, ext)
        snap.to_csv(path)
    return 0


def _cmd_stability(args):
    with open(args.point) as fh:
        point = PhasePoint.from_json(fh.read())
    dt = args.dt or 1e-4
    record = args.record or list(np.linspace(0.0, args.t_final, 11))
    cfg = evolution.EvolveConfig(args.flow, dt, args.t_final, tuple(record))
    spec = evolution.PerturbationSpec(shape=args.shape, seed=args.seed)
    report = evolution.stability_experiment(point, args.eps, spec, cfg,
                                            grid=args.grid)
    report.to_csv(args.out or "stability.csv")
    return 0


_HANDLERS = {
    "make-soliton": _cmd_make_soliton,
    "spectrum": _cmd_spectrum,
    "add": _cmd_add,
    "remove": _cmd_remove,
    "energies": _cmd_energies,
    "two-soliton": _cmd_two_soliton,
    "trajectory": _cmd_trajectory,
    "evolve": _cmd_evolve,
    "stability": _cmd_stability,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = RunConfig(args)
    try:
        args = config.apply_overrides()
        return _HANDLERS[args.command](args)
    except SolitonForgeError as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 3
    except OSError as exc:
        sys.stderr.write(json.dumps(
            {"error": "OSError", "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
