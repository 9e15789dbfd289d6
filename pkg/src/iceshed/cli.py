"""``shed`` command line tool.

Exit codes: 0 completed (shed or not), 1 input error, 2 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .driver import (CaseConfig, ConfigError, RotorConfig, StepError, emit_report,
                     load_case, parse_config_text, run_multistep, strength_from_values)
from .mesh_core import MeshError, load_mesh, write_mesh
from .quasi3d import SectionError, extrude, read_manifest
from .shedding import Criterion, SheddingConfig
from .strength import StrengthRangeError

LOG = logging.getLogger("iceshed")

INPUT_ERRORS = (ConfigError, StepError, MeshError, SectionError, StrengthRangeError,
                FileNotFoundError, IsADirectoryError, PermissionError)


def _override_shedding(cfg: SheddingConfig, args) -> SheddingConfig:
    kw = {}
    if args.criterion:
        kw["criterion"] = Criterion(args.criterion)
    if args.tolerance is not None:
        kw["z_tolerance"] = args.tolerance
    if getattr(args, "n_subdivisions", None) is not None:
        kw["n_subdivisions"] = args.n_subdivisions
    return replace(cfg, **kw) if kw else cfg


def cmd_run(args) -> int:
    case = load_case(args.case)
    case.shedding = _override_shedding(case.shedding, args)
    report = run_multistep(case)
    emit_report(report, args.out)
    _summary(report)
    return 0


def cmd_analyze(args) -> int:
    mesh_path = Path(args.mesh).resolve()
    mesh = load_mesh(mesh_path, "msh" if mesh_path.suffix.lower() == ".msh" else "native")
    strength_values = parse_config_text(Path(args.strength).read_text()) if args.strength else {}
    strength = strength_from_values(strength_values)
    radius = args.radius
    if radius is None:
        radius = mesh.span_bounds()[1] or 1.0
    case = CaseConfig(
        rotor=RotorConfig(radius=radius, rpm=args.rpm),
        temperature=args.temp,
        accretion_dt=args.dt,
        steps=[str(mesh_path)],
        strength=strength,
        density=args.density,
        name=mesh_path.name,
    )
    case.shedding = _override_shedding(case.shedding, args)
    report = run_multistep(case)
    emit_report(report, args.out)
    _summary(report)
    return 0


def cmd_extrude(args) -> int:
    mesh = extrude(read_manifest(args.manifest))
    write_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_tets} tets, volume {mesh.volume():.6g} m^3")
    return 0


def _summary(report) -> None:
    if report.shed_time is None:
        print(f"no shedding over {len(report.steps)} step(s)")
    else:
        print(f"shedding at t = {report.shed_time:g} s, z_s = {report.z_s:.6g} m "
              f"({report.shed_location:.4f} R)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shed", description="Ice shedding prediction for rotor blades")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def search_opts(sp):
        sp.add_argument("--criterion", choices=[c.value for c in Criterion])
        sp.add_argument("--tolerance", type=float, help="location precision in meters")

    r = sub.add_parser("run", help="multi-step run from a case config")
    r.add_argument("--case", required=True)
    r.add_argument("--out", required=True)
    search_opts(r)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="single-mesh shedding analysis")
    a.add_argument("--mesh", required=True)
    a.add_argument("--rpm", type=float, required=True)
    a.add_argument("--temp", type=float, required=True, help="air temperature, degC")
    a.add_argument("--out", required=True)
    a.add_argument("--density", type=float, default=900.0)
    a.add_argument("--radius", type=float, help="rotor radius (default: mesh tip)")
    a.add_argument("--dt", type=float, default=1.0, help="accretion time of the shape, s")
    a.add_argument("--strength", help="config file with strength.* keys")
    a.add_argument("--n-subdivisions", type=int)
    search_opts(a)
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("extrude", help="mesh a section manifest")
    e.add_argument("--manifest", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_extrude)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"shed: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"shed: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        LOG.exception("internal error")
        print(f"shed: internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
