"""Multi-step shedding runs: case configuration, orchestration and reports.

Ice shapes per accretion step are inputs (mesh files or section manifests).
Steps are evaluated in order and the run stops at the first step that sheds.
"""
from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forces import ForceCurve, force_profile, rpm_to_omega
from .mesh_core import DEFAULT_DENSITY, IceMesh, MeshError, load_mesh, total_mass
from .quasi3d import SectionError, extrude, read_manifest
from .shedding import Criterion, SheddingConfig, SheddingResult, find_shedding
from .strength import CurveKind, CurveSpec, StrengthModel, default_model

LOG = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class StepError(ValueError):
    """A step's ice source could not be read or meshed."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step


@dataclass(frozen=True)
class RotorConfig:
    radius: float = 1.18
    rpm: float = 600.0
    collective_pitch: float = 2.5
    twist: float = 2.17
    chord: float = 0.172

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("rotor radius must be positive")
        if self.rpm < 0:
            raise ConfigError("rpm must be non-negative")

    @property
    def omega(self) -> float:
        return rpm_to_omega(self.rpm)


@dataclass
class CaseConfig:
    rotor: RotorConfig = field(default_factory=RotorConfig)
    temperature: float = -8.0
    accretion_dt: float = 40.0
    steps: list = field(default_factory=list)
    strength: StrengthModel = field(default_factory=default_model)
    shedding: SheddingConfig = field(default_factory=SheddingConfig)
    density: float = DEFAULT_DENSITY
    name: str = ""
    msh_tags: dict = field(default_factory=lambda: {1: "adhesion", 2: "flow"})
    annotations: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        if not self.accretion_dt > 0:
            raise ConfigError("accretion_dt must be positive")
        if not self.steps:
            raise ConfigError("at least one accretion step is required")
        if not self.density > 0:
            raise ConfigError("density must be positive")
        lo, hi = self.strength.valid_range
        if not lo <= self.temperature <= hi:
            raise ConfigError(f"temperature {self.temperature} outside strength range {lo}..{hi}")

    def shedding_for_run(self) -> SheddingConfig:
        cfg = self.shedding
        if cfg.z_tolerance is None:
            cfg = SheddingConfig(cfg.n_subdivisions, 1e-3 * self.rotor.radius,
                                 cfg.max_refinements, cfg.criterion, cfg.force_fitting)
        return cfg

    def step_path(self, k: int) -> Path:
        p = Path(self.steps[k - 1])
        return p if p.is_absolute() else self.base_dir / p


# -- config file -------------------------------------------------------------

def _num(x: float) -> str:
    return format(float(x), ".17g")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str) -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        values[k] = v
    return values


def strength_from_values(values: dict, fallback: StrengthModel | None = None) -> StrengthModel:
    base = fallback or default_model()
    if not any(k.startswith("strength.") for k in values):
        return base

    def curve(name, default):
        kind = values.get(f"strength.{name}.kind")
        coeffs = values.get(f"strength.{name}.coeffs")
        if kind is None and coeffs is None:
            return default
        if kind is None or coeffs is None:
            raise ConfigError(f"strength.{name} needs both kind and coeffs")
        return CurveSpec.from_flat(kind, _floats(coeffs))

    try:
        coh = curve("cohesion", base.cohesion)
        adh = curve("adhesion", base.adhesion)
        rng = tuple(_floats(values["strength.range"])) if "strength.range" in values \
            else base.valid_range
        return StrengthModel(coh, adh, rng)
    except ValueError as exc:
        raise ConfigError(f"strength: {exc}") from None


def parse_case(text: str, base_dir=".") -> CaseConfig:
    v = dict(parse_config_text(text))
    known = set()

    def take(key, conv, default):
        known.add(key)
        if key not in v:
            return default
        try:
            return conv(v[key])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None

    rotor = RotorConfig(
        radius=take("rotor.radius", float, 1.18),
        rpm=take("rotor.rpm", float, 600.0),
        collective_pitch=take("rotor.collective_pitch", float, 2.5),
        twist=take("rotor.twist", float, 2.17),
        chord=take("rotor.chord", float, 0.172),
    )
    tol = take("shedding.z_tolerance", lambda s: None if s.lower() == "auto" else float(s), None)
    try:
        shed = SheddingConfig(
            n_subdivisions=take("shedding.n_subdivisions", int, 10),
            z_tolerance=tol,
            max_refinements=take("shedding.max_refinements", int, 12),
            criterion=take("shedding.criterion", Criterion, Criterion.SUM),
            force_fitting=take("shedding.force_fitting", _bool, True),
        )
    except ValueError as exc:
        raise ConfigError(f"shedding: {exc}") from None

    def tags(s):
        out = {}
        for item in s.split(","):
            if item.strip():
                k, _, lab = item.partition(":")
                out[int(k)] = lab.strip().lower()
        return out

    steps = take("case.steps", lambda s: [p.strip() for p in s.split(",") if p.strip()], [])
    strength = strength_from_values(v)
    known.update(k for k in v if k.startswith("strength."))
    annotations = {k.split(".", 1)[1]: val for k, val in v.items()
                   if k.startswith("annotation.")}
    known.update("annotation." + k for k in annotations)
    case = CaseConfig(
        rotor=rotor,
        temperature=take("case.temperature", float, -8.0),
        accretion_dt=take("case.accretion_dt", float, 40.0),
        steps=steps,
        strength=strength,
        shedding=shed,
        density=take("case.density", float, DEFAULT_DENSITY),
        name=take("case.name", str, ""),
        msh_tags=take("mesh.msh_tags", tags, {1: "adhesion", 2: "flow"}),
        annotations=annotations,
        base_dir=Path(base_dir),
    )
    unknown = sorted(set(v) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return case


def load_case(path) -> CaseConfig:
    path = Path(path)
    return parse_case(path.read_text(), base_dir=path.parent)


def format_case(case: CaseConfig) -> str:
    s = case.shedding
    lines = {
        "case.name": case.name,
        "case.temperature": _num(case.temperature),
        "case.accretion_dt": _num(case.accretion_dt),
        "case.density": _num(case.density),
        "case.steps": ", ".join(str(p) for p in case.steps),
        "rotor.radius": _num(case.rotor.radius),
        "rotor.rpm": _num(case.rotor.rpm),
        "rotor.collective_pitch": _num(case.rotor.collective_pitch),
        "rotor.twist": _num(case.rotor.twist),
        "rotor.chord": _num(case.rotor.chord),
        "strength.cohesion.kind": case.strength.cohesion.kind.value,
        "strength.cohesion.coeffs": ", ".join(_num(c) for c in case.strength.cohesion.flat()),
        "strength.adhesion.kind": case.strength.adhesion.kind.value,
        "strength.adhesion.coeffs": ", ".join(_num(c) for c in case.strength.adhesion.flat()),
        "strength.range": ", ".join(_num(c) for c in case.strength.valid_range),
        "shedding.n_subdivisions": str(s.n_subdivisions),
        "shedding.z_tolerance": "auto" if s.z_tolerance is None else _num(s.z_tolerance),
        "shedding.max_refinements": str(s.max_refinements),
        "shedding.criterion": s.criterion.value,
        "shedding.force_fitting": "true" if s.force_fitting else "false",
        "mesh.msh_tags": ", ".join(f"{k}:{v}" for k, v in sorted(case.msh_tags.items())),
    }
    for k, val in sorted(case.annotations.items()):
        lines[f"annotation.{k}"] = str(val)
    return "".join(f"{k} = {val}\n" for k, val in lines.items())


# -- run ---------------------------------------------------------------------

@dataclass
class StepReport:
    index: int
    time: float
    result: SheddingResult
    curve: ForceCurve
    n_tets: int
    volume: float
    mass: float

    @property
    def csv_name(self) -> str:
        return f"step_{self.index}_forces.csv"


@dataclass
class RunReport:
    case: CaseConfig
    steps: list = field(default_factory=list)
    shed_time: float | None = None
    shed_location: float | None = None   # z_s / R
    z_s: float | None = None


def build_step_mesh(case: CaseConfig, k: int) -> IceMesh:
    path = case.step_path(k)
    try:
        suffix = path.suffix.lower()
        if suffix in (".manifest", ".man"):
            return extrude(read_manifest(path), case.density)
        fmt = "msh" if suffix == ".msh" else "native"
        return load_mesh(path, fmt, case.density, tag_labels=case.msh_tags)
    except (OSError, MeshError, SectionError, ValueError) as exc:
        raise StepError(k, exc) from exc


def step_planes(mesh: IceMesh, n: int) -> np.ndarray:
    if mesh.n_tets == 0:
        return np.zeros(0)
    lo, hi = mesh.span_bounds()
    z = np.linspace(lo, hi, n + 1)
    z[0], z[-1] = lo, hi
    return z


def run_multistep(case: CaseConfig) -> RunReport:
    """Evaluate accretion steps in order, stopping at the first that sheds."""
    report = RunReport(case)
    omega = case.rotor.omega
    T = case.temperature
    cfg = case.shedding_for_run()
    for k in range(1, len(case.steps) + 1):
        mesh = build_step_mesh(case, k)
        planes = step_planes(mesh, cfg.n_subdivisions)
        if len(planes):
            curve = force_profile(mesh, planes, omega, case.strength, T)
        else:
            curve = ForceCurve([], omega, T)
        result = find_shedding(mesh, omega, case.strength, T, cfg)
        step = StepReport(k, k * case.accretion_dt, result, curve, mesh.n_tets,
                          mesh.volume() if mesh.n_tets else 0.0, total_mass(mesh))
        report.steps.append(step)
        LOG.info("step %d: shed=%s z_s=%s", k, result.shed, result.z_s)
        if result.shed:
            report.shed_time = step.time
            report.z_s = result.z_s
            report.shed_location = result.z_s / case.rotor.radius
            break
    return report


# -- report output -----------------------------------------------------------

_FLOAT = re.compile(r'"@@(.*?)@@"')


def _encode(obj):
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return f"@@{x:.17g}@@" if math.isfinite(x) else None
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj)}")


def dumps_report(data: dict) -> str:
    """JSON text with every float written at 17 significant digits."""
    text = json.dumps(_encode(data), indent=2)
    return _FLOAT.sub(lambda m: m.group(1), text) + "\n"


def _result_dict(res: SheddingResult, radius: float) -> dict:
    return {
        "shed": res.shed,
        "z_s_m": res.z_s,
        "z_s_over_R": None if res.z_s is None else res.z_s / radius,
        "shed_mass_kg": res.shed_mass,
        "fallback_used": res.fallback_used,
        "basis": res.basis,
        "iterations": [
            {
                "lo_m": p.lo, "hi_m": p.hi, "action": p.action,
                "candidate_m": p.candidate, "candidate_kind": p.candidate_kind,
                "planes": [{"z_m": s.z, "F_centrifugal_N": s.F_C, "F_cohesion_N": s.F_coh,
                            "F_adhesion_N": s.F_adh, "shed": f}
                           for s, f in zip(p.samples, p.shed_flags)],
            }
            for p in res.iterations
        ],
    }


def report_dict(report: RunReport) -> dict:
    case = report.case
    R = case.rotor.radius
    last = report.steps[-1].result if report.steps else SheddingResult()
    return {
        "case": {
            "name": case.name,
            "temperature_C": case.temperature,
            "accretion_dt_s": case.accretion_dt,
            "density_kg_m3": case.density,
            "rotor": {"radius_m": R, "rpm": case.rotor.rpm, "omega_rad_s": case.rotor.omega,
                      "collective_pitch_deg": case.rotor.collective_pitch,
                      "twist_deg": case.rotor.twist, "chord_m": case.rotor.chord},
            "criterion": case.shedding.criterion.value,
            "annotations": dict(sorted(case.annotations.items())),
        },
        "shed": report.shed_time is not None,
        "shed_time_s": report.shed_time,
        "shed_step": report.steps[-1].index if report.shed_time is not None else None,
        "z_s_m": report.z_s,
        "z_s_over_R": report.shed_location,
        "shed_mass_kg": last.shed_mass if report.shed_time is not None else None,
        "fallback_used": last.fallback_used if report.shed_time is not None else False,
        "steps": [
            {"step": s.index, "time_s": s.time, "forces_csv": s.csv_name,
             "mesh": {"tets": s.n_tets, "volume_m3": s.volume, "mass_kg": s.mass},
             **_result_dict(s.result, R)}
            for s in report.steps
        ],
    }


def emit_report(report: RunReport, out_dir) -> list:
    """Write ``report.json`` and one ``step_<k>_forces.csv`` per evaluated step."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for s in report.steps:
        path = out / s.csv_name
        s.curve.write_csv(path)
        written.append(path)
    path = out / "report.json"
    path.write_text(dumps_report(report_dict(report)))
    written.append(path)
    return written
