"""Centrifugal, cohesion and adhesion forces of ice pieces.

Forces on flow-labeled faces (aerodynamic pressure) are taken as zero.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clipping import PieceDecomposition, PlaneTotals, as_radii, partition
from .mesh_core import IceMesh
from .strength import StrengthModel

CSV_HEADER = ("z_m", "F_centrifugal_N", "F_cohesion_N", "F_adhesion_N")


def rpm_to_omega(rpm: float) -> float:
    return float(rpm) * 2.0 * np.pi / 60.0


def centrifugal_force(piece: PieceDecomposition, omega: float, density: float) -> float:
    """Sum of ``m_i * omega**2 * r_i`` over the clipped elements of a piece."""
    if omega < 0:
        raise ValueError("omega must be non-negative")
    return float(density * omega ** 2 * piece.radial_moment)


def cohesion_force(cut_area: float, sigma_c: float) -> float:
    if cut_area < 0 or sigma_c < 0:
        raise ValueError("cut area and cohesion strength must be non-negative")
    return float(sigma_c * cut_area)


def adhesion_force(piece: PieceDecomposition, tau_a: float) -> float:
    if tau_a < 0:
        raise ValueError("adhesion strength must be non-negative")
    return float(tau_a * piece.adhesion_area)


@dataclass(frozen=True)
class ForceSample:
    """Forces at a cut ``z``: centrifugal and adhesion of all ice tipward of
    the cut, cohesion across the cut itself."""

    z: float
    F_C: float
    F_coh: float
    F_adh: float

    @property
    def resistance(self) -> float:
        return self.F_coh + self.F_adh


@dataclass
class ForceCurve:
    samples: list = field(default_factory=list)
    omega: float = 0.0
    temperature: float = float("nan")

    def __post_init__(self):
        self.samples = sorted(self.samples, key=lambda s: s.z)

    def __len__(self):
        return len(self.samples)

    @property
    def z(self) -> np.ndarray:
        return np.array([s.z for s in self.samples])

    @property
    def F_C(self) -> np.ndarray:
        return np.array([s.F_C for s in self.samples])

    @property
    def F_coh(self) -> np.ndarray:
        return np.array([s.F_coh for s in self.samples])

    @property
    def F_adh(self) -> np.ndarray:
        return np.array([s.F_adh for s in self.samples])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in self.samples:
            w.writerow([format(v, ".17g") for v in (s.z, s.F_C, s.F_coh, s.F_adh)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, omega: float = 0.0, temperature: float = float("nan")):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise ValueError("unexpected force-curve CSV header")
        samples = [ForceSample(*(float(v) for v in r)) for r in rows[1:] if r]
        return cls(samples, omega, temperature)


def force_profile(mesh: IceMesh, planes, omega: float, model: StrengthModel,
                  T: float) -> ForceCurve:
    """Force samples at each plane from a piece-by-piece partition.

    Centrifugal and adhesion forces are accumulated over the pieces tipward
    of each plane, starting from the tip.
    """
    radii = as_radii(planes)
    sigma_c = model.cohesion_strength(T)
    tau_a = model.adhesion_strength(T)
    pieces = partition(mesh, radii)
    fc = [centrifugal_force(p, omega, mesh.density) for p in pieces]
    fa = [adhesion_force(p, tau_a) for p in pieces]
    samples = []
    acc_c = acc_a = 0.0
    for k in range(len(radii) - 1, -1, -1):
        acc_c += fc[k + 1]
        acc_a += fa[k + 1]
        coh = cohesion_force(pieces[k + 1].cut_area_root_side, sigma_c)
        samples.append(ForceSample(float(radii[k]), acc_c, coh, acc_a))
    return ForceCurve(samples, omega, T)


def samples_from_totals(totals: PlaneTotals, omega: float, density: float,
                        sigma_c: float, tau_a: float) -> list:
    """Convert tip-side geometric totals at each plane into force samples."""
    scale = density * omega ** 2
    return [ForceSample(float(z), float(scale * m), float(sigma_c * a), float(tau_a * s))
            for z, m, a, s in zip(totals.radii, totals.moment_above,
                                  totals.cut_area, totals.adhesion_above)]
