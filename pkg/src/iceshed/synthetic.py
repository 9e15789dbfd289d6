"""Synthetic accretion sequences for demos and tests.

Real per-step ice shapes come from an accretion solver. These helpers write a
stand-in: a flared section over a fixed contact strip, whose thickness grows
step by step at a root and a tip station. Every step shares the same contact
arc, so the adhesion footprint never changes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .quasi3d import IceSection, write_section


def flared_section(station_radius: float, thickness: float, contact_width: float,
                   flare: float = 0.0, n_contact: int = 4) -> IceSection:
    """Trapezoid of height ``thickness`` standing on a contact strip.

    The top edge is wider than the contact by ``2 * flare * thickness``, so
    the area is ``thickness * (contact_width + flare * thickness)``.
    """
    if not thickness > 0 or not contact_width > 0:
        raise ValueError("thickness and contact width must be positive")
    half = contact_width / 2
    top = half + flare * thickness
    contact = np.column_stack([np.linspace(-half, half, n_contact + 1), np.zeros(n_contact + 1)])
    outer = np.array([(half, 0.0), (top, thickness), (-top, thickness), (-half, 0.0)])
    return IceSection(outer, contact, station_radius)


def write_growth_case(out_dir, root_thickness: Sequence[float], tip_thickness: Sequence[float],
                      *, radius: float = 1.18, root_fraction: float = 0.5,
                      contact_width: float = 0.02, flare: float = 0.0,
                      spanwise_cells: int = 40, resample_count: int | None = 24,
                      extra: dict | None = None) -> Path:
    """Write sections, one manifest per step and ``case.cfg`` into ``out_dir``.

    ``root_thickness[k]`` and ``tip_thickness[k]`` give the ice thickness at
    ``root_fraction * radius`` and at the tip for step ``k + 1``. Keys in
    ``extra`` are added to the case file verbatim (e.g. ``case.temperature``).
    Returns the case file path.
    """
    if len(root_thickness) != len(tip_thickness) or not len(root_thickness):
        raise ValueError("need matching, non-empty thickness sequences")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    r0 = root_fraction * radius
    manifests = []
    for k, (tr, tt) in enumerate(zip(root_thickness, tip_thickness), 1):
        write_section(flared_section(r0, tr, contact_width, flare), out / f"step{k}_root.sec")
        write_section(flared_section(radius, tt, contact_width, flare), out / f"step{k}_tip.sec")
        name = f"step{k}.manifest"
        rc = "none" if resample_count is None else str(resample_count)
        (out / name).write_text(f"sections = step{k}_root.sec, step{k}_tip.sec\n"
                                f"spanwise_cells = {spanwise_cells}\n"
                                f"resample_count = {rc}\n")
        manifests.append(name)
    values = {"case.steps": ", ".join(manifests), "rotor.radius": format(radius, ".17g")}
    values.update(extra or {})
    path = out / "case.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()))
    return path
