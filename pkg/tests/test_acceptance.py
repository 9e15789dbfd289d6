"""Acceptance criteria, one test each; a pass/fail line per criterion is
printed in the pytest terminal summary."""
import csv
import subprocess
import sys
import time

import numpy as np
import pytest

from iceshed.clipping import clip_tet, clip_tets, partition
from iceshed.forces import centrifugal_force, force_profile
from iceshed.mesh_core import tet_signed_volumes, validate
from iceshed.quasi3d import (ExtrusionSpec, IceSection, extrude, interpolate_section,
                             rectangle_section, resample_section)
from iceshed.shedding import SheddingConfig, find_shedding, iterative_cut
from iceshed.strength import constant_model
from iceshed.synthetic import write_growth_case

from slab_oracle import Slab, oracle_root, random_shedding_slabs, random_slab, window_slab

R = 1.18


def test_c1_clipping_conservation(record):
    rng = np.random.default_rng(20240601)
    n = 10_000
    pts = rng.uniform(-1.0, 1.0, (n + n // 100, 4, 3))
    vol = np.abs(tet_signed_volumes(pts))
    keep = vol > 1e-6      # drop near-flat draws, then keep exactly n
    pts, vol = pts[keep][:n], vol[keep][:n]
    z = pts[:, :, 2]
    c = z.min(axis=1) + rng.uniform(0, 1, len(pts)) * np.ptp(z, axis=1)

    # timed: the batch clip used on whole meshes; the root side is computed
    # independently as the tip side of the flipped plane
    start = time.perf_counter()
    above = clip_tets(pts, z - c[:, None]).volume_above
    below = clip_tets(pts, c[:, None] - z).volume_above
    elapsed = time.perf_counter() - start
    worst = float(np.max(np.abs(above + below - vol) / vol))

    # untimed: the same pairs through the single-tet API
    for i in range(len(pts)):
        up = clip_tet(pts[i], c[i])
        down = clip_tet(pts[i], -c[i], axis=(0.0, 0.0, -1.0))
        worst = max(worst, abs(up.volume_above + down.volume_above - vol[i]) / vol[i],
                    abs(up.volume_above + up.volume_below - vol[i]) / vol[i])
    ok = len(pts) == n and worst <= 1e-12 and elapsed < 5.0
    record("C1 clipping conservation", ok,
           f"{len(pts)} pairs, max rel err {worst:.2e}, batch clip {elapsed:.3f} s")


def test_c2_unit_tet_oracle(record, unit_tet_mesh):
    tet = unit_tet_mesh.nodes[unit_tet_mesh.tets[0]]
    errs = []
    for t in (0.1, 0.25, 0.5, 0.9):
        res = clip_tet(tet, t)
        errs.append(abs(res.volume_above - (1 - t) ** 3 / 6))
        errs.append(abs(res.cut_area - (1 - t) ** 2 / 2))
    record("C2 unit-tet clip oracle", max(errs) <= 1e-12, f"max abs err {max(errs):.2e}")


def test_c3_slab_force_oracle(record):
    rng = np.random.default_rng(7)
    worst, tets = 0.0, []
    start = time.perf_counter()
    for _ in range(20):
        s = random_slab(rng)
        mesh = s.mesh(cells=555, n_contact=8, n_side=8, n_top=8)
        tets.append(mesh.n_tets)
        z = np.linspace(s.r0, s.R, 12)[1:-1]
        curve = force_profile(mesh, z, s.omega, constant_model(s.sigma_c, s.tau_a), -8.0)
        for got, want in ((curve.F_C, s.F_C(z)), (curve.F_coh, s.F_coh(z)),
                          (curve.F_adh, s.F_adh(z))):
            worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 30.0 and min(tets) >= 45_000
    record("C3 slab force oracle", ok,
           f"20 slabs x 10 stations, ~{int(np.mean(tets))} tets, max rel err {worst:.2e}, "
           f"{elapsed:.1f} s")


def test_c4_shedding_location_oracle(record):
    cases = [(Slab(), oracle_root(Slab().balance, Slab().r0, Slab().R))]
    cases += random_shedding_slabs(99, 20)
    worst_ratio, worked = 0.0, None
    for s, root in cases:
        mesh = s.mesh(cells=60)
        cfg = SheddingConfig()
        res = find_shedding(mesh, s.omega, constant_model(s.sigma_c, s.tau_a), -8.0, cfg)
        allowed = max(cfg.tolerance_for(mesh), 0.005 * s.R)
        err = abs(res.z_s - root) if res.shed else np.inf
        worst_ratio = max(worst_ratio, err / allowed)
        if worked is None:
            worked = (res.z_s, root)
    ok = worst_ratio <= 1.0 and abs(worked[1] - 1.080) < 1e-3
    record("C4 shedding location oracle", ok,
           f"21 slabs, worst error {worst_ratio:.3f} x allowance; worked case "
           f"z_s={worked[0]:.5f} m vs oracle {worked[1]:.5f} m ({worked[1] / R:.3f} R)")


def test_c5_fallback_necessity(record):
    s = window_slab(0.83 * R, 0.86 * R)
    mesh = s.mesh()
    model = constant_model(s.sigma_c, s.tau_a)
    z = np.linspace(s.r0, s.R, 11)
    between = not np.any(s.balance(z) > 0)
    plain = iterative_cut(mesh, s.omega, model, -8.0)
    fitted = find_shedding(mesh, s.omega, model, -8.0)
    ok = between and not plain.shed and fitted.shed and fitted.fallback_used
    record("C5 fallback necessity", ok,
           f"without fitting shed={plain.shed}, with fitting shed={fitted.shed} "
           f"at {fitted.z_s / R:.4f} R")


def _random_meshes(rng):
    meshes = [Slab().mesh(cells=9, n_contact=2, n_side=2, n_top=2)]
    for _ in range(4):
        n = 12
        t = np.sort(rng.uniform(0.1, np.pi - 0.1, n))
        rad = rng.uniform(0.4, 1.0, n) * 0.02
        outer = np.vstack([[0.02, 0.0], np.column_stack([rad * np.cos(t), rad * np.sin(t)]),
                           [-0.02, 0.0]])
        contact = np.array([(-0.02, 0.0), (0.0, 0.0), (0.02, 0.0)])
        a = IceSection(outer, contact, rng.uniform(0.5, 0.7))
        b = IceSection(outer * [1.0, rng.uniform(0.5, 1.5)], contact, rng.uniform(1.0, 1.2))
        meshes.append(extrude(ExtrusionSpec((a, b), 7, 24)))
    return meshes


def test_c6_omega_scaling_and_additivity(record):
    rng = np.random.default_rng(31)
    meshes = _random_meshes(rng)
    worst_scale = worst_add = 0.0
    count = 0
    for i in range(1000):
        mesh = meshes[i % len(meshes)]
        lo, hi = mesh.span_bounds()
        planes = np.sort(rng.uniform(lo, hi, rng.integers(2, 6)))
        if np.any(np.diff(planes) <= 1e-9):
            continue
        pieces = partition(mesh, planes)
        omega = rng.uniform(1.0, 150.0)
        k = rng.uniform(0.1, 10.0)
        for p in pieces:
            base = centrifugal_force(p, omega, mesh.density)
            if base > 0:
                scaled = centrifugal_force(p, k * omega, mesh.density)
                worst_scale = max(worst_scale, abs(scaled - k ** 2 * base) / (k ** 2 * base))
        whole = centrifugal_force(partition(mesh, planes[:1])[1], omega, mesh.density)
        merged = pieces[1]
        for p in pieces[2:]:
            merged = merged.merge(p)
        parts = sum(centrifugal_force(p, omega, mesh.density) for p in pieces[1:])
        for got in (parts, centrifugal_force(merged, omega, mesh.density)):
            worst_add = max(worst_add, abs(got - whole) / whole)
        count += 1
    ok = count >= 990 and worst_scale <= 1e-12 and worst_add <= 1e-12
    record("C6 omega scaling and additivity", ok,
           f"{count} decompositions, k^2 err {worst_scale:.2e}, additivity err {worst_add:.2e}")


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array(rows, dtype=float)


def _growth_case(root, steps=9):
    k = np.arange(1, steps + 1)
    return write_growth_case(root, 0.002 * k, 0.006 * k, contact_width=0.03, flare=2.0,
                             extra={"case.name": "synthetic-growth", "case.temperature": "-8",
                                    "case.accretion_dt": "40", "rotor.rpm": "600"})


def _shed(*args):
    return subprocess.run([sys.executable, "-m", "iceshed.cli", *map(str, args)],
                          capture_output=True, text=True)


def test_c7_growth_trend(record, tmp_path):
    case = _growth_case(tmp_path / "case")
    proc = _shed("run", "--case", case, "--out", tmp_path / "out")
    files = sorted((tmp_path / "out").glob("step_*_forces.csv"),
                   key=lambda p: int(p.name.split("_")[1]))
    data = [_read_csv(p) for p in files]
    z = data[0][:, 0]
    interior = z < z[-1]            # the tip plane carries no ice on its tip side
    adh = np.array([d[:, 3] for d in data])
    fc = np.array([d[:, 1] for d in data])
    coh = np.array([d[:, 2] for d in data])
    adh_dev = float(np.max(np.abs(adh - adh[0]) / np.where(adh[0] > 0, adh[0], 1.0)))
    fc_up = bool(np.all(np.diff(fc[:, interior], axis=0) > 0))
    coh_up = bool(np.all(np.diff(coh[:, interior], axis=0) > 0))
    same_z = all(np.array_equal(d[:, 0], z) for d in data)
    ok = (proc.returncode == 0 and len(data) == 9 and same_z and adh_dev <= 1e-10
          and fc_up and coh_up)
    record("C7 growth trend at -8 C", ok,
           f"{len(data)} steps, F_adh max rel dev {adh_dev:.1e}, F_C increasing={fc_up}, "
           f"F_coh increasing={coh_up}; {proc.stdout.strip()}")


def test_c8_determinism(record, tmp_path):
    case = _growth_case(tmp_path / "case")
    a = _shed("run", "--case", case, "--out", tmp_path / "a")
    b = _shed("run", "--case", case, "--out", tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = names == sorted(p.name for p in (tmp_path / "b").iterdir()) and all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    ok = a.returncode == 0 and b.returncode == 0 and same and "report.json" in names
    record("C8 determinism", ok, f"{len(names)} files compared, identical={same}")


def _blend_integral(a, b, n=2001):
    t = np.linspace(0.0, 1.0, n)
    areas = np.array([interpolate_section(a, b, ti).area() for ti in t])
    h = 1.0 / (n - 1)
    simpson = h / 3 * (areas[0] + areas[-1] + 4 * areas[1:-1:2].sum() + 2 * areas[2:-1:2].sum())
    return (b.station_radius - a.station_radius) * simpson


def test_c9_extrusion_fidelity(record):
    sec = rectangle_section(0.02, 0.05, 0.59, 3, 5, 3)
    const = extrude(ExtrusionSpec((sec,), 25, None, (0.59, 1.18)))
    const_err = abs(const.volume() - 1e-3 * 0.59) / (1e-3 * 0.59)

    blend_errs, meshes = [], [const]
    pairs = [(rectangle_section(np.sqrt(1e-3), np.sqrt(1e-3), 0.59),
              rectangle_section(np.sqrt(3e-3), np.sqrt(3e-3), 1.18)),
             (rectangle_section(0.03, 0.004, 0.59, 4, 2, 4),
              rectangle_section(0.03, 0.012, 1.18, 4, 2, 4))]
    for a, b in pairs:
        mesh = extrude(ExtrusionSpec((a, b), 20, 32))
        meshes.append(mesh)
        ref = _blend_integral(resample_section(a, 32), resample_section(b, 32))
        blend_errs.append(abs(mesh.volume() - ref) / ref)
    watertight = all(not validate(m) for m in meshes)
    ok = const_err <= 1e-9 and max(blend_errs) <= 1e-2 and watertight
    record("C9 extrusion fidelity", ok,
           f"constant rel err {const_err:.1e}, blended rel err {max(blend_errs):.1e}, "
           f"watertight={watertight}")
