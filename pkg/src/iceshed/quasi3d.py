"""Quasi-3D ice geometry: 2D ice sections extruded along the blade span.

A section is the ice cross-section at one spanwise station, split into the
free ice surface (``outer_loop``) and the ice/blade interface
(``contact_loop``). The closed section polygon is the contact arc followed by
the outer arc. Meshing sweeps a single ear-clipped triangulation through
spanwise layers and splits every prism into three tets.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .mesh_core import (DEFAULT_DENSITY, FaceLabel, IceMesh, boundary_faces,
                        reorient)

LOG = logging.getLogger(__name__)


class SectionError(ValueError):
    pass


class TriangulationError(SectionError):
    pass


def polygon_area(xy) -> float:
    """Signed shoelace area, positive for counterclockwise polygons."""
    xy = np.asarray(xy, float)
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        ux, uy, wx, wy = b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1]
        v = ux * wy - uy * wx
        # collinear points give rounding-level values of either sign
        if abs(v) <= 1e-12 * np.hypot(ux, uy) * np.hypot(wx, wy):
            return 0
        return (v > 0) - (v < 0)

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_seg(p1, p2, q1)) or (o2 == 0 and on_seg(p1, p2, q2))
            or (o3 == 0 and on_seg(q1, q2, p1)) or (o4 == 0 and on_seg(q1, q2, p2)))


def is_simple(poly) -> bool:
    """True if the closed polygon has no repeated vertices or crossing edges."""
    P = [tuple(p) for p in np.asarray(poly, float).tolist()]
    n = len(P)
    if n < 3 or len(set(P)) != n:
        return False
    for i in range(n):
        a, b = P[i], P[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a, b, P[j], P[(j + 1) % n]):
                return False
    return True


@dataclass(frozen=True, eq=False)
class IceSection:
    """Ice cross-section at one spanwise station.

    ``outer_loop`` runs from the last contact point back to the first one,
    so that ``contact_loop[:-1] + outer_loop[:-1]`` is the closed polygon.
    A contact arc given in the opposite direction is reversed on
    construction.
    """

    outer_loop: np.ndarray
    contact_loop: np.ndarray
    station_radius: float

    def __post_init__(self):
        outer = np.array(self.outer_loop, float).reshape(-1, 2)
        contact = np.array(self.contact_loop, float).reshape(-1, 2)
        if len(outer) < 2 or len(contact) < 2:
            raise SectionError("outer and contact arcs need at least two points each")
        if np.allclose(contact[0], outer[0]) and np.allclose(contact[-1], outer[-1]):
            contact = contact[::-1].copy()
        if not (np.array_equal(contact[-1], outer[0]) or np.allclose(contact[-1], outer[0])):
            raise SectionError("contact arc must end where the outer arc starts")
        if not np.allclose(contact[0], outer[-1]):
            raise SectionError("contact arc must start where the outer arc ends")
        if not self.station_radius > 0:
            raise SectionError("station radius must be positive")
        outer.setflags(write=False)
        contact.setflags(write=False)
        object.__setattr__(self, "outer_loop", outer)
        object.__setattr__(self, "contact_loop", contact)
        object.__setattr__(self, "station_radius", float(self.station_radius))

    def polygon(self) -> np.ndarray:
        return np.concatenate([self.contact_loop[:-1], self.outer_loop[:-1]])

    @property
    def n_contact_edges(self) -> int:
        return len(self.contact_loop) - 1

    def area(self) -> float:
        return polygon_area(self.polygon())

    def check(self) -> None:
        poly = self.polygon()
        if not is_simple(poly):
            raise SectionError(f"section at r={self.station_radius} is not a simple polygon")
        if not polygon_area(poly) > 0:
            raise SectionError(f"section at r={self.station_radius} is not counterclockwise")


def rectangle_section(width: float, thickness: float, station_radius: float,
                      n_contact: int = 1, n_side: int = 1, n_top: int = 1) -> IceSection:
    """Rectangular ice block whose bottom edge is bonded to the blade.

    ``n_*`` are the number of edges along each side, useful to control the
    triangle count of the extruded mesh.
    """
    w, t = float(width), float(thickness)
    contact = np.column_stack([np.linspace(0.0, w, n_contact + 1), np.zeros(n_contact + 1)])
    right = np.column_stack([np.full(n_side + 1, w), np.linspace(0.0, t, n_side + 1)])
    top = np.column_stack([np.linspace(w, 0.0, n_top + 1), np.full(n_top + 1, t)])
    left = np.column_stack([np.zeros(n_side + 1), np.linspace(t, 0.0, n_side + 1)])
    outer = np.concatenate([right, top[1:], left[1:]])
    return IceSection(outer, contact, station_radius)


def _arc_resample(points: np.ndarray, count: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if not s[-1] > 0:
        raise SectionError("cannot resample a zero-length loop")
    target = np.linspace(0.0, s[-1], count)
    out = np.column_stack([np.interp(target, s, points[:, 0]),
                           np.interp(target, s, points[:, 1])])
    out[0], out[-1] = points[0], points[-1]
    return out


def resample_polyline(points, count: int, closed: bool = False) -> np.ndarray:
    """Redistribute ``count`` vertices at equal arc-length spacing.

    For a closed loop the start vertex is kept and the closing edge is part
    of the arc; the returned loop is not repeated at the end.
    """
    if count < 2:
        raise SectionError("need at least two vertices")
    pts = np.asarray(points, float).reshape(-1, 2)
    if closed:
        return _arc_resample(np.vstack([pts, pts[:1]]), count + 1)[:-1]
    return _arc_resample(pts, count)


def resample_section(section: IceSection, count: int) -> IceSection:
    """Re-parameterize both arcs by arc length to ``count`` vertices each."""
    if count < 8:
        raise SectionError("resample count must be at least 8")
    outer = resample_polyline(section.outer_loop, count)
    contact = resample_polyline(section.contact_loop, count)
    return IceSection(outer, contact, section.station_radius)


def interpolate_section(a: IceSection, b: IceSection, t: float) -> IceSection:
    """Vertex-wise linear blend, ``t = 0`` gives ``a`` and ``t = 1`` gives ``b``."""
    if a.outer_loop.shape != b.outer_loop.shape or a.contact_loop.shape != b.contact_loop.shape:
        raise SectionError("sections must have matching vertex counts; resample first")
    if not 0.0 <= t <= 1.0:
        raise ValueError("blend fraction must lie in [0, 1]")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    outer = (1.0 - t) * a.outer_loop + t * b.outer_loop
    contact = (1.0 - t) * a.contact_loop + t * b.contact_loop
    # shared endpoints must stay bit-identical between the two arcs
    outer[0], outer[-1] = contact[-1], contact[0]
    r = (1.0 - t) * a.station_radius + t * b.station_radius
    return IceSection(outer, contact, r)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def ear_clip(poly, also=()) -> np.ndarray:
    """Triangulate a simple counterclockwise polygon by ear clipping.

    Collinear vertices are kept; an ear is accepted only if it has strictly
    positive area and no other vertex lies in or on it. Polygons in ``also``
    share the vertex numbering of ``poly``, and an ear must pass the same test
    in each of them, so the result is a valid triangulation of all of them.
    """
    polys = [np.asarray(poly, float)] + [np.asarray(q, float) for q in also]
    n = len(polys[0])
    if n < 3:
        raise TriangulationError("polygon needs at least 3 vertices")
    if any(q.shape != polys[0].shape for q in polys):
        raise TriangulationError("polygons must share a vertex count")
    tols = [1e-14 * float(np.ptp(q, axis=0).max()) ** 2 for q in polys]
    idx = list(range(n))
    tris = []

    def ear_quality(P, tol, k, m):
        # twice the area over the longest edge squared; -1 if not an ear
        a, b, c = P[idx[k - 1]], P[idx[k]], P[idx[(k + 1) % m]]
        area2 = _cross(a, b, c)
        if area2 <= tol:
            return -1.0
        mask = np.ones(m, bool)
        mask[[(k - 1) % m, k, (k + 1) % m]] = False
        q = P[idx][mask]
        if len(q):
            d1 = (b[0] - a[0]) * (q[:, 1] - a[1]) - (b[1] - a[1]) * (q[:, 0] - a[0])
            d2 = (c[0] - b[0]) * (q[:, 1] - b[1]) - (c[1] - b[1]) * (q[:, 0] - b[0])
            d3 = (a[0] - c[0]) * (q[:, 1] - c[1]) - (a[1] - c[1]) * (q[:, 0] - c[0])
            if np.any((d1 >= -tol) & (d2 >= -tol) & (d3 >= -tol)):
                return -1.0
        longest = max(np.dot(b - a, b - a), np.dot(c - b, c - b), np.dot(a - c, a - c))
        return area2 / longest

    # clipping the best-shaped ear first avoids painting the loop into a corner
    # when several polygons constrain the choice
    while len(idx) > 3:
        m = len(idx)
        best, best_q = -1, 0.0
        for k in range(m):
            q = min(ear_quality(P, tol, k, m) for P, tol in zip(polys, tols))
            if q > best_q:
                best, best_q = k, q
        if best < 0:
            raise TriangulationError("no ear found; polygon is not simple or is degenerate")
        tris.append((idx[best - 1], idx[best], idx[(best + 1) % m]))
        del idx[best]
    for P, tol in zip(polys, tols):
        if _cross(*P[idx]) <= tol:
            raise TriangulationError("degenerate final triangle")
    tris.append(tuple(idx))
    return np.array(tris, dtype=np.int64)


@dataclass(frozen=True)
class ExtrusionSpec:
    """How to sweep sections into a 3D ice volume.

    ``spanwise_cells`` layers are placed in every interval between
    consecutive stations (or across ``span_extent`` for a single section).
    ``resample_count`` of ``None`` keeps the input vertices, which then must
    already match between sections.
    """

    sections: tuple
    spanwise_cells: int = 10
    resample_count: int | None = 64
    span_extent: tuple | None = None

    def __post_init__(self):
        secs = tuple(self.sections)
        object.__setattr__(self, "sections", secs)
        if not secs:
            raise SectionError("at least one section is required")
        radii = [s.station_radius for s in secs]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise SectionError("station radii must be strictly increasing")
        if self.spanwise_cells < 1:
            raise SectionError("spanwise_cells must be >= 1")
        if self.resample_count is not None and self.resample_count < 8:
            raise SectionError("resample_count must be >= 8")
        if self.span_extent is not None:
            lo, hi = map(float, self.span_extent)
            if not hi > lo:
                raise SectionError("span extent must be increasing")
            object.__setattr__(self, "span_extent", (lo, hi))
        elif len(secs) == 1:
            raise SectionError("a single section needs a span_extent")

    def extent(self) -> tuple:
        if self.span_extent is not None:
            return self.span_extent
        return (self.sections[0].station_radius, self.sections[-1].station_radius)

    def layer_radii(self) -> np.ndarray:
        lo, hi = self.extent()
        knots = [lo] + [s.station_radius for s in self.sections
                        if lo < s.station_radius < hi] + [hi]
        out = [lo]
        for a, b in zip(knots, knots[1:]):
            out.extend(a + (b - a) * np.arange(1, self.spanwise_cells + 1) / self.spanwise_cells)
        out[-1] = hi
        return np.array(out)


def _section_at(sections: Sequence[IceSection], r: float) -> IceSection:
    radii = [s.station_radius for s in sections]
    if r <= radii[0]:
        return sections[0]
    if r >= radii[-1]:
        return sections[-1]
    j = int(np.searchsorted(radii, r, side="right")) - 1
    a, b = sections[j], sections[j + 1]
    if r == a.station_radius:
        return a
    return interpolate_section(a, b, (r - a.station_radius) / (b.station_radius - a.station_radius))


def prism_tets(tris: np.ndarray, n_vertices: int, n_layers: int) -> np.ndarray:
    """Split every triangular prism into three tets.

    Triangle vertices are sorted by index so that each quad face is cut along
    the diagonal joining its lower-index top vertex to its higher-index bottom
    vertex. Neighbouring prisms therefore agree on shared faces.
    """
    t = np.sort(np.asarray(tris, np.int64), axis=1)
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    blocks = []
    for layer in range(n_layers):
        lo = layer * n_vertices
        hi = lo + n_vertices
        blocks.append(np.column_stack([a + lo, b + lo, c + lo, a + hi]))
        blocks.append(np.column_stack([b + lo, c + lo, a + hi, b + hi]))
        blocks.append(np.column_stack([c + lo, a + hi, b + hi, c + hi]))
    if not blocks:
        return np.zeros((0, 4), np.int64)
    # interleave so that the three tets of each prism stay adjacent
    k = len(t)
    out = np.stack(blocks).reshape(n_layers, 3, k, 4).transpose(0, 2, 1, 3)
    return out.reshape(-1, 4)


def extrude(spec: ExtrusionSpec, density: float = DEFAULT_DENSITY) -> IceMesh:
    """Build a labeled tetrahedral mesh from the sections in ``spec``.

    Section ``(x, y)`` maps to ``(x, y, r)`` with the span axis along z.
    Side faces swept from contact edges are labeled adhesion; the rest of the
    side surface and both end caps are labeled flow.
    """
    sections = list(spec.sections)
    if spec.resample_count is not None:
        sections = [resample_section(s, spec.resample_count) for s in sections]
    for s in sections:
        s.check()
    shapes = {(s.outer_loop.shape, s.contact_loop.shape) for s in sections}
    if len(shapes) != 1:
        raise SectionError("sections have different vertex counts; set resample_count")

    radii = spec.layer_radii()
    layers = [_section_at(sections, r) for r in radii]
    polys = [s.polygon() for s in layers]
    nv = len(polys[0])
    n_contact = sections[0].n_contact_edges

    # one triangulation shared by every layer keeps the prisms conforming
    stations = [s.polygon() for s in sections]
    tris = ear_clip(stations[0], stations[1:])
    for p in polys:
        a, b, c = p[tris[:, 0]], p[tris[:, 1]], p[tris[:, 2]]
        if np.any(_cross(a.T, b.T, c.T) <= 0):
            raise TriangulationError("station triangulation inverts between stations")

    nodes = np.concatenate([np.column_stack([p, np.full(nv, r)]) for p, r in zip(polys, radii)])
    tets = reorient(nodes, prism_tets(tris, nv, len(radii) - 1))
    faces = boundary_faces(tets)

    vert = faces % nv
    layer = faces // nv
    cap = np.all(layer == layer[:, :1], axis=1)
    contact_edges = {frozenset((i, i + 1)) for i in range(n_contact)}
    labels = np.full(len(faces), FaceLabel.FLOW, dtype=np.int8)
    for i in np.flatnonzero(~cap):
        if frozenset(vert[i].tolist()) in contact_edges:
            labels[i] = FaceLabel.ADHESION
    # stable, deterministic face order
    order = np.lexsort(np.sort(faces, axis=1).T[::-1])
    return IceMesh(nodes, tets, faces[order], labels[order], (0.0, 0.0, 1.0), density)


# -- section and manifest files ---------------------------------------------

def format_section(section: IceSection) -> str:
    lines = [f"station_radius {section.station_radius:.17g}",
             f"outer {len(section.outer_loop)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in section.outer_loop.tolist()]
    lines.append(f"contact {len(section.contact_loop)}")
    lines += [f"{x:.17g} {y:.17g}" for x, y in section.contact_loop.tolist()]
    return "\n".join(lines) + "\n"


def write_section(section: IceSection, path) -> None:
    Path(path).write_text(format_section(section))


def parse_section(text: str) -> IceSection:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.replace(",", " ").split())
    radius, loops, pos = None, {}, 0
    try:
        while pos < len(rows):
            key = rows[pos][0].lower()
            if key == "station_radius":
                radius = float(rows[pos][1])
                pos += 1
            elif key in ("outer", "contact"):
                n = int(rows[pos][1])
                block = rows[pos + 1:pos + 1 + n]
                if len(block) != n or any(len(r) != 2 for r in block):
                    raise SectionError(f"{key} point list truncated")
                loops[key] = np.array([[float(v) for v in r] for r in block])
                pos += 1 + n
            else:
                raise SectionError(f"unexpected line {' '.join(rows[pos])!r}")
    except (IndexError, ValueError) as exc:
        raise SectionError(f"malformed section file: {exc}") from None
    if radius is None or set(loops) != {"outer", "contact"}:
        raise SectionError("section file needs station_radius, outer and contact")
    return IceSection(loops["outer"], loops["contact"], radius)


def read_section(path) -> IceSection:
    return parse_section(Path(path).read_text())


def read_manifest(path) -> ExtrusionSpec:
    """Read a ``key = value`` manifest listing section files for one ice shape.

    Keys: ``sections`` (comma-separated paths, relative to the manifest),
    ``spanwise_cells``, ``resample_count`` (integer or ``none``) and
    ``span_extent`` (two radii).
    """
    path = Path(path)
    values = {}
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SectionError(f"manifest line without '=': {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        values[k] = v
    if "sections" not in values:
        raise SectionError("manifest needs a 'sections' entry")
    files = [s.strip() for s in values["sections"].split(",") if s.strip()]
    sections = tuple(read_section(path.parent / f) for f in files)
    kw = {}
    if "spanwise_cells" in values:
        kw["spanwise_cells"] = int(values["spanwise_cells"])
    if "resample_count" in values:
        rc = values["resample_count"]
        kw["resample_count"] = None if rc.lower() == "none" else int(rc)
    if "span_extent" in values:
        kw["span_extent"] = tuple(float(x) for x in values["span_extent"].split(","))
    return ExtrusionSpec(sections, **kw)


def scaled_section(section: IceSection, thickness_scale: float) -> IceSection:
    """Scale the outer arc away from the contact chord, keeping the contact arc.

    Handy for synthetic accretion sequences where ice grows on a fixed
    footprint.
    """
    c0, c1 = section.contact_loop[0], section.contact_loop[-1]
    chord = c1 - c0
    normal = np.array([-chord[1], chord[0]]) / np.linalg.norm(chord)
    rel = section.outer_loop - c0
    along = rel @ chord / (chord @ chord)
    off = rel @ normal
    outer = c0 + along[:, None] * chord + (thickness_scale * off)[:, None] * normal
    outer[0], outer[-1] = section.contact_loop[-1], section.contact_loop[0]
    return replace(section, outer_loop=outer)
