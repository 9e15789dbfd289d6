"""Exact clipping of tetrahedra and triangles by planes normal to the span axis.

Everything here is vectorized over elements. A clip keeps the exact convex
sub-polyhedron on the tip side of the plane (a tet or a triangular prism),
and the root side is its complement so that volumes and first moments are
conserved to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mesh_core import IceMesh, tet_signed_volumes, triangle_areas

SNAP = 1e-9


@dataclass(frozen=True, order=True)
class CuttingPlane:
    """Plane ``r = radial_coord`` normal to the span axis."""

    radial_coord: float

    def __post_init__(self):
        if not np.isfinite(self.radial_coord):
            raise ValueError("cutting plane position must be finite")


def as_radii(planes) -> np.ndarray:
    """Accept planes or bare floats, return a float array of positions."""
    return np.array([p.radial_coord if isinstance(p, CuttingPlane) else float(p)
                     for p in planes], dtype=float)


@dataclass
class ClipResult:
    volume_below: float
    volume_above: float
    cut_area: float
    centroid_above: np.ndarray
    centroid_below: np.ndarray


def signed_distance(point, plane, axis=(0.0, 0.0, 1.0)) -> float:
    """Positive on the tip side, negative on the root side."""
    c = plane.radial_coord if isinstance(plane, CuttingPlane) else float(plane)
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis)
    return float(np.dot(np.asarray(point, float), axis) - c)


def snap(heights: np.ndarray, eps: float) -> np.ndarray:
    h = np.array(heights, dtype=float)
    h[np.abs(h) <= eps] = 0.0
    return h


def _edge_t(Ha, Hb):
    # Ha and Hb have opposite signs (or Hb == 0), so the denominator is non-zero
    return Ha / (Ha - Hb)


def _vm(vol, *corners):
    # sub-tet volumes come from edge fractions times the parent volume, which
    # keeps full relative precision on flat tets; centroids stay Cartesian
    return vol, vol[:, None] * sum(corners) / 4.0


@dataclass
class TetClip:
    """Per-element clip of ``m`` tets by one plane."""

    volume: np.ndarray          # (m,)
    moment: np.ndarray          # (m, 3) volume times centroid
    volume_above: np.ndarray    # (m,)
    moment_above: np.ndarray    # (m, 3)
    cut_area: np.ndarray        # (m,) plane-interior intersection area
    face_area: np.ndarray       # (m,) area of a face lying on the plane, tet on tip side

    @property
    def volume_below(self):
        return self.volume - self.volume_above

    @property
    def moment_below(self):
        return self.moment - self.moment_above


def clip_tets(pts: np.ndarray, heights: np.ndarray) -> TetClip:
    """Clip tets by the plane ``height == 0``.

    Parameters
    ----------
    pts : (m, 4, 3) vertex positions
    heights : (m, 4) signed distances to the plane, already snapped

    The 3+1 and 2+2 vertex splits are handled explicitly. Vertices at zero
    height are grouped with the root side; this makes every edge-plane
    intersection well defined.
    """
    pts = np.asarray(pts, float).reshape(-1, 4, 3)
    h = np.asarray(heights, float).reshape(-1, 4)
    m = len(pts)
    vol = np.abs(tet_signed_volumes(pts))
    mom = vol[:, None] * pts.mean(axis=1)
    npos = np.count_nonzero(h > 0, axis=1)
    nneg = np.count_nonzero(h < 0, axis=1)

    vol_above = np.zeros(m)
    mom_above = np.zeros((m, 3))
    cut = np.zeros(m)
    face = np.zeros(m)

    full = nneg == 0
    vol_above[full] = vol[full]
    mom_above[full] = mom[full]

    on_face = full & (npos == 1)
    if np.any(on_face):
        idx = np.flatnonzero(on_face)
        keep = np.argsort(h[idx] > 0, axis=1, kind="stable")[:, :3]
        tri = np.take_along_axis(pts[idx], keep[:, :, None], axis=1)
        face[idx] = triangle_areas(tri)

    split = (npos > 0) & (nneg > 0)
    if np.any(split):
        idx = np.flatnonzero(split)
        order = np.argsort(-h[idx], axis=1, kind="stable")
        P = np.take_along_axis(pts[idx], order[:, :, None], axis=1)
        H = np.take_along_axis(h[idx], order, axis=1)
        k = npos[idx]

        sel = k == 1
        if np.any(sel):
            p, hh = P[sel], H[sel]
            rows = idx[sel]
            t = [_edge_t(hh[:, 0], hh[:, j]) for j in (1, 2, 3)]
            x = [p[:, 0] + tj[:, None] * (p[:, j] - p[:, 0]) for tj, j in zip(t, (1, 2, 3))]
            v, mo = _vm(vol[rows] * t[0] * t[1] * t[2], p[:, 0], *x)
            vol_above[rows] = v
            mom_above[rows] = mo
            cut[rows] = triangle_areas(np.stack(x, axis=1))

        sel = k == 3
        if np.any(sel):
            p, hh = P[sel], H[sel]
            rows = idx[sel]
            t = [_edge_t(hh[:, 3], hh[:, j]) for j in (0, 1, 2)]
            x = [p[:, 3] + tj[:, None] * (p[:, j] - p[:, 3]) for tj, j in zip(t, (0, 1, 2))]
            v, mo = _vm(vol[rows] * t[0] * t[1] * t[2], p[:, 3], *x)
            vol_above[rows] = vol[rows] - v
            mom_above[rows] = mom[rows] - mo
            cut[rows] = triangle_areas(np.stack(x, axis=1))

        sel = k == 2
        if np.any(sel):
            p, hh = P[sel], H[sel]
            rows = idx[sel]
            a, b = _edge_t(hh[:, 0], hh[:, 2]), _edge_t(hh[:, 0], hh[:, 3])
            c, d = _edge_t(hh[:, 1], hh[:, 2]), _edge_t(hh[:, 1], hh[:, 3])
            x02 = p[:, 0] + a[:, None] * (p[:, 2] - p[:, 0])
            x03 = p[:, 0] + b[:, None] * (p[:, 3] - p[:, 0])
            x12 = p[:, 1] + c[:, None] * (p[:, 2] - p[:, 1])
            x13 = p[:, 1] + d[:, None] * (p[:, 3] - p[:, 1])
            # tip-side wedge: triangles (p0, x02, x03) and (p1, x12, x13), split
            # into three tets whose barycentric determinants are the factors below
            V = vol[rows]
            v1, m1 = _vm(V * a * b, p[:, 0], x02, x03, p[:, 1])
            v2, m2 = _vm(V * b * c * (1 - a), x02, x03, p[:, 1], x12)
            v3, m3 = _vm(V * c * d * (1 - b), x03, p[:, 1], x12, x13)
            vol_above[rows] = v1 + v2 + v3
            mom_above[rows] = m1 + m2 + m3
            quad = 0.5 * np.linalg.norm(np.cross(x13 - x02, x12 - x03), axis=1)
            cut[rows] = quad

    np.clip(vol_above, 0.0, vol, out=vol_above)
    return TetClip(vol, mom, vol_above, mom_above, cut, face)


def clip_triangles(pts: np.ndarray, heights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Area of each triangle and of its part on the tip side of the plane."""
    pts = np.asarray(pts, float).reshape(-1, 3, 3)
    h = np.asarray(heights, float).reshape(-1, 3)
    area = triangle_areas(pts)
    above = np.zeros(len(pts))
    npos = np.count_nonzero(h > 0, axis=1)
    nneg = np.count_nonzero(h < 0, axis=1)
    full = nneg == 0
    above[full] = area[full]
    split = (npos > 0) & (nneg > 0)
    if np.any(split):
        idx = np.flatnonzero(split)
        order = np.argsort(-h[idx], axis=1, kind="stable")
        P = np.take_along_axis(pts[idx], order[:, :, None], axis=1)
        H = np.take_along_axis(h[idx], order, axis=1)
        one = npos[idx] == 1
        if np.any(one):
            p, hh = P[one], H[one]
            rows = idx[one]
            above[rows] = area[rows] * _edge_t(hh[:, 0], hh[:, 1]) * _edge_t(hh[:, 0], hh[:, 2])
        two = ~one
        if np.any(two):
            p, hh = P[two], H[two]
            rows = idx[two]
            below = area[rows] * _edge_t(hh[:, 2], hh[:, 0]) * _edge_t(hh[:, 2], hh[:, 1])
            above[rows] = area[rows] - below
    np.clip(above, 0.0, area, out=above)
    return area, above


def clip_tet(tet, plane, axis=(0.0, 0.0, 1.0), eps: float | None = None) -> ClipResult:
    """Clip one tetrahedron given as four vertex positions."""
    pts = np.asarray(tet, float).reshape(1, 4, 3)
    vol = tet_signed_volumes(pts)[0]
    if abs(vol) < 1e-18:
        raise ValueError("degenerate tetrahedron")
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis)
    c = plane.radial_coord if isinstance(plane, CuttingPlane) else float(plane)
    if eps is None:
        eps = SNAP * float(np.linalg.norm(np.ptp(pts[0], axis=0)))
    res = clip_tets(pts, snap(pts @ axis - c, eps))
    centroid = pts[0].mean(axis=0)
    va, vb = float(res.volume_above[0]), float(res.volume_below[0])
    ca = res.moment_above[0] / va if va > 0 else centroid.copy()
    cb = res.moment_below[0] / vb if vb > 0 else centroid.copy()
    return ClipResult(vb, va, float(res.cut_area[0]), ca, cb)


def snap_tolerance(mesh: IceMesh) -> float:
    return SNAP * mesh.bbox_diagonal()


@dataclass
class PlaneTotals:
    """Mesh aggregates on the tip side of each plane.

    ``moment_above`` is the first moment of volume about the rotation axis
    along the span direction, i.e. the sum of ``V_i * r_i``.
    """

    radii: np.ndarray
    volume_above: np.ndarray
    moment_above: np.ndarray
    cut_area: np.ndarray
    adhesion_above: np.ndarray


def plane_totals(mesh: IceMesh, planes, tets: np.ndarray | None = None,
                 faces: np.ndarray | None = None) -> PlaneTotals:
    """Tip-side volume, radial moment, cut area and adhesion area per plane.

    ``tets``/``faces`` optionally restrict the sums to subsets of element and
    adhesion-face indices. The cut area at a plane sums the per-tet
    intersection polygons plus mesh faces lying exactly on the plane, each
    counted once from the tet on its tip side.
    """
    radii = as_radii(planes)
    tet_idx = np.arange(mesh.n_tets) if tets is None else np.asarray(tets, np.int64)
    face_idx = mesh.adhesion_faces() if faces is None else np.asarray(faces, np.int64)
    eps = snap_tolerance(mesh)
    axis = mesh.span_axis
    P = mesh.nodes[mesh.tets[tet_idx]]
    R = P @ axis
    F = mesh.nodes[mesh.faces[face_idx]]
    RF = F @ axis

    n = len(radii)
    out = PlaneTotals(radii, np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))
    for i, c in enumerate(radii):
        res = clip_tets(P, snap(R - c, eps))
        out.volume_above[i] = np.sum(res.volume_above)
        out.moment_above[i] = np.sum(res.moment_above @ axis)
        out.cut_area[i] = np.sum(res.cut_area) + np.sum(res.face_area)
        if len(F):
            _, above = clip_triangles(F, snap(RF - c, eps))
            out.adhesion_above[i] = np.sum(above)
    return out


@dataclass
class PieceDecomposition:
    """Ice between two consecutive cutting planes.

    Element arrays hold only elements with a non-zero share of the piece.
    ``moments`` are volume-weighted centroids (``V_i * c_i``) so that sums
    stay exact; ``centroids`` divides them back out.
    """

    piece_index: int
    bounds: tuple
    element_ids: np.ndarray
    volumes: np.ndarray
    moments: np.ndarray
    adhesion_ids: np.ndarray
    adhesion_areas: np.ndarray
    cut_area_root_side: float
    span_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    @property
    def volume(self) -> float:
        return float(np.sum(self.volumes))

    @property
    def centroids(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.moments / self.volumes[:, None]

    @property
    def radial_moment(self) -> float:
        return float(np.sum(self.moments @ self.span_axis))

    @property
    def adhesion_area(self) -> float:
        return float(np.sum(self.adhesion_areas))

    def merge(self, other: "PieceDecomposition") -> "PieceDecomposition":
        """Union of two disjoint pieces (for additivity checks and coarsening)."""
        lo = min(self.bounds[0], other.bounds[0])
        hi = max(self.bounds[1], other.bounds[1])
        root = self if self.bounds[0] <= other.bounds[0] else other
        return PieceDecomposition(
            root.piece_index, (lo, hi),
            np.concatenate([self.element_ids, other.element_ids]),
            np.concatenate([self.volumes, other.volumes]),
            np.concatenate([self.moments, other.moments]),
            np.concatenate([self.adhesion_ids, other.adhesion_ids]),
            np.concatenate([self.adhesion_areas, other.adhesion_areas]),
            root.cut_area_root_side, self.span_axis)


def partition(mesh: IceMesh, planes: Sequence) -> list[PieceDecomposition]:
    """Split the mesh into ``len(planes) + 1`` pieces, root end first.

    Tets and adhesion triangles straddling a plane contribute their exact
    clipped share to each side.
    """
    radii = as_radii(planes)
    if len(radii) == 0:
        raise ValueError("at least one cutting plane is required")
    if np.any(np.diff(radii) <= 0):
        raise ValueError("cutting planes must be strictly increasing")
    eps = snap_tolerance(mesh)
    axis = mesh.span_axis
    P = mesh.nodes[mesh.tets]
    R = P @ axis
    adh = mesh.adhesion_faces()
    F = mesh.nodes[mesh.faces[adh]]
    RF = F @ axis

    vol = np.abs(tet_signed_volumes(P)) if len(P) else np.zeros(0)
    mom = vol[:, None] * P.mean(axis=1) if len(P) else np.zeros((0, 3))
    face_area = triangle_areas(F) if len(F) else np.zeros(0)

    # cumulative tip-side shares at each plane, padded with the whole mesh
    # below the first plane and nothing above the last
    v_above = [vol]
    m_above = [mom]
    a_above = [face_area]
    cuts = [0.0]
    for c in radii:
        res = clip_tets(P, snap(R - c, eps))
        v_above.append(res.volume_above)
        m_above.append(res.moment_above)
        cuts.append(float(np.sum(res.cut_area) + np.sum(res.face_area)))
        a_above.append(clip_triangles(F, snap(RF - c, eps))[1] if len(F) else np.zeros(0))
    v_above.append(np.zeros_like(vol))
    m_above.append(np.zeros_like(mom))
    a_above.append(np.zeros_like(face_area))

    lo_all, hi_all = mesh.span_bounds()
    edges = np.concatenate([[min(lo_all, radii[0])], radii, [max(hi_all, radii[-1])]])
    pieces = []
    for k in range(len(radii) + 1):
        dv = v_above[k] - v_above[k + 1]
        dm = m_above[k] - m_above[k + 1]
        da = a_above[k] - a_above[k + 1]
        keep = dv > 0
        fkeep = da > 0
        pieces.append(PieceDecomposition(
            piece_index=k,
            bounds=(float(edges[k]), float(edges[k + 1])),
            element_ids=np.flatnonzero(keep),
            volumes=dv[keep],
            moments=dm[keep],
            adhesion_ids=adh[fkeep],
            adhesion_areas=da[fkeep],
            cut_area_root_side=cuts[k],
            span_axis=axis.copy(),
        ))
    return pieces
