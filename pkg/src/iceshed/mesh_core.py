"""Tetrahedral ice mesh with labeled boundary faces.

The mesh lives in the blade-fixed rotating frame. ``span_axis`` is the unit
vector along the blade span; the projection of a point onto it is the radial
coordinate used by every force sum.
"""
from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Union

import numpy as np

LOG = logging.getLogger(__name__)

DEFAULT_DENSITY = 900.0
DEGENERATE_VOLUME = 1e-18

# local vertex triples of the four faces of a tet, ordered so that the
# face normal points outward for a positively oriented tet
TET_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])


class MeshError(ValueError):
    """Base class for mesh input problems."""


class MeshParseError(MeshError):
    pass


class MeshTopologyError(MeshError):
    pass


class DegenerateElementError(MeshError):
    pass


class FaceLabel(enum.IntEnum):
    ADHESION = 0
    FLOW = 1

    @classmethod
    def parse(cls, text: str) -> "FaceLabel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise MeshParseError(f"unknown face label {text!r}") from None


@dataclass(frozen=True, eq=False)
class IceMesh:
    """Immutable tetrahedral ice mesh.

    Attributes
    ----------
    nodes : (n, 3) float array, meters
    tets : (m, 4) int array of node indices
    faces : (k, 3) int array of node indices of labeled boundary triangles
    labels : (k,) int array of :class:`FaceLabel` codes
    span_axis : (3,) unit vector along the blade span
    density : ice density in kg/m^3
    """

    nodes: np.ndarray
    tets: np.ndarray
    faces: np.ndarray
    labels: np.ndarray
    span_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    density: float = DEFAULT_DENSITY

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float).reshape(-1, 3)
        tets = np.ascontiguousarray(self.tets, dtype=np.int64).reshape(-1, 4)
        faces = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        labels = np.ascontiguousarray(self.labels, dtype=np.int8).reshape(-1)
        axis = np.asarray(self.span_axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if not norm > 0:
            raise ValueError("span_axis must be non-zero")
        if len(labels) != len(faces):
            raise ValueError("one label per boundary face required")
        if not self.density > 0:
            raise ValueError("density must be positive")
        for name, arr in (("nodes", nodes), ("tets", tets), ("faces", faces),
                          ("labels", labels)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        axis = axis / norm
        axis.setflags(write=False)
        object.__setattr__(self, "span_axis", axis)
        object.__setattr__(self, "density", float(self.density))

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def radial(self) -> np.ndarray:
        """Radial (span-axis) coordinate of every node."""
        return self.nodes @ self.span_axis

    def tet_volumes(self) -> np.ndarray:
        return tet_signed_volumes(self.nodes[self.tets])

    def volume(self) -> float:
        return float(np.sum(self.tet_volumes()))

    def span_bounds(self) -> tuple[float, float]:
        """Radial extent ``(r_min, r_max)`` of the nodes used by tets."""
        if self.n_tets == 0:
            return (0.0, 0.0)
        r = self.radial()[np.unique(self.tets)]
        return float(r.min()), float(r.max())

    def adhesion_faces(self) -> np.ndarray:
        return np.flatnonzero(self.labels == FaceLabel.ADHESION)

    def bbox_diagonal(self) -> float:
        if len(self.nodes) == 0:
            return 0.0
        return float(np.linalg.norm(self.nodes.max(axis=0) - self.nodes.min(axis=0)))

    def with_density(self, density: float) -> "IceMesh":
        return IceMesh(self.nodes, self.tets, self.faces, self.labels,
                       self.span_axis, density)

    def same_as(self, other: "IceMesh") -> bool:
        return (np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.tets, other.tets)
                and np.array_equal(self.faces, other.faces)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.span_axis, other.span_axis)
                and self.density == other.density)


def empty_mesh(density: float = DEFAULT_DENSITY, span_axis=(0.0, 0.0, 1.0)) -> IceMesh:
    return IceMesh(np.zeros((0, 3)), np.zeros((0, 4), int), np.zeros((0, 3), int),
                   np.zeros(0, np.int8), np.asarray(span_axis, float), density)


def tet_signed_volumes(pts: np.ndarray) -> np.ndarray:
    """Signed volumes of tets given as a ``(m, 4, 3)`` array of vertices."""
    pts = np.asarray(pts, dtype=float)
    a = pts[:, 1] - pts[:, 0]
    b = pts[:, 2] - pts[:, 0]
    c = pts[:, 3] - pts[:, 0]
    return np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0


def triangle_areas(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    cr = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
    return 0.5 * np.linalg.norm(cr, axis=1)


def _face_keys(tris: np.ndarray) -> np.ndarray:
    return np.sort(np.asarray(tris, dtype=np.int64).reshape(-1, 3), axis=1)


def tet_face_table(tets: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique faces of a tet list.

    Returns ``(keys, counts, first)`` where ``keys`` are sorted node triples,
    ``counts`` the number of owning tets and ``first`` the oriented triple of
    the first owner (outward for positively oriented tets).
    """
    tets = np.asarray(tets, dtype=np.int64).reshape(-1, 4)
    oriented = tets[:, TET_FACES].reshape(-1, 3)
    keys = _face_keys(oriented)
    uniq, idx, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    return uniq, counts, oriented[idx]


def boundary_faces(tets: np.ndarray) -> np.ndarray:
    """Outward-oriented triangles owned by exactly one tet."""
    uniq, counts, oriented = tet_face_table(tets)
    return oriented[counts == 1]


@dataclass
class Violation:
    kind: str
    message: str
    ids: tuple = ()

    def __str__(self):
        return f"{self.kind}: {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.violations)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    @property
    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def add(self, kind, message, ids=()):
        self.violations.append(Violation(kind, message, tuple(int(i) for i in ids)))

    def __str__(self):
        if not self.violations:
            return "mesh is valid"
        return "\n".join(str(v) for v in self.violations)


def validate(mesh: IceMesh) -> ValidationReport:
    """Report every violated mesh invariant. An empty report means valid."""
    report = ValidationReport()
    n_nodes = len(mesh.nodes)
    if not np.all(np.isfinite(mesh.nodes)):
        bad = np.flatnonzero(~np.all(np.isfinite(mesh.nodes), axis=1))
        report.add("non_finite", f"{len(bad)} nodes with non-finite coordinates", bad)
    if mesh.n_tets == 0:
        report.add("empty", "mesh has no tetrahedra")
        if len(mesh.faces):
            report.add("unowned_face", "boundary faces given for an empty mesh",
                       range(len(mesh.faces)))
        return report

    tets = mesh.tets
    out_of_range = np.flatnonzero(np.any((tets < 0) | (tets >= n_nodes), axis=1))
    if len(out_of_range):
        report.add("missing_node", "tets reference unknown nodes", out_of_range)
        return report
    s = np.sort(tets, axis=1)
    repeated = np.flatnonzero(np.any(s[:, 1:] == s[:, :-1], axis=1))
    if len(repeated):
        report.add("repeated_node", "tets with repeated node ids", repeated)

    vols = mesh.tet_volumes()
    inverted = np.flatnonzero(vols < 0)
    if len(inverted):
        report.add("inverted", f"tets {inverted.tolist()[:10]} have negative volume",
                   inverted)
    degenerate = np.flatnonzero(np.abs(vols) < DEGENERATE_VOLUME)
    if len(degenerate):
        report.add("degenerate", f"{len(degenerate)} tets below {DEGENERATE_VOLUME} m^3",
                   degenerate)
    if not np.sum(vols) > 0:
        report.add("volume", "total volume is not positive")

    used = np.zeros(n_nodes, bool)
    used[tets.ravel()] = True
    dangling = np.flatnonzero(~used)
    if len(dangling):
        report.add("dangling_node", "nodes not referenced by any tet", dangling)

    uniq, counts, _ = tet_face_table(tets)
    over = np.flatnonzero(counts > 2)
    if len(over):
        report.add("non_manifold", f"{len(over)} faces shared by more than two tets")
    exposed = uniq[counts == 1]

    if len(mesh.faces) and (mesh.faces.min() < 0 or mesh.faces.max() >= n_nodes):
        report.add("missing_node", "boundary faces reference unknown nodes")
        return report
    keys = _face_keys(mesh.faces)
    if len(np.unique(keys, axis=0)) != len(keys):
        report.add("duplicate_face", "boundary face listed more than once")
    bad_labels = np.flatnonzero(~np.isin(mesh.labels, [int(x) for x in FaceLabel]))
    if len(bad_labels):
        report.add("bad_label", "faces with unknown labels", bad_labels)

    exposed_set = {tuple(k) for k in exposed.tolist()}
    listed = [tuple(k) for k in keys.tolist()]
    not_boundary = [i for i, k in enumerate(listed) if k not in exposed_set]
    if not_boundary:
        report.add("unowned_face",
                   "labeled faces that are not faces of exactly one tet", not_boundary)
    uncovered = exposed_set.difference(listed)
    if uncovered:
        report.add("uncovered_boundary",
                   f"{len(uncovered)} boundary triangles carry no label")
    return report


def reorient(nodes: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Swap two vertices of every negatively oriented tet."""
    tets = np.array(tets, dtype=np.int64).reshape(-1, 4)
    if len(tets) == 0:
        return tets
    vols = tet_signed_volumes(np.asarray(nodes)[tets])
    neg = vols < 0
    tets[neg, 1], tets[neg, 2] = tets[neg, 2].copy(), tets[neg, 1].copy()
    return tets


def total_mass(mesh: IceMesh) -> float:
    """Sum of density times tet volume, kg."""
    if mesh.n_tets == 0:
        return 0.0
    return float(mesh.density * np.sum(mesh.tet_volumes()))


# -- file formats ------------------------------------------------------------

Source = Union[str, Path, bytes, IO]


def _read_text(source: Source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return source.decode("ascii")
    if isinstance(source, (str, Path)):
        return Path(source).read_text()
    data = source.read()
    return data.decode("ascii") if isinstance(data, bytes) else data


def _native_tokens(text: str) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def parse_native(text: str):
    rows = _native_tokens(text)
    pos = 0
    sections = {}

    def header(name):
        nonlocal pos
        if pos >= len(rows) or rows[pos][0].upper() != name or len(rows[pos]) != 2:
            raise MeshParseError(f"expected '{name} <count>' header")
        try:
            count = int(rows[pos][1])
        except ValueError:
            raise MeshParseError(f"bad count in {name} header") from None
        pos += 1
        if count < 0 or pos + count > len(rows):
            raise MeshParseError(f"{name} section truncated")
        block = rows[pos:pos + count]
        pos += count
        return block

    for name, width in (("NODES", 4), ("TETS", 5), ("FACES", 5)):
        block = header(name)
        if any(len(r) != width for r in block):
            raise MeshParseError(f"{name} rows must have {width} fields")
        sections[name] = block
    if pos != len(rows):
        raise MeshParseError("trailing content after FACES section")

    try:
        ids = np.array([int(r[0]) for r in sections["NODES"]], dtype=np.int64)
        xyz = np.array([[float(v) for v in r[1:]] for r in sections["NODES"]],
                       dtype=float).reshape(-1, 3)
        tets = np.array([[int(v) for v in r[1:]] for r in sections["TETS"]],
                        dtype=np.int64).reshape(-1, 4)
        faces = np.array([[int(v) for v in r[1:4]] for r in sections["FACES"]],
                         dtype=np.int64).reshape(-1, 3)
    except ValueError as exc:
        raise MeshParseError(str(exc)) from None
    labels = np.array([FaceLabel.parse(r[4]) for r in sections["FACES"]], dtype=np.int8)
    if len(ids) and not np.array_equal(np.sort(ids), np.arange(len(ids))):
        raise MeshTopologyError("node ids must be unique and 0-based contiguous")
    nodes = np.empty_like(xyz)
    nodes[ids] = xyz
    return nodes, tets, faces, labels


def parse_msh22(text: str, tag_labels: Mapping[int, Union[str, FaceLabel]]):
    """Parse the ASCII MSH 2.2 subset: tets (type 4) and labeled triangles (type 2)."""
    lines = [ln.strip() for ln in text.splitlines()]

    def block(name):
        try:
            start = lines.index(f"${name}")
            end = lines.index(f"$End{name}", start)
        except ValueError:
            raise MeshParseError(f"missing ${name} block") from None
        body = lines[start + 1:end]
        try:
            count = int(body[0])
        except (IndexError, ValueError):
            raise MeshParseError(f"bad count in ${name}") from None
        if len(body) - 1 != count:
            raise MeshParseError(f"${name} count mismatch")
        return [ln.split() for ln in body[1:]]

    if "$MeshFormat" in lines:
        i = lines.index("$MeshFormat")
        parts = lines[i + 1].split()
        if not parts or not parts[0].startswith("2"):
            raise MeshParseError("only MSH 2.x ASCII is supported")
        if len(parts) > 1 and parts[1] != "0":
            raise MeshParseError("binary MSH is not supported")

    try:
        node_rows = block("Nodes")
        gmsh_ids = [int(r[0]) for r in node_rows]
        xyz = np.array([[float(v) for v in r[1:4]] for r in node_rows]).reshape(-1, 3)
    except (ValueError, IndexError):
        raise MeshParseError("malformed $Nodes row") from None
    index = {g: i for i, g in enumerate(gmsh_ids)}
    if len(index) != len(gmsh_ids):
        raise MeshTopologyError("duplicate node ids in $Nodes")

    labels_by_tag = {int(k): (v if isinstance(v, FaceLabel) else FaceLabel.parse(v))
                     for k, v in tag_labels.items()}
    tets, faces, labels = [], [], []
    for row in block("Elements"):
        try:
            etype, ntags = int(row[1]), int(row[2])
            tags = [int(t) for t in row[3:3 + ntags]]
            conn = [int(v) for v in row[3 + ntags:]]
        except (ValueError, IndexError):
            raise MeshParseError("malformed $Elements row") from None
        try:
            local = [index[g] for g in conn]
        except KeyError as exc:
            raise MeshTopologyError(f"element references missing node {exc}") from None
        if etype == 4:
            if len(local) != 4:
                raise MeshParseError("tetrahedron needs 4 nodes")
            tets.append(local)
        elif etype == 2:
            if len(local) != 3:
                raise MeshParseError("triangle needs 3 nodes")
            phys = tags[0] if tags else None
            if phys not in labels_by_tag:
                raise MeshParseError(f"triangle physical tag {phys} has no label mapping")
            faces.append(local)
            labels.append(labels_by_tag[phys])
        else:
            LOG.debug("skipping MSH element type %d", etype)
    return (xyz, np.array(tets, np.int64).reshape(-1, 4),
            np.array(faces, np.int64).reshape(-1, 3), np.array(labels, np.int8))


def load_mesh(source: Source, format: str = "native", density: float = DEFAULT_DENSITY,
              span_axis: Iterable[float] = (0.0, 0.0, 1.0),
              tag_labels: Mapping[int, Union[str, FaceLabel]] | None = None) -> IceMesh:
    """Load and validate an ice mesh.

    Parameters
    ----------
    source : path, bytes or file object
    format : ``"native"`` or ``"msh"`` (MSH 2.2 ASCII subset)
    density : ice density, kg/m^3
    span_axis : blade span direction
    tag_labels : MSH physical tag -> face label, required for ``"msh"``

    Tets are reoriented to positive volume. Boundary faces are re-oriented
    outward from their owning tet. A mesh with no tets is accepted and
    represents an ice-free blade.
    """
    text = _read_text(source)
    if format == "native":
        nodes, tets, faces, labels = parse_native(text)
    elif format == "msh":
        nodes, tets, faces, labels = parse_msh22(text, tag_labels or {1: "adhesion", 2: "flow"})
    else:
        raise ValueError(f"unknown mesh format {format!r}")

    n = len(nodes)
    if len(tets) and (tets.min() < 0 or tets.max() >= n):
        raise MeshTopologyError("tet references a missing node id")
    if len(faces) and (faces.min() < 0 or faces.max() >= n):
        raise MeshTopologyError("face references a missing node id")
    if not np.all(np.isfinite(nodes)):
        raise MeshParseError("non-finite node coordinates")
    tets = reorient(nodes, tets)
    if len(tets):
        vols = tet_signed_volumes(nodes[tets])
        bad = np.flatnonzero(vols < DEGENERATE_VOLUME)
        if len(bad):
            raise DegenerateElementError(f"tets {bad.tolist()[:10]} below {DEGENERATE_VOLUME} m^3")
        faces = _orient_faces(tets, faces)

    mesh = IceMesh(nodes, tets, faces, labels, np.asarray(tuple(span_axis), float), density)
    report = validate(mesh)
    problems = [v for v in report if v.kind != "empty"]
    if problems:
        raise MeshTopologyError("; ".join(str(v) for v in problems))
    return mesh


def _orient_faces(tets: np.ndarray, faces: np.ndarray) -> np.ndarray:
    if len(faces) == 0:
        return faces
    uniq, counts, oriented = tet_face_table(tets)
    lookup = {tuple(k): tuple(o) for k, o in zip(uniq.tolist(), oriented.tolist())}
    keys = _face_keys(faces).tolist()
    return np.array([lookup.get(tuple(k), tuple(f)) for k, f in zip(keys, faces.tolist())],
                    dtype=np.int64).reshape(-1, 3)


def format_native(mesh: IceMesh) -> str:
    out = io.StringIO()
    out.write(f"NODES {len(mesh.nodes)}\n")
    for i, (x, y, z) in enumerate(mesh.nodes.tolist()):
        out.write(f"{i} {x:.17g} {y:.17g} {z:.17g}\n")
    out.write(f"TETS {mesh.n_tets}\n")
    for i, t in enumerate(mesh.tets.tolist()):
        out.write(f"{i} {t[0]} {t[1]} {t[2]} {t[3]}\n")
    out.write(f"FACES {len(mesh.faces)}\n")
    for i, (f, lab) in enumerate(zip(mesh.faces.tolist(), mesh.labels.tolist())):
        out.write(f"{i} {f[0]} {f[1]} {f[2]} {FaceLabel(lab).name.lower()}\n")
    return out.getvalue()


def write_mesh(mesh: IceMesh, path: Union[str, Path]) -> None:
    Path(path).write_text(format_native(mesh))
