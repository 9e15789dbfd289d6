import numpy as np
import pytest

from iceshed.mesh_core import FaceLabel, IceMesh, boundary_faces

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")


@pytest.fixture
def record():
    def _record(key, ok, detail=""):
        ACCEPTANCE[key] = (bool(ok), detail)
        assert ok, f"{key}: {detail}"
    return _record


UNIT_TET = np.array([(0.0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])

UNIT_TET_FILE = """\
# unit right tetrahedron
NODES 4
0 0 0 0
1 1 0 0
2 0 1 0
3 0 0 1
TETS 1
0 0 1 2 3
FACES 4
0 1 2 3 flow
1 0 3 2 flow
2 0 1 3 flow
3 0 2 1 flow
"""


@pytest.fixture
def unit_tet_mesh():
    tets = np.array([[0, 1, 2, 3]])
    faces = boundary_faces(tets)
    return IceMesh(UNIT_TET, tets, faces, np.full(4, FaceLabel.FLOW), density=900.0)
