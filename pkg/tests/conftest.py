import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from wg_plate.mesh import generate_mesh  # noqa: E402

REF_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
L_HEXAGON = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])


def archetype_cells():
    """One cell of every generator family plus the L-shaped hexagon."""
    return {
        "triangle": generate_mesh("tri", 1).cells[0].coords,
        "reflex_hexagon": generate_mesh("polyA", 1).cells[0].coords,
        "reflex_octagon": generate_mesh("polyB", 1).cells[0].coords,
        "disk_triangle": generate_mesh("disk", 3).cells[-1].coords,
        "L_hexagon": L_HEXAGON,
    }


@pytest.fixture(params=list(archetype_cells()))
def archetype(request):
    return request.param, archetype_cells()[request.param]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(report):
        ok, detail = report[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
