"""Small hand-built meshes with known properties."""

import numpy as np

from sispec.geometry.mesh import TriMesh


def right_triangle() -> TriMesh:
    """Legs of length 1 along x and y; area 1/2, angles 90/45/45."""
    vertices = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    return TriMesh(vertices, [[0, 1, 2]], name="right_triangle")


def unit_square() -> TriMesh:
    """Two consistently oriented triangles covering the unit square."""
    vertices = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
    ]
    return TriMesh(vertices, [[0, 1, 2], [0, 2, 3]], name="unit_square")


def tetrahedron() -> TriMesh:
    """Regular tetrahedron with outward, consistently oriented faces."""
    vertices = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
    faces = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    return TriMesh(vertices, faces, name="tetrahedron")


def flipped_square() -> TriMesh:
    """Unit square whose second triangle winds the other way."""
    square = unit_square()
    return TriMesh(square.vertices, [[0, 1, 2], [0, 3, 2]], name="flipped")


def non_manifold_fan() -> TriMesh:
    """Three triangles sharing the edge (0, 1)."""
    vertices = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.5, 1.0, 0.0],
        [0.5, -1.0, 0.0],
        [0.5, 0.0, 1.0],
    ]
    faces = [[0, 1, 2], [1, 0, 3], [0, 1, 4]]
    return TriMesh(vertices, faces, name="non_manifold")


def with_isolated_vertex() -> TriMesh:
    triangle = right_triangle()
    vertices = np.vstack([triangle.vertices, [[5.0, 5.0, 5.0]]])
    return TriMesh(vertices, triangle.faces, name="isolated")


def sliver() -> TriMesh:
    """Unit square plus a zero-area triangle on three collinear points."""
    vertices = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [2.0, 0.0, 0.0],
    ]
    faces = [[0, 1, 2], [0, 2, 3], [0, 4, 1]]
    return TriMesh(vertices, faces, name="sliver")


def two_components() -> TriMesh:
    """Two disjoint triangles."""
    vertices = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [5.0, 0.0, 0.0],
        [6.0, 0.0, 0.0],
        [5.0, 1.0, 0.0],
    ]
    return TriMesh(vertices, [[0, 1, 2], [3, 4, 5]], name="two_components")


OFF_QUAD = """OFF
# unit square as one quad
4 1 0
0 0 0
1 0 0
1 1 0
0 1 0
4 0 1 2 3
"""

OBJ_SQUARE = """# unit square
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vt 0 0
f 1/1 2/1 3/1
f -4 -2 -1
"""

PLY_SQUARE = """ply
format ascii 1.0
comment unit square
element vertex 4
property float x
property float y
property float z
property uchar red
element face 2
property list uchar int vertex_indices
end_header
0 0 0 255
1 0 0 255
1 1 0 255
0 1 0 255
3 0 1 2
3 0 2 3
"""
