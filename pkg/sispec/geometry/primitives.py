"""Procedural meshes with known geometry, used by the self-test suite, the
experiments and the tests."""

import numpy as np
from numpy.typing import NDArray

from .mesh import TriMesh

_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

_ICOSAHEDRON_VERTICES = np.array(
    [
        [-1, _GOLDEN, 0],
        [1, _GOLDEN, 0],
        [-1, -_GOLDEN, 0],
        [1, -_GOLDEN, 0],
        [0, -1, _GOLDEN],
        [0, 1, _GOLDEN],
        [0, -1, -_GOLDEN],
        [0, 1, -_GOLDEN],
        [_GOLDEN, 0, -1],
        [_GOLDEN, 0, 1],
        [-_GOLDEN, 0, -1],
        [-_GOLDEN, 0, 1],
    ],
    dtype=float,
)

_ICOSAHEDRON_FACES = np.array(
    [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ],
    dtype=np.int64,
)


def _subdivide(
    vertices: NDArray[np.float64], faces: NDArray[np.int64]
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    n = len(vertices)
    m = len(faces)
    edges = np.sort(
        np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]),
        axis=1,
    )
    unique, inverse = np.unique(edges, axis=0, return_inverse=True)
    unique = unique.reshape(-1, 2)
    inverse = inverse.reshape(-1)
    midpoints = 0.5 * (vertices[unique[:, 0]] + vertices[unique[:, 1]])

    ab = n + inverse[:m]
    bc = n + inverse[m : 2 * m]
    ca = n + inverse[2 * m :]
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([b, bc, ab], axis=1),
            np.stack([c, ca, bc], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )
    return np.vstack([vertices, midpoints]), new_faces


def icosphere(subdivisions: int = 4, radius: float = 1.0) -> TriMesh:
    """Geodesic sphere; ``subdivisions=4`` gives 2562 vertices and 5120
    faces. Faces are oriented outwards."""
    vertices = _ICOSAHEDRON_VERTICES.copy()
    faces = _ICOSAHEDRON_FACES.copy()
    vertices /= np.linalg.norm(vertices, axis=1, keepdims=True)
    for _ in range(subdivisions):
        vertices, faces = _subdivide(vertices, faces)
        vertices /= np.linalg.norm(vertices, axis=1, keepdims=True)

    v = vertices[faces]
    normals = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    inward = np.einsum("fx,fx->f", normals, v.mean(axis=1)) < 0
    faces[inward] = faces[inward][:, ::-1]

    return TriMesh(radius * vertices, faces, name=f"icosphere{subdivisions}")


def grid(nx: int = 10, ny: int = 10, spacing: float = 1.0) -> TriMesh:
    """Flat ``nx`` by ``ny`` vertex grid in the z = 0 plane, two triangles
    per cell, all diagonals running the same way."""
    xs, ys = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    vertices = np.stack(
        [xs.ravel() * spacing, ys.ravel() * spacing, np.zeros(nx * ny)],
        axis=1,
    )
    index = np.arange(nx * ny).reshape(nx, ny)
    v00 = index[:-1, :-1].ravel()
    v10 = index[1:, :-1].ravel()
    v01 = index[:-1, 1:].ravel()
    v11 = index[1:, 1:].ravel()
    faces = np.concatenate(
        [np.stack([v00, v10, v11], axis=1), np.stack([v00, v11, v01], axis=1)]
    )
    return TriMesh(vertices, faces, name=f"grid{nx}x{ny}")


def bumpy_sphere(
    subdivisions: int = 3, seed: int = 0, amplitude: float = 0.12
) -> TriMesh:
    """Smooth closed surface without symmetries.

    A sphere stretched along its axes and modulated radially by a random
    low-frequency field, so that its Laplace-Beltrami spectrum is simple
    and intrinsic descriptors tell points apart.
    """
    rng = np.random.default_rng(seed)
    sphere = icosphere(subdivisions)
    p = sphere.vertices
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    terms = np.stack(
        [x, y, z, x * y, y * z, z * x, x**2 - y**2, 3 * z**2 - 1, x * y * z]
    )
    coefficients = rng.uniform(-1.0, 1.0, len(terms))
    field = coefficients @ terms
    field /= np.abs(field).max()
    stretch = np.array([1.0, 0.8, 0.65])
    vertices = p * (1.0 + amplitude * field)[:, None] * stretch
    return TriMesh(vertices, sphere.faces, name=f"bumpy{subdivisions}s{seed}")


def permute_vertices(
    mesh: TriMesh, permutation: NDArray[np.int64]
) -> TriMesh:
    """Relabel vertices: new vertex ``i`` is old vertex ``permutation[i]``.

    The ground-truth map from the result back to ``mesh`` is
    ``permutation`` itself.
    """
    permutation = np.asarray(permutation, dtype=np.int64)
    inverse = np.empty_like(permutation)
    inverse[permutation] = np.arange(len(permutation))
    return TriMesh(
        mesh.vertices[permutation],
        inverse[mesh.faces],
        name=f"{mesh.name}-permuted",
    )
