from dataclasses import dataclass, field
from functools import cached_property
import logging

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.sparse import csgraph

from ..exceptions import DegenerateFace, InvalidMesh

logger = logging.getLogger(__name__)

# Relative to the squared bounding-box diagonal
AREA_EPSILON_SCALE = 1e-12


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangle mesh.

    Vertex positions and counterclockwise faces are copied on construction
    and frozen; everything else (edges, one-rings, angles, areas) is derived
    lazily and cached on the instance.

    Args:
        vertices (NDArray[np.float64]): ``(n, 3)`` vertex positions.
        faces (NDArray[np.int64]): ``(m, 3)`` vertex indices per triangle.
        area_epsilon (float): (optional) Faces with area at or below this
            value are degenerate. Defaults to ``1e-12`` times the squared
            bounding-box diagonal.
        name (str): (optional) Label used in logs and file names.
    """

    vertices: NDArray[np.float64]
    faces: NDArray[np.int64]
    area_epsilon: float | None = None
    name: str = field(default="mesh")

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=np.float64)
        faces = np.array(self.faces, dtype=np.int64)
        if faces.size == 0:
            faces = faces.reshape(0, 3)

        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise InvalidMesh(
                f"vertices must have shape (n, 3), got {vertices.shape}"
            )
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise InvalidMesh(
                f"faces must have shape (m, 3), got {faces.shape}"
            )
        if not np.all(np.isfinite(vertices)):
            raise InvalidMesh("vertex positions must be finite")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise InvalidMesh(
                f"face indices must lie in [0, {len(vertices)}), got "
                f"[{faces.min()}, {faces.max()}]"
            )
        repeated = np.flatnonzero(
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 2] == faces[:, 0])
        )
        if repeated.size:
            raise InvalidMesh(
                f"faces {repeated[:10].tolist()} repeat a vertex index"
            )

        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

        if self.area_epsilon is None:
            diagonal = self.bounding_box_diagonal
            object.__setattr__(
                self, "area_epsilon", AREA_EPSILON_SCALE * diagonal**2
            )

    def with_vertices(self, vertices: NDArray[np.float64]) -> "TriMesh":
        """Same connectivity, new positions (the area tolerance is
        recomputed for the new geometry)."""
        return TriMesh(vertices, self.faces, name=self.name)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def bounding_box_diagonal(self) -> float:
        if self.n_vertices == 0:
            return 0.0
        extent = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(extent))

    @cached_property
    def half_edges(self) -> NDArray[np.int64]:
        """Directed edges ``(3m, 2)``; row ``3f + c`` is the edge opposite to
        corner ``c`` of face ``f``, oriented along the face winding."""
        f = self.faces
        return np.stack(
            [f[:, [1, 2, 0]].ravel(), f[:, [2, 0, 1]].ravel()], axis=1
        )

    @cached_property
    def _edge_index(self) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        undirected = np.sort(self.half_edges, axis=1)
        edges, inverse = np.unique(undirected, axis=0, return_inverse=True)
        return edges.reshape(-1, 2), inverse.reshape(-1)

    @property
    def edges(self) -> NDArray[np.int64]:
        """Unique undirected edges ``(E, 2)``, smaller index first."""
        return self._edge_index[0]

    @property
    def half_edge_to_edge(self) -> NDArray[np.int64]:
        return self._edge_index[1]

    @cached_property
    def edge_face_counts(self) -> NDArray[np.int64]:
        return np.bincount(self.half_edge_to_edge, minlength=len(self.edges))

    @cached_property
    def edge_lengths(self) -> NDArray[np.float64]:
        e = self.edges
        return np.linalg.norm(
            self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1
        )

    @cached_property
    def _face_cross(self) -> NDArray[np.float64]:
        v = self.vertices[self.faces]
        return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    @cached_property
    def face_areas(self) -> NDArray[np.float64]:
        """Unchecked triangle areas; see :func:`triangle_areas` for the
        validated version."""
        return 0.5 * np.linalg.norm(self._face_cross, axis=1)

    @cached_property
    def face_normals(self) -> NDArray[np.float64]:
        norms = np.linalg.norm(self._face_cross, axis=1, keepdims=True)
        return np.divide(
            self._face_cross,
            norms,
            out=np.zeros_like(self._face_cross),
            where=norms > 0,
        )

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    @cached_property
    def _corner_geometry(self) -> tuple[NDArray, NDArray]:
        # For corner c the two outgoing edges go to corners c+1 and c+2
        v = self.vertices[self.faces]
        e1 = np.roll(v, -1, axis=1) - v
        e2 = np.roll(v, -2, axis=1) - v
        dots = np.einsum("fcx,fcx->fc", e1, e2)
        crosses = np.linalg.norm(np.cross(e1, e2), axis=2)
        return dots, crosses

    @cached_property
    def corner_angles(self) -> NDArray[np.float64]:
        """Interior angle ``(m, 3)`` at every face corner."""
        dots, crosses = self._corner_geometry
        return np.arctan2(crosses, dots)

    @cached_property
    def corner_cotangents(self) -> NDArray[np.float64]:
        """Cotangent ``(m, 3)`` of every corner angle, i.e. the cotangent of
        the angle opposite to half-edge ``3f + c``."""
        dots, crosses = self._corner_geometry
        with np.errstate(divide="ignore", invalid="ignore"):
            return dots / crosses

    def edge_opposite_angles(self) -> NDArray[np.float64]:
        """Opposite angles ``(E, 2)`` per undirected edge; the second column
        is NaN on boundary edges. Non-manifold edges keep their first two."""
        angles = np.full((len(self.edges), 2), np.nan)
        order = np.argsort(self.half_edge_to_edge, kind="stable")
        edge_ids = self.half_edge_to_edge[order]
        flat = self.corner_angles.ravel()[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = edge_ids[1:] != edge_ids[:-1]
        angles[edge_ids[first], 0] = flat[first]
        second = np.zeros(len(order), dtype=bool)
        second[1:] = ~first[1:] & first[:-1]
        angles[edge_ids[second], 1] = flat[second]
        return angles

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 vertex adjacency of the edge graph."""
        e = self.edges
        n = self.n_vertices
        ones = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((ones, (rows, cols)), shape=(n, n))

    @cached_property
    def edge_graph(self) -> sparse.csr_matrix:
        """Symmetric adjacency weighted by Euclidean edge length."""
        e = self.edges
        n = self.n_vertices
        w = np.concatenate([self.edge_lengths, self.edge_lengths])
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((w, (rows, cols)), shape=(n, n))

    @cached_property
    def valence(self) -> NDArray[np.int64]:
        return np.diff(self.adjacency.indptr)

    @cached_property
    def boundary_edges(self) -> NDArray[np.int64]:
        return self.edges[self.edge_face_counts == 1]

    @cached_property
    def boundary_vertex_mask(self) -> NDArray[np.bool_]:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    @cached_property
    def vertex_areas(self) -> NDArray[np.float64]:
        """Sum of the areas of the faces incident to each vertex."""
        return np.bincount(
            self.faces.ravel(),
            weights=np.repeat(self.face_areas, 3),
            minlength=self.n_vertices,
        )

    @cached_property
    def vertex_normals(self) -> NDArray[np.float64]:
        """Area-weighted unit vertex normals (zero where undefined)."""
        accum = np.zeros((self.n_vertices, 3))
        for c in range(3):
            np.add.at(accum, self.faces[:, c], self._face_cross)
        norms = np.linalg.norm(accum, axis=1, keepdims=True)
        return np.divide(
            accum, norms, out=np.zeros_like(accum), where=norms > 0
        )


@dataclass(frozen=True)
class ValidationReport:
    n_vertices: int
    n_faces: int
    n_edges: int
    n_boundary_edges: int
    non_manifold_edges: list[tuple[int, int]]
    degenerate_faces: list[int]
    inconsistent_orientation: list[tuple[int, int]]
    isolated_vertices: list[int]

    @property
    def accepted(self) -> bool:
        return not (
            self.non_manifold_edges
            or self.degenerate_faces
            or self.inconsistent_orientation
            or self.isolated_vertices
        )

    @property
    def n_violations(self) -> int:
        return (
            len(self.non_manifold_edges)
            + len(self.degenerate_faces)
            + len(self.inconsistent_orientation)
            + len(self.isolated_vertices)
        )

    def summary(self) -> str:
        return (
            f"{self.n_vertices} vertices, {self.n_faces} faces, "
            f"{self.n_boundary_edges} boundary edges; "
            f"{len(self.non_manifold_edges)} non-manifold edges, "
            f"{len(self.degenerate_faces)} degenerate faces, "
            f"{len(self.inconsistent_orientation)} inconsistently oriented "
            f"edges, {len(self.isolated_vertices)} isolated vertices"
        )


def validate(mesh: TriMesh) -> ValidationReport:
    """Check every TriMesh invariant and report the violations.

    Never raises; an empty set of violations means the downstream modules
    accept the mesh.
    """
    counts = mesh.edge_face_counts
    non_manifold = [tuple(map(int, e)) for e in mesh.edges[counts >= 3]]

    degenerate = np.flatnonzero(mesh.face_areas <= mesh.area_epsilon).tolist()

    # A consistently oriented manifold edge is traversed once per direction
    directed, directed_counts = np.unique(
        mesh.half_edges, axis=0, return_counts=True
    )
    repeated = np.sort(directed.reshape(-1, 2)[directed_counts > 1], axis=1)
    inconsistent = sorted({tuple(map(int, e)) for e in repeated})

    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces.ravel()] = True
    isolated = np.flatnonzero(~used).tolist()

    report = ValidationReport(
        n_vertices=mesh.n_vertices,
        n_faces=mesh.n_faces,
        n_edges=len(mesh.edges),
        n_boundary_edges=int((counts == 1).sum()),
        non_manifold_edges=non_manifold,
        degenerate_faces=degenerate,
        inconsistent_orientation=inconsistent,
        isolated_vertices=isolated,
    )
    logger.debug(f"Validated {mesh.name}: {report.summary()}")
    return report


def triangle_areas(mesh: TriMesh) -> NDArray[np.float64]:
    """Euclidean area of every face.

    Raises:
        DegenerateFace: If any area is at or below ``mesh.area_epsilon``.
    """
    areas = mesh.face_areas
    degenerate = np.flatnonzero(areas <= mesh.area_epsilon)
    if degenerate.size:
        raise DegenerateFace(degenerate.tolist(), mesh.area_epsilon)
    return areas


def graph_distances(
    mesh: TriMesh, sources: int | NDArray[np.int64]
) -> NDArray[np.float64]:
    """Shortest-path lengths along mesh edges (unnormalized; ``inf`` where
    unreachable). A scalar source gives a 1-D array."""
    return csgraph.dijkstra(mesh.edge_graph, directed=False, indices=sources)
