import logging

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import csgraph

from ..exceptions import DisconnectedMesh, SeedOutOfRange
from ..geometry.mesh import TriMesh

logger = logging.getLogger(__name__)

# Number of Dijkstra sources solved per batch by ``GeodesicOracle.pairwise``
SOURCE_CHUNK = 256


def _check_sources(mesh: TriMesh, sources: NDArray[np.int64]) -> None:
    if sources.size and (
        sources.min() < 0 or sources.max() >= mesh.n_vertices
    ):
        raise SeedOutOfRange(
            f"source vertices must lie in [0, {mesh.n_vertices})"
        )


class GeodesicOracle:
    """Edge-graph geodesic distances on one mesh, normalized by the square
    root of its surface area so they are invariant to uniform scaling.

    Args:
        mesh (TriMesh): Connected mesh.
    """

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self.normalization = float(np.sqrt(mesh.total_area))
        if not self.normalization > 0:
            raise ValueError(f"mesh {mesh.name} has zero area")

    def distances_from(
        self, sources: int | NDArray[np.int64]
    ) -> NDArray[np.float64]:
        """Normalized distances from one source (``(n,)``) or several
        (``(len(sources), n)``).

        Raises:
            DisconnectedMesh: If a vertex is unreachable from a source.
        """
        indices = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        _check_sources(self.mesh, indices)
        distances = csgraph.dijkstra(
            self.mesh.edge_graph, directed=False, indices=indices
        )
        unreachable = np.flatnonzero(~np.isfinite(distances).all(axis=0))
        if unreachable.size:
            raise DisconnectedMesh(unreachable.tolist())
        distances /= self.normalization
        return distances[0] if np.ndim(sources) == 0 else distances

    def pairwise(
        self, i: NDArray[np.int64], j: NDArray[np.int64]
    ) -> NDArray[np.float64]:
        """Normalized distance between ``i[p]`` and ``j[p]`` for every
        ``p``, running Dijkstra once per distinct ``i``."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if i.shape != j.shape:
            raise ValueError(f"index arrays differ: {i.shape} vs {j.shape}")
        _check_sources(self.mesh, j)
        result = np.empty(i.shape)
        sources, inverse = np.unique(i, return_inverse=True)
        inverse = inverse.reshape(i.shape)
        for start in range(0, len(sources), SOURCE_CHUNK):
            chunk = sources[start : start + SOURCE_CHUNK]
            distances = self.distances_from(chunk)
            in_chunk = (inverse >= start) & (inverse < start + len(chunk))
            result[in_chunk] = distances[
                inverse[in_chunk] - start, j[in_chunk]
            ]
        return result


def geodesic_distances(mesh: TriMesh, source: int) -> NDArray[np.float64]:
    """Single-source edge-graph distances divided by ``sqrt(total area)``.

    Raises:
        SeedOutOfRange: If ``source`` is not a vertex.
        DisconnectedMesh: If some vertex is unreachable.
    """
    return GeodesicOracle(mesh).distances_from(int(source))
