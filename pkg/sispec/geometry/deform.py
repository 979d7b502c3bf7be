import logging

import numpy as np
from numpy.typing import NDArray

from ..exceptions import SeedOutOfRange
from .mesh import TriMesh, graph_distances

logger = logging.getLogger(__name__)


def falloff_weights(
    distances: NDArray[np.float64], radius: float, falloff: float = 1.0
) -> NDArray[np.float64]:
    """Blend weight per vertex: 1 on the plateau ``d <= (1 - falloff) r``,
    ``(1 + cos(pi t)) / 2`` across the band (``t`` runs from 0 to 1), and 0
    from ``d >= r`` on. ``falloff = 1`` is the pure cosine profile."""
    plateau = (1.0 - falloff) * radius
    band = falloff * radius
    t = np.clip((distances - plateau) / band, 0.0, 1.0)
    weights = 0.5 * (1.0 + np.cos(np.pi * t))
    weights[distances >= radius] = 0.0
    return weights


def local_scale_deform(
    mesh: TriMesh,
    seed: int,
    radius: float,
    factor: float,
    falloff: float = 1.0,
) -> TriMesh:
    """Scale a geodesic disc of the surface about its centroid, blending
    smoothly (C1) back to the untouched surface at the disc boundary.

    Connectivity is unchanged, so the ground-truth map from the result back
    to ``mesh`` is the identity.

    Args:
        mesh (TriMesh): Surface to deform.
        seed (int): Centre vertex of the region.
        radius (float): Geodesic (edge-graph) radius of the region.
        factor (float): Scale factor applied at full weight.
        falloff (float): (optional) Fraction of the radius used for the
            cosine blend; the inner remainder is scaled rigidly. Defaults
            to 1.0.

    Returns:
        TriMesh: The deformed mesh.

    Raises:
        SeedOutOfRange: If ``seed`` is not a vertex index.
    """
    if not 0 <= seed < mesh.n_vertices:
        raise SeedOutOfRange(
            f"seed vertex {seed} outside [0, {mesh.n_vertices})"
        )
    if factor <= 0:
        raise ValueError(f"factor must be positive, got {factor}")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not 0 < falloff <= 1:
        raise ValueError(f"falloff must lie in (0, 1], got {falloff}")

    if factor == 1.0:
        return TriMesh(mesh.vertices, mesh.faces, name=f"{mesh.name}-scaled")

    distances = graph_distances(mesh, seed)
    inside = distances < radius
    centroid = mesh.vertices[inside].mean(axis=0)
    weights = falloff_weights(distances, radius, falloff)

    displacement = (weights * (factor - 1.0))[:, None] * (
        mesh.vertices - centroid
    )
    logger.info(
        f"Scaled {int(inside.sum())} of {mesh.n_vertices} vertices of "
        f"{mesh.name} by {factor} (radius {radius}, falloff {falloff})"
    )
    return TriMesh(
        mesh.vertices + displacement, mesh.faces, name=f"{mesh.name}-scaled"
    )
