from dataclasses import dataclass
import logging
from pathlib import Path
import warnings

import numpy as np
from numpy.typing import NDArray

from ..exceptions import AllZeroCurvature, ConfigError, IllConditionedFit
from .mesh import TriMesh

logger = logging.getLogger(__name__)

# Vertices whose one-ring is smaller than this fit over their two-ring
MIN_FIT_POINTS = 5
# Normal-equation condition number above which a quadric fit is rejected
MAX_FIT_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Clipped magnitude of the Gaussian curvature.

    ``triangle_values`` are the per-face weights ``|K|_t`` consumed by the
    scale-invariant mass matrix: the mean of the three clipped vertex
    magnitudes, always inside ``[lo, hi]`` with ``lo > 0``.
    """

    vertex_curvature: NDArray[np.float64]
    vertex_clipped: NDArray[np.float64]
    triangle_values: NDArray[np.float64]
    lo: float
    hi: float
    lo_pct: float
    hi_pct: float
    fallback: NDArray[np.bool_] | None = None


def laplacian_smooth(
    mesh: TriMesh, iterations: int = 3, step: float = 0.5
) -> TriMesh:
    """Uniform (umbrella) Laplacian smoothing with fixed boundary vertices.

    Each iteration moves every interior vertex by ``step`` times the
    difference between its one-ring average and itself.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    if not 0 < step < 1:
        raise ValueError(f"step must lie in (0, 1), got {step}")

    adjacency = mesh.adjacency
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    movable = (~mesh.boundary_vertex_mask) & (degree > 0)
    inverse_degree = np.divide(
        1.0, degree, out=np.zeros_like(degree), where=degree > 0
    )

    vertices = np.array(mesh.vertices)
    for _ in range(iterations):
        average = (adjacency @ vertices) * inverse_degree[:, None]
        delta = step * (average - vertices)
        vertices[movable] += delta[movable]
    return mesh.with_vertices(vertices)


def angle_defect(mesh: TriMesh) -> NDArray[np.float64]:
    """Per-vertex angle defect: ``2 pi`` (``pi`` on the boundary) minus the
    sum of incident corner angles. Sums to ``2 pi chi`` on closed meshes."""
    angle_sums = np.bincount(
        mesh.faces.ravel(),
        weights=mesh.corner_angles.ravel(),
        minlength=mesh.n_vertices,
    )
    full = np.where(mesh.boundary_vertex_mask, np.pi, 2.0 * np.pi)
    return full - angle_sums


def _fit_neighbourhoods(mesh: TriMesh) -> tuple[NDArray, NDArray]:
    """Pairs ``(centre, neighbour)`` used by the quadric fit: the one-ring,
    widened to the two-ring where the one-ring is too small."""
    adjacency = mesh.adjacency.tocsr()
    small = np.flatnonzero(mesh.valence < MIN_FIT_POINTS)

    rows, cols = adjacency.nonzero()
    if small.size == 0:
        return rows, cols

    keep = ~np.isin(rows, small)
    two_ring = (adjacency @ adjacency + adjacency)[small].tocoo()
    wide_rows = small[two_ring.row]
    wide_cols = two_ring.col
    not_self = wide_rows != wide_cols
    return (
        np.concatenate([rows[keep], wide_rows[not_self]]),
        np.concatenate([cols[keep], wide_cols[not_self]]),
    )


def _tangent_frames(normals: NDArray[np.float64]) -> tuple[NDArray, NDArray]:
    helper = np.zeros_like(normals)
    use_x = np.abs(normals[:, 0]) < 0.9
    helper[use_x, 0] = 1.0
    helper[~use_x, 1] = 1.0
    e1 = helper - np.einsum("vx,vx->v", helper, normals)[:, None] * normals
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(normals, e1)
    return e1, e2


def gaussian_curvature(
    mesh: TriMesh,
    return_fallback: bool = False,
    allow_fallback: bool = True,
) -> NDArray[np.float64] | tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Estimate the Gaussian curvature at every vertex from the second
    fundamental form of a local quadric.

    In the tangent frame of the vertex normal the neighbourhood is fitted by
    ``z = (a x^2 + 2 b x y + c y^2) / 2`` in the least-squares sense and
    ``K = a c - b^2``. Vertices whose fit is ill-conditioned (or that have
    no normal) use the angle defect over a third of their incident area
    instead.

    Args:
        mesh (TriMesh): Surface to measure.
        return_fallback (bool): (optional) Also return the mask of vertices
            that used the angle-defect fallback.
        allow_fallback (bool): (optional) When False, an ill-conditioned
            fit raises instead of falling back. Defaults to True.

    Returns:
        NDArray[np.float64]: Signed curvature per vertex (1/length^2), and
        the fallback mask when requested.

    Raises:
        IllConditionedFit: Only with ``allow_fallback=False``.
    """
    n = mesh.n_vertices
    normals = mesh.vertex_normals
    has_normal = np.linalg.norm(normals, axis=1) > 0
    e1, e2 = _tangent_frames(
        np.where(has_normal[:, None], normals, [0.0, 0.0, 1.0])
    )

    centres, neighbours = _fit_neighbourhoods(mesh)
    offsets = mesh.vertices[neighbours] - mesh.vertices[centres]
    x = np.einsum("px,px->p", offsets, e1[centres])
    y = np.einsum("px,px->p", offsets, e2[centres])
    z = np.einsum("px,px->p", offsets, normals[centres])
    design = np.stack([0.5 * x * x, x * y, 0.5 * y * y], axis=1)

    normal_matrix = np.zeros((n, 3, 3))
    np.add.at(normal_matrix, centres, design[:, :, None] * design[:, None, :])
    rhs = np.zeros((n, 3))
    np.add.at(rhs, centres, design * z[:, None])

    counts = np.bincount(centres, minlength=n)
    fallback = (counts < 3) | ~has_normal
    candidates = np.flatnonzero(~fallback)
    with np.errstate(divide="ignore", invalid="ignore"):
        conditions = np.linalg.cond(normal_matrix[candidates])
    fallback[candidates[~(conditions < MAX_FIT_CONDITION)]] = True

    if fallback.any() and not allow_fallback:
        raise IllConditionedFit(
            f"quadric fit ill-conditioned at vertices "
            f"{np.flatnonzero(fallback)[:10].tolist()} of {mesh.name}"
        )

    curvature = np.empty(n)
    good = np.flatnonzero(~fallback)
    if good.size:
        a, b, c = np.linalg.solve(
            normal_matrix[good], rhs[good][:, :, None]
        )[:, :, 0].T
        curvature[good] = a * c - b * b

    if fallback.any():
        warnings.warn(
            f"Quadric curvature fit ill-conditioned at {int(fallback.sum())} "
            f"vertices of {mesh.name}; using the angle defect there."
        )
        third_areas = mesh.vertex_areas[fallback] / 3.0
        curvature[fallback] = np.divide(
            angle_defect(mesh)[fallback],
            third_areas,
            out=np.zeros_like(third_areas),
            where=third_areas > 0,
        )

    logger.debug(
        f"Curvature of {mesh.name}: range [{curvature.min():.4g}, "
        f"{curvature.max():.4g}], {int(fallback.sum())} fallbacks"
    )
    if return_fallback:
        return curvature, fallback
    return curvature


def clip_curvature(
    curvature: NDArray[np.float64],
    faces: NDArray[np.int64],
    lo_pct: float = 0.4,
    hi_pct: float = 75.0,
    floor: float = 1e-3,
    fallback: NDArray[np.bool_] | None = None,
) -> CurvatureField:
    """Clamp ``|K|`` to its ``[lo_pct, hi_pct]`` percentile range and
    average onto faces.

    The lower bound is at least ``floor`` times the upper bound so flat
    regions keep a positive weight even when the lower percentile is zero.
    Percentiles use linear interpolation between sorted values, so the
    result is scale covariant: scaling the mesh by ``s`` divides every
    value by ``s^2``.

    Raises:
        ConfigError: If the percentiles are not ``0 <= lo < hi <= 100``.
        AllZeroCurvature: If the upper percentile is zero (flat mesh; use
            ``alpha = 0`` there).
    """
    if not 0 <= lo_pct < hi_pct <= 100:
        raise ConfigError(
            f"need 0 <= lo_pct < hi_pct <= 100, got {lo_pct}, {hi_pct}"
        )
    if not 0 < floor < 1:
        raise ConfigError(f"floor must lie in (0, 1), got {floor}")

    magnitude = np.abs(np.asarray(curvature, dtype=float))
    p_lo, p_hi = np.percentile(magnitude, [lo_pct, hi_pct])
    if not p_hi > 0:
        raise AllZeroCurvature(
            f"the {hi_pct}th percentile of |K| is zero; the surface is flat "
            "and only alpha = 0 is meaningful"
        )
    lo = max(float(p_lo), floor * float(p_hi))
    hi = float(p_hi)

    clipped = np.clip(magnitude, lo, hi)
    return CurvatureField(
        vertex_curvature=np.asarray(curvature, dtype=float),
        vertex_clipped=clipped,
        triangle_values=np.clip(clipped[faces].mean(axis=1), lo, hi),
        lo=lo,
        hi=hi,
        lo_pct=lo_pct,
        hi_pct=hi_pct,
        fallback=fallback,
    )


def curvature_field(
    mesh: TriMesh,
    iterations: int = 3,
    step: float = 0.5,
    lo_pct: float = 0.4,
    hi_pct: float = 75.0,
    floor: float = 1e-3,
) -> CurvatureField:
    """Smooth, estimate and clip: the per-face weights of ``mesh``."""
    smoothed = laplacian_smooth(mesh, iterations, step) if iterations else mesh
    curvature, fallback = gaussian_curvature(smoothed, return_fallback=True)
    return clip_curvature(
        curvature, mesh.faces, lo_pct, hi_pct, floor, fallback=fallback
    )


def write_curvature_csv(
    curvature: NDArray[np.float64], path: str | Path
) -> Path:
    path = Path(path)
    lines = ["index,K"]
    lines.extend(f"{i},{k:.17g}" for i, k in enumerate(curvature))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path
