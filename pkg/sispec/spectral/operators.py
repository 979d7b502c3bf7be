import logging

import numpy as np
from scipy import sparse

from ..exceptions import AlphaOutOfRange, MeshMismatch
from ..geometry.curvature import CurvatureField
from ..geometry.mesh import TriMesh, triangle_areas

logger = logging.getLogger(__name__)


def _corner_pairs(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    # Half-edge 3f + c joins the two corners other than c
    f = mesh.faces
    return f[:, [1, 2, 0]].ravel(), f[:, [2, 0, 1]].ravel()


def assemble_stiffness(
    mesh: TriMesh, clamp_negative: bool = False
) -> sparse.csr_matrix:
    """Cotangent stiffness matrix ``W`` (positive semidefinite).

    ``W(i, j) = -(cot a_ij + cot b_ij) / 2`` over the angles opposite to
    edge ``ij`` (a single angle on boundary edges) and every row sums to
    zero.

    Args:
        mesh (TriMesh): Surface without degenerate faces.
        clamp_negative (bool): (optional) Replace negative cotangent weights
            (obtuse angles) with zero. Defaults to False.

    Raises:
        DegenerateFace: If any face has (near) zero area.
    """
    triangle_areas(mesh)
    n = mesh.n_vertices
    weights = 0.5 * mesh.corner_cotangents.ravel()
    if clamp_negative:
        weights = np.maximum(weights, 0.0)

    i, j = _corner_pairs(mesh)
    off = sparse.coo_matrix((-weights, (i, j)), shape=(n, n)).tocsr()
    off = off + off.T
    diagonal = -np.asarray(off.sum(axis=1)).ravel()
    stiffness = (off + sparse.diags(diagonal)).tocsr()
    stiffness.sum_duplicates()
    logger.debug(
        f"Stiffness of {mesh.name}: {stiffness.nnz} nonzeros, "
        f"{int((weights < 0).sum())} negative cotangent weights"
    )
    return stiffness


def face_weights(
    mesh: TriMesh, curvature: CurvatureField | None, alpha: float
) -> np.ndarray:
    """``|K_t|^alpha |t|`` per face; plain areas when ``alpha == 0``."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    areas = triangle_areas(mesh)
    if alpha == 0.0:
        return areas
    if curvature is None:
        raise ValueError(f"alpha = {alpha} needs a curvature field")
    values = curvature.triangle_values
    if len(values) != mesh.n_faces:
        raise MeshMismatch(
            f"curvature has {len(values)} triangle values, mesh "
            f"{mesh.name} has {mesh.n_faces} faces"
        )
    return values**alpha * areas


def assemble_mass(
    mesh: TriMesh,
    curvature: CurvatureField | None,
    alpha: float,
    lumped: bool = False,
) -> sparse.csr_matrix:
    """Scale-invariant finite-element mass matrix ``B``.

    Each face contributes ``w / 6`` to the diagonal entry of each of its
    corners and ``w / 12`` to each of its edges, where
    ``w = |K_t|^alpha |t|``. With ``alpha = 0`` this is the standard mass
    matrix and ``1^T B 1`` is the surface area.

    Args:
        mesh (TriMesh): Surface without degenerate faces.
        curvature (CurvatureField): Clipped curvature of ``mesh``; may be
            None when ``alpha == 0``.
        alpha (float): Interpolation exponent in ``[0, 1]``.
        lumped (bool): (optional) Return the diagonal matrix with
            ``B(i, i) = sum w / 3`` instead. Defaults to False.

    Raises:
        AlphaOutOfRange: If ``alpha`` is outside ``[0, 1]``.
        MeshMismatch: If ``curvature`` belongs to another mesh.
    """
    w = face_weights(mesh, curvature, alpha)
    n = mesh.n_vertices
    corners = mesh.faces.ravel()
    if lumped:
        diagonal = np.bincount(
            corners, weights=np.repeat(w / 3.0, 3), minlength=n
        )
        return sparse.diags(diagonal).tocsr()

    i, j = _corner_pairs(mesh)
    edge_values = np.repeat(w / 12.0, 3)
    rows = np.concatenate([i, j, corners])
    cols = np.concatenate([j, i, corners])
    values = np.concatenate([edge_values, edge_values, np.repeat(w / 6.0, 3)])
    mass = sparse.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
    mass.sum_duplicates()
    return mass
