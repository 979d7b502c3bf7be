import numpy as np
from numpy.typing import NDArray
import psutil
from scipy import linalg, sparse

# Entries below this fraction of the column maximum do not decide the sign
SIGN_TOLERANCE = 1e-6


def has_enough_memory(num_bytes: float) -> tuple[bool, float, float]:
    """Check if the available user RAM can hold a dense working set.

    Args:
        num_bytes (float): Size of the dense arrays about to be allocated.

    Returns:
        has_memory (bool): Whether the user has enough RAM.
        memory_required_gb (float): Amount of memory required in GB.
        available_memory_gb (float): Amount of free memory that can be
            dedicated to the computation in GB.
    """
    available_memory_gb = psutil.virtual_memory().available / 2**30

    # Use half of the memory available for the dense working set
    memory_required_gb = num_bytes / 2**30
    has_memory = memory_required_gb <= available_memory_gb / 2

    return has_memory, memory_required_gb, available_memory_gb


def dense_eigensolve_bytes(n: int) -> float:
    # Two dense n x n float64 matrices plus LAPACK workspace of the same size
    return 3.0 * 8.0 * n * n


def rayleigh_ritz(
    W: sparse.spmatrix,
    B: sparse.spmatrix,
    vectors: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Best approximations to the pencil ``(W, B)`` inside ``span(vectors)``.

    Solves the small projected problem and rotates the basis, which makes
    the returned vectors exactly B-orthonormal (up to rounding) and fixes
    the rotation inside clusters of repeated eigenvalues.

    Returns:
        eigenvalues (NDArray[np.float64]): Ascending Ritz values.
        vectors (NDArray[np.float64]): ``(n, k)`` Ritz vectors.
    """
    projected_w = vectors.T @ (W @ vectors)
    projected_b = vectors.T @ (B @ vectors)
    projected_w = 0.5 * (projected_w + projected_w.T)
    projected_b = 0.5 * (projected_b + projected_b.T)
    values, rotation = linalg.eigh(projected_w, projected_b)
    return values, vectors @ rotation


def fix_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    """Flip columns so their first significant entry is positive."""
    vectors = np.array(vectors)
    magnitude = np.abs(vectors)
    significant = magnitude > SIGN_TOLERANCE * magnitude.max(axis=0)
    first = np.argmax(significant, axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def residual_norms(
    W: sparse.spmatrix,
    B: sparse.spmatrix,
    eigenvalues: NDArray[np.float64],
    vectors: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Relative residuals ``|W phi - lambda B phi| / |B phi|`` per pair."""
    b_vectors = B @ vectors
    residuals = W @ vectors - b_vectors * eigenvalues
    return np.linalg.norm(residuals, axis=0) / np.linalg.norm(
        b_vectors, axis=0
    )


def b_orthonormality_error(
    B: sparse.spmatrix, vectors: NDArray[np.float64]
) -> float:
    """``max |Phi^T B Phi - I|``."""
    gram = vectors.T @ (B @ vectors)
    return float(np.abs(gram - np.eye(vectors.shape[1])).max())
