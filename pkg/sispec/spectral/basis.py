"""Spectral bases of the scale-invariant Laplace-Beltrami operator.

A computed pair is accepted when its residual
``|W phi - lambda B phi| / |B phi|`` is at most
``residual_tol * max(1, |lambda|)``: an absolute bound for eigenvalues up to
one and a relative bound above.
"""

from dataclasses import dataclass
import logging
import warnings

import numpy as np
from numpy.typing import NDArray
from scipy import linalg, sparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from ..exceptions import (
    ConvergenceFailure,
    DimensionMismatch,
    NotPositiveDefinite,
)
from .spectral_utils import (
    dense_eigensolve_bytes,
    fix_signs,
    has_enough_memory,
    rayleigh_ritz,
    residual_norms,
)

logger = logging.getLogger(__name__)

# Problems at or below this size are solved densely by ``method="auto"``
DENSE_MAX_VERTICES = 300
# Largest problem the sparse solver may fall back to the dense solver on
DENSE_FALLBACK_MAX_VERTICES = 2000
SHIFT_RETRIES = 3


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """The ``k`` smallest eigenpairs of ``W phi = lambda B phi`` for one
    (shape, alpha) pair.

    ``eigenfunctions`` is B-orthonormal and ``eigenvalues`` ascending and
    nonnegative.
    """

    alpha: float
    eigenvalues: NDArray[np.float64]
    eigenfunctions: NDArray[np.float64]
    mass: sparse.csr_matrix
    lumped: bool = False

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def n(self) -> int:
        return self.eigenfunctions.shape[0]

    def truncate(self, k: int) -> "SpectralBasis":
        if not 0 < k <= self.k:
            raise DimensionMismatch(f"cannot truncate {self.k} pairs to {k}")
        return SpectralBasis(
            self.alpha,
            self.eigenvalues[:k],
            self.eigenfunctions[:, :k],
            self.mass,
            self.lumped,
        )

    def project(self, f: NDArray[np.float64]) -> NDArray[np.float64]:
        return project(self, f)

    def reconstruct(self, coefficients: NDArray[np.float64]) -> NDArray:
        return self.eigenfunctions @ coefficients


def _dense_solve(
    W: sparse.spmatrix, B: sparse.spmatrix, k: int
) -> tuple[NDArray, NDArray]:
    values, vectors = linalg.eigh(
        W.toarray(), B.toarray(), subset_by_index=[0, k - 1]
    )
    return values, vectors


def _sparse_solve(
    W: sparse.spmatrix, B: sparse.spmatrix, k: int, seed: int
) -> tuple[NDArray, NDArray]:
    n = W.shape[0]
    # Eigenvalue-scaled shift just below zero keeps W - sigma B definite
    sigma = -1e-8 * W.diagonal().sum() / B.diagonal().sum()
    v0 = np.random.default_rng(seed).standard_normal(n)
    last_error = None
    for attempt in range(SHIFT_RETRIES + 1):
        try:
            values, vectors = eigsh(
                W, k=k, M=B, sigma=sigma, which="LM", v0=v0
            )
            return values, vectors
        except (ArpackNoConvergence, ArpackError, RuntimeError) as error:
            last_error = error
            logger.debug(
                f"Lanczos attempt {attempt + 1} with shift {sigma:.3e} "
                f"failed: {error}"
            )
            sigma *= 10.0
    raise ConvergenceFailure(
        f"shift-invert Lanczos failed after {SHIFT_RETRIES + 1} attempts: "
        f"{last_error}"
    )


def eigensolve(
    W: sparse.spmatrix,
    B: sparse.spmatrix,
    k: int,
    alpha: float = 0.0,
    method: str = "auto",
    seed: int = 0,
    residual_tol: float = 1e-6,
    lumped: bool = False,
) -> SpectralBasis:
    """Solve the generalized eigenproblem ``W phi = lambda B phi`` for the
    ``k`` algebraically smallest pairs.

    Args:
        W (sparse.spmatrix): Stiffness matrix (symmetric positive
            semidefinite).
        B (sparse.spmatrix): Mass matrix (symmetric positive definite).
        k (int): Number of pairs, ``k < n``.
        alpha (float): (optional) Recorded on the basis.
        method (str): (optional) ``"dense"``, ``"sparse"`` (shift-invert
            Lanczos) or ``"auto"``. Defaults to ``"auto"``.
        seed (int): (optional) Seed of the Lanczos start vector.
        residual_tol (float): (optional) Largest accepted relative residual.
        lumped (bool): (optional) Recorded on the basis.

    Returns:
        SpectralBasis: Ascending eigenvalues and B-orthonormal
        eigenfunctions, each column signed so its first significant entry
        is positive.

    Raises:
        DimensionMismatch: If ``k`` is not in ``[1, n)``.
        NotPositiveDefinite: If ``B`` has a nonpositive diagonal entry.
        ConvergenceFailure: If no solver reaches ``residual_tol``.
    """
    n = W.shape[0]
    if W.shape != (n, n) or B.shape != (n, n):
        raise DimensionMismatch(
            f"W {W.shape} and B {B.shape} must be square and equal"
        )
    if not 0 < k < n:
        raise DimensionMismatch(f"k must lie in [1, {n}), got {k}")
    if np.any(B.diagonal() <= 0):
        raise NotPositiveDefinite(
            f"mass matrix has {int((B.diagonal() <= 0).sum())} nonpositive "
            "diagonal entries"
        )
    if method not in ("auto", "dense", "sparse"):
        raise ValueError(f"unknown eigensolver method '{method}'")

    W = sparse.csr_matrix(W)
    B = sparse.csr_matrix(B)
    if method == "auto":
        method = (
            "dense" if n <= DENSE_MAX_VERTICES or k >= n - 1 else "sparse"
        )

    if method == "dense":
        try:
            values, vectors = _dense_solve(W, B, k)
        except linalg.LinAlgError as error:
            raise NotPositiveDefinite(str(error)) from error
    else:
        try:
            values, vectors = _sparse_solve(W, B, k, seed)
        except ConvergenceFailure:
            has_memory, required, _ = has_enough_memory(
                dense_eigensolve_bytes(n)
            )
            if n > DENSE_FALLBACK_MAX_VERTICES or not has_memory:
                raise
            warnings.warn(
                f"Sparse eigensolver failed; falling back to the dense "
                f"solver ({required:.2f} GB)."
            )
            method = "dense"
            values, vectors = _dense_solve(W, B, k)

    values, vectors = rayleigh_ritz(W, B, vectors)
    order = np.argsort(values)
    values = np.maximum(values[order], 0.0)
    vectors = fix_signs(vectors[:, order])

    residuals = residual_norms(W, B, values, vectors)
    allowed = residual_tol * np.maximum(1.0, np.abs(values))
    if np.any(residuals > allowed):
        worst = int(np.argmax(residuals / allowed))
        raise ConvergenceFailure(
            f"eigenpair {worst} did not converge", float(residuals[worst])
        )

    logger.info(
        f"Solved {k} eigenpairs (n = {n}, alpha = {alpha}, {method}): "
        f"lambda in [{values[0]:.3e}, {values[-1]:.3e}], max residual "
        f"{residuals.max():.2e}"
    )
    return SpectralBasis(alpha, values, vectors, B, lumped)


def project(
    basis: SpectralBasis, f: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Spectral coefficients ``Phi^T B f`` of one or more functions.

    Args:
        basis (SpectralBasis): Basis of the mesh ``f`` lives on.
        f (NDArray[np.float64]): ``(n,)`` or ``(n, d)`` vertex values.

    Returns:
        NDArray[np.float64]: ``(k,)`` or ``(k, d)`` coefficients.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != basis.n:
        raise DimensionMismatch(
            f"function has {f.shape[0]} rows, basis has {basis.n} vertices"
        )
    return basis.eigenfunctions.T @ (basis.mass @ f)
