from dataclasses import dataclass, field, fields
import logging
import warnings

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from ..exceptions import ConfigError, DimensionMismatch, SingularSystem
from ..spectral.basis import SpectralBasis

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossWeights:
    """Weights of the bijectivity, orthogonality, Laplacian and descriptor
    commutativity terms."""

    bijectivity: float = 1e3
    orthogonality: float = 1e3
    laplacian: float = 1.0
    descriptor: float = 1e5

    def __post_init__(self):
        values = self.as_array()
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ConfigError(f"loss weights must be finite and >= 0: {self}")
        if not np.any(values > 0):
            raise ConfigError("at least one loss weight must be positive")

    def as_array(self) -> NDArray[np.float64]:
        return np.array([getattr(self, f.name) for f in fields(self)])


@dataclass(eq=False)
class FunctionalMapPair:
    """Maps between the spectral coefficients of two shapes in one domain.

    ``C_xy`` sends coefficients in the source basis to the target basis and
    ``C_yx`` the other way round.
    """

    alpha: float
    C_xy: NDArray[np.float64]
    C_yx: NDArray[np.float64]
    losses: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.C_xy = np.array(self.C_xy, dtype=float)
        self.C_yx = np.array(self.C_yx, dtype=float)
        k = self.C_xy.shape[0]
        if self.C_xy.shape != (k, k) or self.C_yx.shape != (k, k):
            raise DimensionMismatch(
                f"maps must be square and equal in size, got "
                f"{self.C_xy.shape} and {self.C_yx.shape}"
            )
        if not (
            np.isfinite(self.C_xy).all() and np.isfinite(self.C_yx).all()
        ):
            raise ValueError("functional maps must be finite")

    @property
    def k(self) -> int:
        return self.C_xy.shape[0]

    @classmethod
    def identity(cls, alpha: float, k: int) -> "FunctionalMapPair":
        return cls(alpha, np.eye(k), np.eye(k))

    def copy(self) -> "FunctionalMapPair":
        return FunctionalMapPair(
            self.alpha, self.C_xy.copy(), self.C_yx.copy(), dict(self.losses)
        )


@dataclass(frozen=True, eq=False)
class DomainOperators:
    """Everything the Laplacian and descriptor terms need in one domain:
    both spectra and the ``(d, k, k)`` multiplication operators of the
    descriptor channels on each shape."""

    eigenvalues_x: NDArray[np.float64]
    eigenvalues_y: NDArray[np.float64]
    mult_x: NDArray[np.float64]
    mult_y: NDArray[np.float64]

    def __post_init__(self):
        if self.mult_x.shape != self.mult_y.shape:
            raise DimensionMismatch(
                f"multiplication operators differ in shape: "
                f"{self.mult_x.shape} vs {self.mult_y.shape}"
            )


def solve_lsq(
    F: NDArray[np.float64], G: NDArray[np.float64], damping: float = 1e-8
) -> NDArray[np.float64]:
    """Least-squares functional map ``argmin_C |C F - G|_F``.

    Solves the normal equations ``(F F^T + mu I) C^T = F G^T`` by Cholesky.
    ``mu`` is zero unless the smallest eigenvalue of ``F F^T`` is within
    ``damping`` of the largest, in which case ``mu = damping * lambda_max``.

    Args:
        F (NDArray[np.float64]): ``(k, d)`` source descriptor coefficients.
        G (NDArray[np.float64]): ``(k, d)`` target descriptor coefficients.
        damping (float): (optional) Relative Tikhonov damping.

    Returns:
        NDArray[np.float64]: The ``(k, k)`` map.

    Raises:
        DimensionMismatch: If ``F`` and ``G`` differ in shape.
        SingularSystem: If ``F`` is zero or the damped system is singular.
    """
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    if F.ndim != 2 or F.shape != G.shape:
        raise DimensionMismatch(
            f"coefficient blocks differ: {F.shape} vs {G.shape}"
        )
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        raise ValueError("descriptor coefficients must be finite")
    k, d = F.shape
    if d < k:
        warnings.warn(
            f"Only {d} descriptor channels for a {k}-dimensional basis; the "
            "least-squares map is underdetermined."
        )

    gram = F @ F.T
    spectrum = linalg.eigvalsh(gram)
    lam_min, lam_max = float(spectrum[0]), float(spectrum[-1])
    if not lam_max > 0:
        raise SingularSystem("descriptor coefficients are identically zero")
    mu = 0.0 if lam_min > damping * lam_max else damping * lam_max
    if mu:
        logger.debug(
            f"Damping least squares with mu = {mu:.3e} (inverse condition "
            f"{max(lam_min, 0.0) / lam_max:.3e})"
        )

    try:
        factor = linalg.cho_factor(gram + mu * np.eye(k))
        return linalg.cho_solve(factor, F @ G.T).T
    except linalg.LinAlgError as error:
        raise SingularSystem(str(error)) from error


def mult_operator(
    basis: SpectralBasis, f: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Spectral representation of pointwise multiplication by ``f``.

    Returns the symmetric part of ``Phi^T B Diag(f) Phi``; with a constant
    ``f = c`` this is exactly ``c I``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (basis.n,):
        raise DimensionMismatch(
            f"function has shape {f.shape}, basis has {basis.n} vertices"
        )
    phi = basis.eigenfunctions
    left = phi.T @ (basis.mass @ (f[:, None] * phi))
    return 0.5 * (left + left.T)


def mult_operators(
    basis: SpectralBasis, values: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Stack of :func:`mult_operator` over the columns of ``values``."""
    return np.stack([mult_operator(basis, column) for column in values.T])


def initialize_pairs(
    source_projections: dict[float, NDArray[np.float64]],
    target_projections: dict[float, NDArray[np.float64]],
    alphas: list[float],
    damping: float = 1e-8,
) -> list[FunctionalMapPair]:
    """Least-squares maps in both directions for every domain."""
    pairs = []
    for alpha in alphas:
        F = source_projections[alpha]
        G = target_projections[alpha]
        pairs.append(
            FunctionalMapPair(
                alpha, solve_lsq(F, G, damping), solve_lsq(G, F, damping)
            )
        )
        logger.debug(f"Initialized maps for alpha = {alpha}")
    return pairs
