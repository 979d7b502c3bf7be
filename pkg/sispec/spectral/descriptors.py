from dataclasses import dataclass, field, replace
from enum import StrEnum
import logging

import numpy as np
from numpy.typing import NDArray

from ..exceptions import DegenerateSpectrum, EmptyTimes, MeshMismatch
from .basis import SpectralBasis, project

logger = logging.getLogger(__name__)

# Relative gap below which lambda_1 and lambda_{k-1} count as equal
DEGENERATE_SPECTRUM_RTOL = 1e-9


class DescriptorKind(StrEnum):
    HKS = "hks"
    WKS = "wks"


@dataclass(frozen=True, eq=False)
class DescriptorSet:
    """``(n, d)`` per-vertex descriptor channels and their spectral
    coefficients in every domain they were projected into."""

    values: NDArray[np.float64]
    kind: DescriptorKind
    parameters: dict = field(default_factory=dict)
    projections: dict[float, NDArray[np.float64]] = field(
        default_factory=dict
    )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _nonzero_range(
    basis: SpectralBasis, minimum_k: int
) -> tuple[float, float]:
    if basis.k < minimum_k:
        raise DegenerateSpectrum(
            f"need at least {minimum_k} eigenpairs, basis has {basis.k}"
        )
    first, last = float(basis.eigenvalues[1]), float(basis.eigenvalues[-1])
    if not first > 0 or last - first <= DEGENERATE_SPECTRUM_RTOL * last:
        raise DegenerateSpectrum(
            f"eigenvalues lambda_1 = {first:.3e} and lambda_k-1 = "
            f"{last:.3e} leave no spectral range"
        )
    return first, last


def default_times(basis: SpectralBasis, num_times: int = 100) -> NDArray:
    """Log-spaced diffusion times over ``[4 ln 10 / lambda_k-1,
    4 ln 10 / lambda_1]``."""
    first, last = _nonzero_range(basis, 2)
    return np.geomspace(
        4 * np.log(10) / last, 4 * np.log(10) / first, num_times
    )


def hks(
    basis: SpectralBasis,
    times: NDArray[np.float64] | None = None,
    num_times: int = 100,
) -> DescriptorSet:
    """Heat kernel signature ``sum_i exp(-lambda_i t) phi_i(x)^2``.

    Args:
        basis (SpectralBasis): Basis of the mesh.
        times (NDArray[np.float64]): (optional) Positive diffusion times;
            :func:`default_times` when omitted.
        num_times (int): (optional) Number of default times.

    Returns:
        DescriptorSet: ``(n, len(times))`` strictly positive values.

    Raises:
        EmptyTimes: If ``times`` is empty.
    """
    if times is None:
        times = default_times(basis, num_times)
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0:
        raise EmptyTimes("HKS needs at least one diffusion time")
    if np.any(times <= 0):
        raise ValueError("diffusion times must be positive")

    decay = np.exp(-np.outer(basis.eigenvalues, times))
    values = np.square(basis.eigenfunctions) @ decay
    logger.debug(
        f"HKS on {basis.n} vertices: {times.size} times in "
        f"[{times[0]:.3e}, {times[-1]:.3e}]"
    )
    return DescriptorSet(
        values, DescriptorKind.HKS, {"times": times.tolist()}
    )


def wks(
    basis: SpectralBasis,
    num_energies: int = 100,
    variance_scale: float = 7.0,
) -> DescriptorSet:
    """Wave kernel signature: band-pass filters over the log spectrum.

    Energies are uniform in ``[log lambda_1, log lambda_k-1]`` and each
    filter is a Gaussian of width ``variance_scale * delta_e`` whose weights
    over the nonzero eigenvalues sum to one.

    Raises:
        DegenerateSpectrum: If ``lambda_1`` and ``lambda_k-1`` coincide.
    """
    if num_energies < 1:
        raise ValueError(f"num_energies must be >= 1, got {num_energies}")
    first, last = _nonzero_range(basis, 3)

    log_values = np.log(basis.eigenvalues[1:])
    energies = np.linspace(np.log(first), np.log(last), num_energies)
    sigma = variance_scale * (energies[-1] - energies[0]) / num_energies
    if num_energies == 1:
        sigma = variance_scale * (np.log(last) - np.log(first))

    weights = np.exp(
        -np.square(energies[None, :] - log_values[:, None])
        / (2.0 * sigma**2)
    )
    weights /= weights.sum(axis=0, keepdims=True)
    values = np.square(basis.eigenfunctions[:, 1:]) @ weights
    logger.debug(
        f"WKS on {basis.n} vertices: {num_energies} energies, "
        f"sigma {sigma:.3e}"
    )
    return DescriptorSet(
        values,
        DescriptorKind.WKS,
        {
            "energies": energies.tolist(),
            "sigma": float(sigma),
            "variance_scale": variance_scale,
        },
    )


def project_all(
    descriptors: DescriptorSet, bases: list[SpectralBasis]
) -> DescriptorSet:
    """Attach the ``(k, d)`` coefficient block of every basis, keyed by
    alpha. Projecting again into the same bases reproduces the blocks."""
    projections = dict(descriptors.projections)
    for basis in bases:
        if basis.n != descriptors.n:
            raise MeshMismatch(
                f"descriptors have {descriptors.n} rows, basis for alpha "
                f"{basis.alpha} has {basis.n} vertices"
            )
        projections[basis.alpha] = project(basis, descriptors.values)
    return replace(descriptors, projections=projections)


def normalize_channels(descriptors: DescriptorSet) -> DescriptorSet:
    """Zero mean and unit variance per channel; constant channels become
    zero. Projections are dropped because the values change."""
    values = descriptors.values
    centred = values - values.mean(axis=0)
    std = values.std(axis=0)
    varying = std > 1e-12 * np.abs(values).max(axis=0, initial=0.0)
    scale = np.divide(1.0, std, out=np.zeros_like(std), where=varying)
    parameters = dict(descriptors.parameters, normalized=True)
    return DescriptorSet(centred * scale, descriptors.kind, parameters)


def subsample_channels(descriptors: DescriptorSet, step: int) -> DescriptorSet:
    """Keep every ``step``-th channel (values and projections)."""
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    return DescriptorSet(
        descriptors.values[:, ::step],
        descriptors.kind,
        dict(descriptors.parameters, step=step),
        {a: p[:, ::step] for a, p in descriptors.projections.items()},
    )
