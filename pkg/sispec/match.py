from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
from pathlib import Path
import sys
import warnings

import numpy as np

from .correspondence.fmap import (
    DomainOperators,
    FunctionalMapPair,
    LossWeights,
    initialize_pairs,
    mult_operators,
)
from .correspondence.fusion import Correspondence, DomainMatch, fuse
from .correspondence.fusion import pointwise_from_map
from .correspondence.refine import GradientDescentRefiner, RefineResult
from .defaults import PipelineConfig, default_num_workers
from .exceptions import MeshValidationError
from .geometry.curvature import curvature_field
from .geometry.mesh import TriMesh, validate
from .spectral.basis import SpectralBasis, eigensolve
from .spectral.cache import BasisCache, cache_key
from .spectral.descriptors import (
    DescriptorSet,
    hks,
    normalize_channels,
    project_all,
    subsample_channels,
    wks,
)
from .spectral.operators import assemble_mass, assemble_stiffness

logger = logging.getLogger(__name__)

# Specify the supported Python version range
REQUIRED_MAJOR = 3
MINOR_VERSION_MIN = 12
MINOR_VERSION_MAX = 13

current_major = sys.version_info.major
current_minor = sys.version_info.minor

if current_major != REQUIRED_MAJOR or not (
    MINOR_VERSION_MIN <= current_minor <= MINOR_VERSION_MAX
):
    warnings.warn(
        f"Warning: This package is designed for Python "
        f"{REQUIRED_MAJOR}.{MINOR_VERSION_MIN}-"
        f"{REQUIRED_MAJOR}.{MINOR_VERSION_MAX}. "
        f"You are using Python {current_major}.{current_minor}."
    )

DESCRIPTOR_NOTICE = (
    "Intrinsic HKS/WKS descriptors stand in for learned SHOT features; "
    "the descriptor stage is axiomatic."
)


@dataclass
class SpectraResult:
    bases: dict[float, SpectralBasis]
    computed: int
    paths: dict[float, Path]


@dataclass
class MatchResult:
    correspondence: Correspondence
    pairs: list[FunctionalMapPair]
    refinement: RefineResult
    domains: list[DomainMatch]
    source_bases: dict[float, SpectralBasis]
    target_bases: dict[float, SpectralBasis]
    descriptors: tuple[DescriptorSet, DescriptorSet]


def _require_valid(mesh: TriMesh) -> None:
    report = validate(mesh)
    if not report.accepted:
        raise MeshValidationError(report)


def compute_spectra(
    mesh: TriMesh,
    config: PipelineConfig,
    cache_dir: str | Path | None = None,
    alphas: tuple[float, ...] | None = None,
) -> SpectraResult:
    """One spectral basis per alpha, reusing cached bases whose key (mesh
    content, spectral settings and alpha) matches.

    Args:
        mesh (TriMesh): Valid mesh.
        config (PipelineConfig): Spectral settings.
        cache_dir (str | Path): (optional) Basis cache; no caching when
            None.
        alphas (tuple[float, ...]): (optional) Domains to compute.
            Defaults to ``config.alphas``.

    Returns:
        SpectraResult: Bases keyed by alpha, the number computed afresh
        and the cache file of each basis.

    Raises:
        MeshValidationError: If ``mesh`` violates a mesh invariant.
    """
    _require_valid(mesh)
    alphas = tuple(config.alphas if alphas is None else alphas)
    cache = BasisCache(cache_dir) if cache_dir is not None else None
    settings = config.spectra_settings()
    keys = {alpha: cache_key(mesh, settings, alpha) for alpha in alphas}

    bases: dict[float, SpectralBasis] = {}
    if cache is not None:
        for alpha in alphas:
            basis = cache.load(keys[alpha])
            if basis is not None:
                bases[alpha] = basis
    missing = [alpha for alpha in alphas if alpha not in bases]

    if missing:
        stiffness = assemble_stiffness(mesh, config.clamp_cotangents)
        curvature = None
        if any(alpha > 0 for alpha in missing):
            curvature = curvature_field(
                mesh,
                config.smooth_iterations,
                config.smooth_step,
                config.clip_lo_pct,
                config.clip_hi_pct,
                config.clip_floor,
            )

        def solve(alpha: float) -> SpectralBasis:
            mass = assemble_mass(mesh, curvature, alpha, config.lumped_mass)
            return eigensolve(
                stiffness,
                mass,
                config.k,
                alpha,
                seed=config.seed,
                lumped=config.lumped_mass,
            )

        workers = default_num_workers(len(missing), config.workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for alpha, basis in zip(missing, pool.map(solve, missing)):
                bases[alpha] = basis

    paths = {}
    if cache is not None:
        for alpha in alphas:
            path = cache.path(keys[alpha])
            if alpha in missing:
                cache.store(keys[alpha], bases[alpha])
            paths[alpha] = path

    logger.info(
        f"Spectra of {mesh.name}: {len(missing)} computed, "
        f"{len(alphas) - len(missing)} from cache"
    )
    return SpectraResult(
        {alpha: bases[alpha] for alpha in alphas}, len(missing), paths
    )


def compute_descriptors(
    basis: SpectralBasis, config: PipelineConfig
) -> DescriptorSet:
    if config.descriptor == "hks":
        descriptors = hks(basis, num_times=config.num_descriptors)
    else:
        descriptors = wks(
            basis, config.num_descriptors, config.wks_variance_scale
        )
    if config.normalize_descriptors:
        descriptors = normalize_channels(descriptors)
    return descriptors


def match(
    source: TriMesh,
    target: TriMesh,
    config: PipelineConfig | None = None,
    cache_dir: str | Path | None = None,
) -> MatchResult:
    """Full multispectral correspondence from ``target`` to ``source``.

    Descriptors are computed on the Euclidean (alpha = 0) basis of each
    shape and projected into every configured domain; the least-squares
    maps are refined jointly over all domains, converted to pointwise maps
    per domain and fused.

    Args:
        source (TriMesh): Shape whose vertices the result points to.
        target (TriMesh): Shape with one correspondence per vertex.
        config (PipelineConfig): (optional) Pipeline settings.
        cache_dir (str | Path): (optional) Basis cache directory.

    Returns:
        MatchResult: The fused correspondence and every intermediate.
    """
    config = config or PipelineConfig()
    warnings.warn(DESCRIPTOR_NOTICE)
    alphas = config.alphas
    needed = alphas if 0.0 in alphas else (*alphas, 0.0)

    source_bases = compute_spectra(source, config, cache_dir, needed).bases
    target_bases = compute_spectra(target, config, cache_dir, needed).bases

    source_desc = project_all(
        compute_descriptors(source_bases[0.0], config),
        [source_bases[a] for a in alphas],
    )
    target_desc = project_all(
        compute_descriptors(target_bases[0.0], config),
        [target_bases[a] for a in alphas],
    )

    pairs = initialize_pairs(
        source_desc.projections,
        target_desc.projections,
        list(alphas),
        config.lsq_damping,
    )

    source_sub = subsample_channels(source_desc, config.descriptor_step)
    target_sub = subsample_channels(target_desc, config.descriptor_step)
    operators = [
        DomainOperators(
            source_bases[alpha].eigenvalues,
            target_bases[alpha].eigenvalues,
            mult_operators(source_bases[alpha], source_sub.values),
            mult_operators(target_bases[alpha], target_sub.values),
        )
        for alpha in alphas
    ]

    weights = LossWeights(
        config.w_bijectivity,
        config.w_orthogonality,
        config.w_laplacian,
        config.w_descriptor,
    )
    refiner = GradientDescentRefiner(
        max_iters=config.max_iters,
        rel_tol=config.rel_tol,
        max_halvings=config.max_halvings,
    )
    refinement = refiner(pairs, weights, operators)

    def recover(pair: FunctionalMapPair) -> DomainMatch:
        return pointwise_from_map(
            pair.C_xy,
            source_bases[pair.alpha].eigenfunctions,
            target_bases[pair.alpha].eigenfunctions,
            pair.alpha,
        )

    workers = default_num_workers(len(alphas), config.workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        domains = list(pool.map(recover, refinement.pairs))

    correspondence = fuse(domains, names=(source.name, target.name))
    agreement = float(
        np.mean(
            [np.mean(d.mapping == correspondence.mapping) for d in domains]
        )
    )
    logger.info(
        f"Matched {target.name} -> {source.name} over {len(alphas)} "
        f"domain(s); mean per-domain agreement with the fused map "
        f"{100 * agreement:.1f}%"
    )
    return MatchResult(
        correspondence,
        refinement.pairs,
        refinement,
        domains,
        source_bases,
        target_bases,
        (source_desc, target_desc),
    )
