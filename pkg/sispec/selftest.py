"""Invariant suite behind ``sispec selftest``.

Each check builds its own small problem, compares the pipeline against an
independent oracle and reports a :class:`CheckResult`. The comparative
experiments (local scaling of the spectrum, multispectral benefit of the
full pipeline) take longer and only run on request.
"""

from dataclasses import dataclass
import logging
from pathlib import Path
import tempfile
import time

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import csgraph

from .correspondence.fmap import (
    DomainOperators,
    FunctionalMapPair,
    LossWeights,
    solve_lsq,
)
from .correspondence.fusion import DomainMatch, fuse, pointwise_from_map
from .correspondence.losses import TERMS, loss_and_gradient, total_loss
from .defaults import PipelineConfig
from .evaluation.error_curve import geodesic_error
from .evaluation.geodesics import GeodesicOracle
from .exceptions import SispecError
from .geometry.curvature import curvature_field
from .geometry.deform import local_scale_deform
from .geometry.mesh import TriMesh
from .geometry.primitives import (
    bumpy_sphere,
    grid,
    icosphere,
    permute_vertices,
)
from .match import match
from .spectral.basis import SpectralBasis, eigensolve
from .spectral.operators import assemble_mass, assemble_stiffness

logger = logging.getLogger(__name__)

FINITE_DIFFERENCE_STEP = 1e-5
# Fraction of vertices a permuted copy must map back to
PERMUTATION_RECOVERY = 0.999

LOCAL_SCALE_FACTOR = 1.5
# Region radius relative to the bounding-box diagonal
LOCAL_SCALE_RADIUS = 0.25
RIGID_CORE_FALLOFF = 0.5


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def sphere_eigenvalues(k: int) -> NDArray[np.float64]:
    """First ``k`` Laplace-Beltrami eigenvalues of the unit sphere:
    ``l (l + 1)`` repeated ``2 l + 1`` times."""
    values = []
    degree = 0
    while len(values) < k:
        values.extend([degree * (degree + 1)] * (2 * degree + 1))
        degree += 1
    return np.array(values[:k], dtype=float)


def spectrum(mesh: TriMesh, alpha: float, k: int) -> SpectralBasis:
    """Basis with the default curvature settings."""
    curvature = curvature_field(mesh) if alpha > 0 else None
    return eigensolve(
        assemble_stiffness(mesh),
        assemble_mass(mesh, curvature, alpha),
        k,
        alpha,
    )


def numerical_gradient(
    pairs: list[FunctionalMapPair],
    weights: LossWeights,
    operators: list[DomainOperators],
    h: float = FINITE_DIFFERENCE_STEP,
) -> list[tuple[NDArray, NDArray]]:
    """Central differences of :func:`total_loss` in every map entry."""
    gradients = []
    for index, pair in enumerate(pairs):
        per_map = []
        for name in ("C_xy", "C_yx"):
            base = getattr(pair, name)
            grad = np.empty_like(base)
            for entry in np.ndindex(base.shape):
                values = []
                for sign in (1.0, -1.0):
                    shifted = base.copy()
                    shifted[entry] += sign * h
                    trial = [p.copy() for p in pairs]
                    setattr(trial[index], name, shifted)
                    values.append(total_loss(trial, weights, operators).total)
                grad[entry] = (values[0] - values[1]) / (2.0 * h)
            per_map.append(grad)
        gradients.append(tuple(per_map))
    return gradients


def random_loss_problem(
    rng: np.random.Generator, k: int = 10, channels: int = 3
) -> tuple[FunctionalMapPair, DomainOperators]:
    """Random maps, spectra and symmetric multiplication operators."""

    def symmetric() -> NDArray:
        M = rng.standard_normal((channels, k, k))
        return 0.5 * (M + M.transpose(0, 2, 1))

    pair = FunctionalMapPair(
        0.0,
        0.3 * rng.standard_normal((k, k)),
        0.3 * rng.standard_normal((k, k)),
    )
    operators = DomainOperators(
        np.sort(rng.uniform(0.0, 2.0, k)),
        np.sort(rng.uniform(0.0, 2.0, k)),
        symmetric(),
        symmetric(),
    )
    return pair, operators


def brute_force_fusion(
    maps: list[NDArray], Phi: NDArray, Psi: NDArray
) -> NDArray[np.int64]:
    """Exhaustive fusion oracle: every distance of every domain, explicit
    normalization, argmin over domains with the lowest index winning."""
    n_source, n_target = len(Phi), len(Psi)
    best = []
    for C in maps:
        embedded = Phi @ C.T
        distances = np.empty((n_target, n_source))
        for i in range(n_target):
            for j in range(n_source):
                distances[i, j] = np.sqrt(
                    np.sum((embedded[j] - Psi[i]) ** 2)
                )
        lo, hi, mean = distances.min(), distances.max(), distances.mean()
        rows = []
        for i in range(n_target):
            j = int(np.argmin(distances[i]))
            score = (distances[i, j] - lo) / (hi - lo) - (mean - lo) / (
                hi - lo
            )
            rows.append((j, score))
        best.append(rows)
    mapping = np.empty(n_target, dtype=np.int64)
    for i in range(n_target):
        winner = 0
        for domain in range(1, len(maps)):
            if best[domain][i][1] < best[winner][i][1]:
                winner = domain
        mapping[i] = best[winner][i][0]
    return mapping


def check_sphere_spectrum(seed: int = 0) -> tuple[bool, str]:
    basis = spectrum(icosphere(4), 0.0, 16)
    expected = sphere_eigenvalues(16)
    relative = np.abs(basis.eigenvalues[1:] / expected[1:] - 1.0)
    passed = abs(basis.eigenvalues[0]) < 1e-8 and relative.max() < 0.05
    return passed, f"max relative deviation {relative.max():.2e}"


def check_scale_invariance(seed: int = 0) -> tuple[bool, str]:
    mesh = bumpy_sphere(3, seed)
    scaled = mesh.with_vertices(2.0 * mesh.vertices)
    worst = 0.0
    for alpha in (0.0, 0.6, 1.0):
        original = spectrum(mesh, alpha, 21).eigenvalues[1:]
        rescaled = spectrum(scaled, alpha, 21).eigenvalues[1:]
        factor = 2.0 ** (2.0 * alpha - 2.0)
        worst = max(worst, np.abs(rescaled / (factor * original) - 1).max())
    return worst < 1e-4, f"max deviation from s^(2a-2) {worst:.2e}"


def check_gradients(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        pair, operators = random_loss_problem(rng)
        for term in TERMS:
            weights = LossWeights(
                **{t: float(t == term) for t in TERMS}
            )
            _, analytic = loss_and_gradient([pair], weights, [operators])
            numeric = numerical_gradient([pair], weights, [operators])
            for a, n in zip(analytic[0], numeric[0]):
                error = np.abs(a - n) / np.maximum(np.abs(a), 1.0)
                worst = max(worst, float(error.max()))
    return worst < 1e-5, f"max relative gradient error {worst:.2e}"


def check_least_squares(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        F = rng.standard_normal((10, 30))
        G = rng.standard_normal((10, 30))
        oracle = G @ np.linalg.pinv(F)
        worst = max(worst, np.abs(solve_lsq(F, G) - oracle).max())
    return worst < 1e-8, f"max deviation from pinv {worst:.2e}"


def check_fusion(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    Phi = rng.standard_normal((150, 8))
    Psi = rng.standard_normal((120, 8))
    maps = [rng.standard_normal((8, 8)) for _ in range(3)]
    domains: list[DomainMatch] = [
        pointwise_from_map(C, Phi, Psi, alpha)
        for C, alpha in zip(maps, (0.0, 0.5, 1.0))
    ]
    fused = fuse(domains).mapping
    oracle = brute_force_fusion(maps, Phi, Psi)
    mismatches = int(np.sum(fused != oracle))
    return mismatches == 0, f"{mismatches} of {len(oracle)} differ"


def check_geodesics(seed: int = 0) -> tuple[bool, str]:
    worst = 0.0
    for mesh in (grid(6, 7), icosphere(1), bumpy_sphere(1, seed)):
        oracle = GeodesicOracle(mesh)
        dijkstra = oracle.distances_from(np.arange(mesh.n_vertices))
        floyd = (
            csgraph.floyd_warshall(mesh.edge_graph, directed=False)
            / oracle.normalization
        )
        worst = max(worst, float(np.abs(dijkstra - floyd).max()))
    return worst < 1e-12, f"max deviation from Floyd-Warshall {worst:.1e}"


def _small_config(seed: int, **changes) -> PipelineConfig:
    return PipelineConfig(k=20, seed=seed, **changes)


def check_identity_match(seed: int = 0) -> tuple[bool, str]:
    mesh = bumpy_sphere(2, seed)
    result = match(mesh, mesh, _small_config(seed))
    identity = np.arange(mesh.n_vertices)
    curve = geodesic_error(
        result.correspondence, identity, GeodesicOracle(mesh)
    )
    correct = float(np.mean(result.correspondence.mapping == identity))
    return (
        correct == 1.0 and curve.mean_error == 0.0,
        f"{100 * correct:.1f}% identity, mean error {curve.mean_error:.2e}",
    )


def check_permutation_match(seed: int = 0) -> tuple[bool, str]:
    mesh = bumpy_sphere(2, seed)
    permutation = np.random.default_rng(seed).permutation(mesh.n_vertices)
    permuted = permute_vertices(mesh, permutation)
    result = match(mesh, permuted, _small_config(seed))
    recovered = float(np.mean(result.correspondence.mapping == permutation))
    detail = f"{100 * recovered:.2f}% recovered"
    return recovered >= PERMUTATION_RECOVERY, detail


def check_determinism(seed: int = 0) -> tuple[bool, str]:
    source = bumpy_sphere(2, seed)
    target = _locally_scaled(source, 1.0)
    with tempfile.TemporaryDirectory() as directory:
        files = []
        for run in range(2):
            result = match(source, target, _small_config(seed))
            files.append(
                result.correspondence.write(Path(directory) / f"run{run}.txt")
            )
        identical = files[0].read_bytes() == files[1].read_bytes()
    return identical, "byte-identical" if identical else "outputs differ"


def _locally_scaled(mesh: TriMesh, falloff: float) -> TriMesh:
    return local_scale_deform(
        mesh,
        0,
        LOCAL_SCALE_RADIUS * mesh.bounding_box_diagonal,
        LOCAL_SCALE_FACTOR,
        falloff=falloff,
    )


def _eigenvalue_change(seed: int, falloff: float) -> tuple[bool, str]:
    mesh = bumpy_sphere(3, seed)
    deformed = _locally_scaled(mesh, falloff)
    change = {}
    for alpha in (0.0, 1.0):
        before = spectrum(mesh, alpha, 21).eigenvalues[1:]
        after = spectrum(deformed, alpha, 21).eigenvalues[1:]
        change[alpha] = float(np.mean(np.abs(after / before - 1.0)))
    return change[1.0] < change[0.0], (
        f"falloff {falloff:g}, mean relative change: "
        f"alpha 0 {change[0.0]:.4f}, alpha 1 {change[1.0]:.4f}"
    )


def check_local_scaling(seed: int = 0) -> tuple[bool, str]:
    """Relative eigenvalue change under the plain cosine blend."""
    return _eigenvalue_change(seed, 1.0)


def check_local_scaling_rigid_core(seed: int = 0) -> tuple[bool, str]:
    """Relative eigenvalue change when the inner half of the region is
    scaled rigidly."""
    return _eigenvalue_change(seed, RIGID_CORE_FALLOFF)


def check_multispectral_benefit(seed: int = 0) -> tuple[bool, str]:
    source = bumpy_sphere(3, seed)
    target = _locally_scaled(source, RIGID_CORE_FALLOFF)
    oracle = GeodesicOracle(source)
    ground_truth = np.arange(target.n_vertices)
    errors = {}
    for name, alphas in (("single", (0.0,)), ("multi", (0.5, 0.6, 0.8))):
        config = PipelineConfig(alphas=alphas, seed=seed)
        result = match(source, target, config)
        errors[name] = geodesic_error(
            result.correspondence, ground_truth, oracle
        ).mean_error
    margin = errors["single"] - errors["multi"]
    return margin > 0, (
        f"mean error {{0}} {errors['single']:.5f}, {{0.5, 0.6, 0.8}} "
        f"{errors['multi']:.5f}, margin {margin:.5f}"
    )


CHECKS = {
    "sphere spectrum": check_sphere_spectrum,
    "scale invariance": check_scale_invariance,
    "loss gradients": check_gradients,
    "least squares": check_least_squares,
    "fusion oracle": check_fusion,
    "identity match": check_identity_match,
    "permutation match": check_permutation_match,
    "geodesic oracle": check_geodesics,
    "determinism": check_determinism,
}

EXPERIMENTS = {
    "local scaling": check_local_scaling,
    "local scaling, rigid core": check_local_scaling_rigid_core,
    "multispectral benefit": check_multispectral_benefit,
}


def run_selftest(
    experiments: bool = False, seed: int = 0
) -> list[CheckResult]:
    """Run every check (and the experiments when asked); a check that
    raises counts as failed."""
    checks = dict(CHECKS)
    if experiments:
        checks.update(EXPERIMENTS)
    results = []
    for name, check in checks.items():
        start = time.perf_counter()
        try:
            passed, detail = check(seed)
        except SispecError as error:
            passed, detail = False, f"{type(error).__name__}: {error}"
        elapsed = time.perf_counter() - start
        logger.info(f"{name}: {'ok' if passed else 'FAILED'} ({detail})")
        results.append(CheckResult(name, bool(passed), detail, elapsed))
    return results


def format_results(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  seconds  detail"]
    for r in results:
        status = "ok" if r.passed else "FAILED"
        lines.append(
            f"{r.name:<{width}}  {status:<6}  {r.seconds:7.2f}  {r.detail}"
        )
    return "\n".join(lines)
