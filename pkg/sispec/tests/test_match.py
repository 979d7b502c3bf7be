import os

import numpy as np
from numpy.testing import assert_array_equal
import pytest

from sispec import PipelineConfig, compute_spectra, match
from sispec.exceptions import MeshValidationError, SispecError
from sispec.geometry.deform import local_scale_deform
from sispec.geometry.primitives import bumpy_sphere, permute_vertices
from sispec import selftest
from sispec.selftest import CheckResult, format_results, run_selftest
from sispec.tests import mock_meshes

SMALL = PipelineConfig(k=20)

run_experiments = pytest.mark.skipif(
    os.getenv("SISPEC_RUN_EXPERIMENTS") != "1",
    reason="set SISPEC_RUN_EXPERIMENTS=1 to run the experiments",
)


@pytest.fixture(scope="module")
def mesh():
    return bumpy_sphere(2)


def test_identity_match(mesh):
    with pytest.warns(UserWarning, match="descriptors"):
        result = match(mesh, mesh, SMALL)
    assert_array_equal(result.correspondence.mapping, np.arange(162))
    assert len(result.pairs) == 3
    assert [p.alpha for p in result.pairs] == list(SMALL.alphas)
    assert result.refinement.final.total <= result.refinement.initial.total
    assert result.correspondence.names == (mesh.name, mesh.name)


def test_permuted_copy_is_recovered(mesh):
    permutation = np.random.default_rng(0).permutation(mesh.n_vertices)
    result = match(mesh, permute_vertices(mesh, permutation), SMALL)
    recovered = np.mean(result.correspondence.mapping == permutation)
    assert recovered >= selftest.PERMUTATION_RECOVERY


def test_match_adds_the_euclidean_basis_for_descriptors(mesh):
    config = SMALL.replace(alphas=[0.6], max_iters=5)
    result = match(mesh, mesh, config)
    assert set(result.source_bases) == {0.0, 0.6}
    source_desc, target_desc = result.descriptors
    assert set(source_desc.projections) == {0.6}
    assert source_desc.projections[0.6].shape == (20, 100)
    assert len(result.domains) == 1
    assert_array_equal(result.correspondence.winning_domain, 0)


def test_match_is_deterministic(mesh, tmp_path):
    target = local_scale_deform(
        mesh, 0, 0.25 * mesh.bounding_box_diagonal, 1.5
    )
    config = SMALL.replace(max_iters=50)
    first = match(mesh, target, config).correspondence
    second = match(mesh, target, config).correspondence
    a = first.write(tmp_path / "a.txt").read_bytes()
    b = second.write(tmp_path / "b.txt").read_bytes()
    assert a == b


def test_spectra_are_cached(mesh, tmp_path):
    config = PipelineConfig(k=10, alphas=(0.0, 1.0))
    first = compute_spectra(mesh, config, tmp_path)
    assert first.computed == 2
    assert all(path.exists() for path in first.paths.values())

    second = compute_spectra(mesh, config, tmp_path)
    assert second.computed == 0
    for alpha in config.alphas:
        assert_array_equal(
            second.bases[alpha].eigenfunctions,
            first.bases[alpha].eigenfunctions,
        )

    changed = compute_spectra(mesh, config.replace(k=12), tmp_path)
    assert changed.computed == 2
    uncached = compute_spectra(mesh, config, None, alphas=(0.6,))
    assert uncached.computed == 1 and uncached.paths == {}


def test_spectra_reject_invalid_meshes():
    with pytest.raises(MeshValidationError) as info:
        compute_spectra(mock_meshes.non_manifold_fan(), PipelineConfig())
    assert info.value.report.non_manifold_edges == [(0, 1)]


def test_run_selftest_counts_errors_as_failures(monkeypatch):
    def broken(seed):
        raise SispecError("boom")

    monkeypatch.setattr(
        selftest,
        "CHECKS",
        {"passes": lambda seed: (True, "fine"), "raises": broken},
    )
    results = run_selftest()
    assert [r.passed for r in results] == [True, False]
    assert results[1].detail == "SispecError: boom"


def test_format_results():
    text = format_results(
        [
            CheckResult("short", True, "fine", 0.5),
            CheckResult("much longer", False, "off by one", 12.0),
        ]
    )
    lines = text.splitlines()
    assert lines[0].startswith("check      ")
    assert "ok" in lines[1]
    assert "FAILED" in lines[2] and lines[2].endswith("off by one")


@pytest.mark.parametrize(
    "check",
    [
        selftest.check_least_squares,
        selftest.check_fusion,
        selftest.check_geodesics,
    ],
)
def test_quick_selftest_checks(check):
    passed, detail = check(0)
    assert passed, detail


@run_experiments
@pytest.mark.parametrize(
    "experiment",
    [
        pytest.param(
            selftest.check_local_scaling,
            marks=pytest.mark.xfail(
                reason="alpha 1 moves more than alpha 0 under the plain "
                "cosine blend",
                strict=False,
            ),
        ),
        selftest.check_local_scaling_rigid_core,
        selftest.check_multispectral_benefit,
    ],
)
def test_experiments(experiment):
    passed, detail = experiment(0)
    assert passed, detail


def test_every_experiment_is_exercised():
    assert set(selftest.EXPERIMENTS.values()) == {
        selftest.check_local_scaling,
        selftest.check_local_scaling_rigid_core,
        selftest.check_multispectral_benefit,
    }
