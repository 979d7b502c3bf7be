import logging
import warnings

import numpy as np
from numpy.testing import assert_allclose
import pytest

from sispec.correspondence.fmap import (
    DomainOperators,
    FunctionalMapPair,
    LossWeights,
    initialize_pairs,
    mult_operator,
    mult_operators,
    solve_lsq,
)
from sispec.correspondence.losses import (
    TERMS,
    loss_and_gradient,
    loss_bijectivity,
    loss_descriptor_commutativity,
    loss_lbo_commutativity,
    loss_orthogonality,
    total_loss,
)
from sispec.correspondence.refine import (
    GradientDescentRefiner,
    refine,
    write_loss_trace,
)
from sispec.exceptions import (
    ConfigError,
    DimensionMismatch,
    NonFiniteGradient,
    SingularSystem,
)
from sispec.geometry.primitives import bumpy_sphere
from sispec.selftest import (
    numerical_gradient,
    random_loss_problem,
    spectrum,
)
from sispec.spectral.basis import eigensolve
from sispec.spectral.operators import assemble_mass, assemble_stiffness

BIJECTIVITY_ONLY = LossWeights(1.0, 0.0, 0.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_solve_lsq_identity(rng):
    F = rng.standard_normal((10, 30))
    assert_allclose(solve_lsq(F, F), np.eye(10), atol=1e-8)


def test_solve_lsq_recovers_consistent_map(rng):
    F = rng.standard_normal((10, 20))
    R = rng.standard_normal((10, 10))
    assert_allclose(solve_lsq(F, R @ F), R, atol=1e-6)


def test_solve_lsq_matches_pseudo_inverse(rng):
    F = rng.standard_normal((10, 30))
    G = rng.standard_normal((10, 30))
    C = solve_lsq(F, G)
    oracle = G @ np.linalg.pinv(F)
    objective = np.sum((C @ F - G) ** 2)
    assert objective == pytest.approx(
        np.sum((oracle @ F - G) ** 2), abs=1e-10, rel=1e-12
    )


def test_solve_lsq_errors(rng):
    with pytest.raises(SingularSystem):
        solve_lsq(np.zeros((4, 8)), np.ones((4, 8)))
    with pytest.raises(DimensionMismatch):
        solve_lsq(np.ones((4, 8)), np.ones((4, 7)))
    with pytest.warns(UserWarning, match="underdetermined"):
        F, G = rng.standard_normal((2, 5, 3))
        C = solve_lsq(F, G)
    assert np.isfinite(C).all()


def test_solve_lsq_damps_rank_deficient_systems_quietly(caplog):
    caplog.set_level(logging.DEBUG, logger="sispec")
    F = np.zeros((4, 8))
    F[0] = 100.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        C = solve_lsq(F, F)
    assert np.isfinite(C).all()
    assert C[0, 0] == pytest.approx(1.0, rel=1e-6)
    assert "Damping least squares" in caplog.text


def test_initialize_pairs_solves_both_directions(rng):
    F = rng.standard_normal((6, 18))
    R = np.linalg.qr(rng.standard_normal((6, 6)))[0]
    pairs = initialize_pairs({0.5: F}, {0.5: R @ F}, [0.5])
    assert pairs[0].alpha == 0.5
    assert_allclose(pairs[0].C_xy, R, atol=1e-8)
    assert_allclose(pairs[0].C_yx, R.T, atol=1e-8)


def test_loss_weights_validation():
    assert_allclose(LossWeights().as_array(), [1e3, 1e3, 1.0, 1e5])
    for weights in [(-1, 0, 0, 0), (0, 0, 0, 0), (np.nan, 1, 1, 1)]:
        with pytest.raises(ConfigError):
            LossWeights(*weights)


def test_pair_validation():
    with pytest.raises(DimensionMismatch):
        FunctionalMapPair(0.0, np.eye(3), np.eye(4))
    with pytest.raises(ValueError):
        FunctionalMapPair(0.0, np.full((2, 2), np.inf), np.eye(2))


def test_bijectivity_examples(rng):
    assert loss_bijectivity(FunctionalMapPair.identity(0.0, 4)) == 0.0
    assert loss_bijectivity(
        FunctionalMapPair(0.0, 2 * np.eye(3), np.eye(3))
    ) == pytest.approx(6.0)
    Q = np.linalg.qr(rng.standard_normal((6, 6)))[0]
    assert loss_bijectivity(FunctionalMapPair(0.0, Q, Q.T)) < 1e-12


def test_orthogonality_examples(rng):
    Q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    assert loss_orthogonality(FunctionalMapPair(0.0, Q, Q)) < 1e-12
    stretched = np.diag([2.0, 1.0, 1.0, 1.0])
    assert loss_orthogonality(
        FunctionalMapPair(0.0, stretched, np.eye(4))
    ) == pytest.approx(9.0)

    A, B = rng.standard_normal((2, 4, 4))
    expected = 0.0
    for C in (A, B):
        for i in range(4):
            for j in range(4):
                gram = sum(C[r, i] * C[r, j] for r in range(4))
                expected += (gram - float(i == j)) ** 2
    assert loss_orthogonality(FunctionalMapPair(0.0, A, B)) == pytest.approx(
        expected
    )


def test_laplacian_commutativity_examples(rng):
    pair = FunctionalMapPair.identity(0.0, 2)
    assert loss_lbo_commutativity(pair, [0.0, 1.0], [0.0, 1.0]) == 0.0
    assert loss_lbo_commutativity(pair, [0.0, 1.0], [0.0, 2.0]) == 2.0

    lam_x = np.sort(rng.uniform(0, 5, 8))
    lam_y = np.sort(rng.uniform(0, 5, 8))
    A, B = rng.standard_normal((2, 8, 8))
    expected = 0.0
    for i in range(8):
        for j in range(8):
            expected += A[i, j] ** 2 * (lam_x[j] - lam_y[i]) ** 2
            expected += B[i, j] ** 2 * (lam_y[j] - lam_x[i]) ** 2
    assert loss_lbo_commutativity(
        FunctionalMapPair(0.0, A, B), lam_x, lam_y
    ) == pytest.approx(expected)


def test_descriptor_commutativity_examples(rng):
    A, B = rng.standard_normal((2, 6, 6))
    pair = FunctionalMapPair(0.0, A, B)
    identities = np.stack([np.eye(6)] * 3)
    assert loss_descriptor_commutativity(pair, identities, identities) < 1e-20

    M = rng.standard_normal((1, 6, 6))
    identity_pair = FunctionalMapPair.identity(0.0, 6)
    assert loss_descriptor_commutativity(identity_pair, M, M) == 0.0

    Mf, Mg = rng.standard_normal((2, 6, 6))
    expected = np.linalg.norm(A @ Mf - Mg @ A) ** 2
    expected += np.linalg.norm(B @ Mg - Mf @ B) ** 2
    assert loss_descriptor_commutativity(
        pair, Mf[None], Mg[None]
    ) == pytest.approx(expected)
    with pytest.raises(ValueError):
        loss_descriptor_commutativity(pair, Mf[None], identities)


def test_total_loss_is_additive(rng):
    pair = FunctionalMapPair(0.0, 2 * np.eye(3), np.eye(3))
    assert total_loss([pair], BIJECTIVITY_ONLY).total == pytest.approx(6.0)

    random_pair, operators = random_loss_problem(rng, k=5)
    weights = LossWeights()
    single = total_loss([random_pair], weights, [operators])
    triple = total_loss([random_pair] * 3, weights, [operators] * 3)
    assert triple.total == pytest.approx(3 * single.total, rel=1e-14)
    assert triple.terms.shape == (3, 4)
    assert set(single.as_dict()) == set(TERMS)


def test_total_loss_vanishes_at_identity():
    lam = np.array([0.0, 1.0, 3.0])
    mult = np.stack([np.diag([1.0, 2.0, 3.0])])
    operators = DomainOperators(lam, lam, mult, mult)
    pair = FunctionalMapPair.identity(0.0, 3)
    assert total_loss([pair], LossWeights(), [operators]).total == 0.0


def test_total_loss_needs_operators():
    with pytest.raises(ValueError):
        total_loss([FunctionalMapPair.identity(0.0, 3)], LossWeights())


@pytest.mark.parametrize("term", TERMS)
def test_gradient_matches_finite_differences(rng, term):
    pair, operators = random_loss_problem(rng, k=6)
    weights = LossWeights(**{t: float(t == term) for t in TERMS})
    _, analytic = loss_and_gradient([pair], weights, [operators])
    numeric = numerical_gradient([pair], weights, [operators])
    for a, n in zip(analytic[0], numeric[0]):
        assert (np.abs(a - n) / np.maximum(np.abs(a), 1.0)).max() < 1e-5


def test_mult_operator_of_constants():
    basis = spectrum(bumpy_sphere(1), 0.0, 10)
    ones = np.ones(basis.n)
    assert_allclose(mult_operator(basis, ones), np.eye(10), atol=1e-10)
    assert_allclose(
        mult_operator(basis, 3.0 * ones), 3.0 * np.eye(10), atol=1e-10
    )
    stack = mult_operators(basis, np.column_stack([ones, 2.0 * ones]))
    assert stack.shape == (2, 10, 10)
    with pytest.raises(DimensionMismatch):
        mult_operator(basis, np.ones(3))


def _dense_mult_operator(basis, f):
    phi = basis.eigenfunctions
    return phi.T @ basis.mass.toarray() @ np.diag(f) @ phi


def test_mult_operator_is_the_symmetric_part():
    basis = spectrum(bumpy_sphere(1), 0.0, 10)
    f = basis.eigenfunctions[:, 1]
    raw = _dense_mult_operator(basis, f)
    assert_allclose(mult_operator(basis, f), 0.5 * (raw + raw.T), atol=1e-12)


def test_mult_operator_with_lumped_mass_is_exact():
    mesh = bumpy_sphere(1)
    basis = eigensolve(
        assemble_stiffness(mesh),
        assemble_mass(mesh, None, 0.0, lumped=True),
        10,
        lumped=True,
    )
    f = mesh.vertices[:, 2]
    assert_allclose(
        mult_operator(basis, f), _dense_mult_operator(basis, f), atol=1e-12
    )


def test_refine_leaves_global_minimum_alone():
    pairs = [FunctionalMapPair.identity(0.0, 4)]
    result = refine(pairs, BIJECTIVITY_ONLY)
    assert result.iterations == 0
    assert result.stop_reason == "zero loss"
    assert_allclose(result.pairs[0].C_xy, np.eye(4))


def test_refine_minimizes_bijectivity(rng):
    pair = FunctionalMapPair(
        0.0,
        np.eye(5) + 0.2 * rng.standard_normal((5, 5)),
        np.eye(5) + 0.2 * rng.standard_normal((5, 5)),
    )
    result = refine(
        [pair], BIJECTIVITY_ONLY, max_iters=5000, rel_tol=1e-12
    )
    assert loss_bijectivity(result.pairs[0]) < 1e-6
    # Inputs are not modified
    assert loss_bijectivity(pair) > 1e-3


def test_refine_trace_is_monotone(rng, tmp_path):
    pair, operators = random_loss_problem(rng, k=5)
    result = GradientDescentRefiner(max_iters=40)(
        [pair], LossWeights(), [operators]
    )
    totals = result.trace_array[:, 1]
    assert result.trace_array.shape == (result.iterations + 1, 6)
    assert (np.diff(totals) < 0).all()
    assert result.final.total < result.initial.total
    assert set(result.pairs[0].losses) == set(TERMS)

    path = write_loss_trace(result, tmp_path / "trace.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,E,E1,E2,E3,E4"
    assert len(lines) == result.iterations + 2
    assert lines[1].startswith("0,")


def test_refine_rejects_non_finite_gradients():
    pair = FunctionalMapPair(0.0, 1e200 * np.eye(3), 1e200 * np.eye(3))
    with np.errstate(all="ignore"), pytest.raises(NonFiniteGradient):
        refine([pair], BIJECTIVITY_ONLY)


@pytest.mark.parametrize(
    "options",
    [{"max_iters": -1}, {"rel_tol": -1.0}, {"initial_step": 0.0}],
)
def test_refiner_options_are_checked(options):
    with pytest.raises(ValueError):
        GradientDescentRefiner(**options)
