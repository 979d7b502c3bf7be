"""Unsupervised functional-map penalties and their analytic gradients.

Every term is a squared Frobenius norm summed over both map directions.
With ``A = C_xy`` and ``B = C_yx``:

- bijectivity: ``|AB - I|^2 + |BA - I|^2``
- orthogonality: ``|A^T A - I|^2 + |B^T B - I|^2``
- laplacian: ``|A L_x - L_y A|^2 + |B L_y - L_x B|^2``
- descriptor: ``sum_c |A Mf_c - Mg_c A|^2 + |B Mg_c - Mf_c B|^2``
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .fmap import DomainOperators, FunctionalMapPair, LossWeights

TERMS = ("bijectivity", "orthogonality", "laplacian", "descriptor")

Gradient = tuple[NDArray[np.float64], NDArray[np.float64]]


def _bijectivity(A, B) -> tuple[float, Gradient]:
    eye = np.eye(len(A))
    AB = A @ B - eye
    BA = B @ A - eye
    value = np.sum(AB**2) + np.sum(BA**2)
    grad_a = 2.0 * (AB @ B.T + B.T @ BA)
    grad_b = 2.0 * (A.T @ AB + BA @ A.T)
    return float(value), (grad_a, grad_b)


def _orthogonality(A, B) -> tuple[float, Gradient]:
    eye = np.eye(len(A))
    RA = A.T @ A - eye
    RB = B.T @ B - eye
    value = np.sum(RA**2) + np.sum(RB**2)
    return float(value), (4.0 * A @ RA, 4.0 * B @ RB)


def _laplacian(A, B, lam_x, lam_y) -> tuple[float, Gradient]:
    # (A L_x - L_y A)_ij = A_ij (lam_x[j] - lam_y[i])
    D_xy = lam_x[None, :] - lam_y[:, None]
    D_yx = lam_y[None, :] - lam_x[:, None]
    value = np.sum((A * D_xy) ** 2) + np.sum((B * D_yx) ** 2)
    return float(value), (2.0 * A * D_xy**2, 2.0 * B * D_yx**2)


def _descriptor(A, B, mult_x, mult_y) -> tuple[float, Gradient]:
    R = A @ mult_x - mult_y @ A
    S = B @ mult_y - mult_x @ B
    value = np.sum(R**2) + np.sum(S**2)
    grad_a = 2.0 * np.sum(
        R @ mult_x.transpose(0, 2, 1) - mult_y.transpose(0, 2, 1) @ R, axis=0
    )
    grad_b = 2.0 * np.sum(
        S @ mult_y.transpose(0, 2, 1) - mult_x.transpose(0, 2, 1) @ S, axis=0
    )
    return float(value), (grad_a, grad_b)


def loss_bijectivity(pair: FunctionalMapPair) -> float:
    return _bijectivity(pair.C_xy, pair.C_yx)[0]


def loss_orthogonality(pair: FunctionalMapPair) -> float:
    return _orthogonality(pair.C_xy, pair.C_yx)[0]


def loss_lbo_commutativity(
    pair: FunctionalMapPair,
    eigenvalues_x: NDArray[np.float64],
    eigenvalues_y: NDArray[np.float64],
) -> float:
    return _laplacian(
        pair.C_xy,
        pair.C_yx,
        np.asarray(eigenvalues_x, dtype=float),
        np.asarray(eigenvalues_y, dtype=float),
    )[0]


def loss_descriptor_commutativity(
    pair: FunctionalMapPair,
    mult_x: NDArray[np.float64],
    mult_y: NDArray[np.float64],
) -> float:
    """Channel-aligned stacks ``(d, k, k)`` of multiplication operators on
    the source and the target."""
    mult_x = np.asarray(mult_x, dtype=float)
    mult_y = np.asarray(mult_y, dtype=float)
    if mult_x.shape != mult_y.shape:
        raise ValueError(
            f"operator stacks differ: {mult_x.shape} vs {mult_y.shape}"
        )
    return _descriptor(pair.C_xy, pair.C_yx, mult_x, mult_y)[0]


@dataclass(frozen=True)
class LossBreakdown:
    """Unweighted term values per domain (rows) and term (columns), the
    weights applied, and the weighted total."""

    alphas: tuple[float, ...]
    terms: NDArray[np.float64]
    weights: NDArray[np.float64]

    @property
    def per_term(self) -> NDArray[np.float64]:
        """Weighted contribution of each term, summed over domains."""
        return self.terms.sum(axis=0) * self.weights

    @property
    def total(self) -> float:
        return float(self.per_term.sum())

    def as_dict(self) -> dict[str, float]:
        return dict(zip(TERMS, self.per_term.tolist()))


def _domain_terms(
    pair: FunctionalMapPair,
    weights: LossWeights,
    operators: DomainOperators | None,
    with_gradient: bool,
) -> tuple[NDArray, Gradient | None]:
    A, B = pair.C_xy, pair.C_yx
    evaluated = [_bijectivity(A, B), _orthogonality(A, B)]
    if operators is not None:
        evaluated.append(
            _laplacian(A, B, operators.eigenvalues_x, operators.eigenvalues_y)
        )
        evaluated.append(
            _descriptor(A, B, operators.mult_x, operators.mult_y)
            if len(operators.mult_x)
            else (0.0, (np.zeros_like(A), np.zeros_like(B)))
        )
    elif weights.laplacian or weights.descriptor:
        raise ValueError(
            f"domain alpha = {pair.alpha} needs operators for the Laplacian "
            "and descriptor terms"
        )
    else:
        evaluated.extend([(0.0, (np.zeros_like(A), np.zeros_like(B)))] * 2)

    values = np.array([value for value, _ in evaluated])
    if not with_gradient:
        return values, None
    w = weights.as_array()
    grad_a = sum(wi * g[0] for wi, (_, g) in zip(w, evaluated))
    grad_b = sum(wi * g[1] for wi, (_, g) in zip(w, evaluated))
    return values, (grad_a, grad_b)


def total_loss(
    pairs: list[FunctionalMapPair],
    weights: LossWeights,
    operators: list[DomainOperators | None] | None = None,
) -> LossBreakdown:
    """Weighted sum of all four terms over every domain.

    Args:
        pairs (list[FunctionalMapPair]): One pair per domain.
        weights (LossWeights): Term weights.
        operators (list[DomainOperators]): (optional) Per-domain spectra
            and descriptor operators, aligned with ``pairs``. Needed when
            the Laplacian or descriptor weight is positive.
    """
    return loss_and_gradient(pairs, weights, operators, False)[0]


def loss_and_gradient(
    pairs: list[FunctionalMapPair],
    weights: LossWeights,
    operators: list[DomainOperators | None] | None = None,
    with_gradient: bool = True,
) -> tuple[LossBreakdown, list[Gradient]]:
    if operators is None:
        operators = [None] * len(pairs)
    if len(operators) != len(pairs):
        raise ValueError(
            f"{len(operators)} operator sets for {len(pairs)} domains"
        )
    rows = []
    gradients = []
    for pair, ops in zip(pairs, operators):
        values, gradient = _domain_terms(pair, weights, ops, with_gradient)
        rows.append(values)
        if gradient is not None:
            gradients.append(gradient)
    breakdown = LossBreakdown(
        tuple(p.alpha for p in pairs),
        np.array(rows).reshape(len(pairs), len(TERMS)),
        weights.as_array(),
    )
    return breakdown, gradients
