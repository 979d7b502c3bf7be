from dataclasses import dataclass, field
import logging
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..exceptions import NonFiniteGradient
from .fmap import DomainOperators, FunctionalMapPair, LossWeights
from .losses import TERMS, LossBreakdown, loss_and_gradient, total_loss

logger = logging.getLogger(__name__)


@dataclass
class RefineResult:
    pairs: list[FunctionalMapPair]
    initial: LossBreakdown
    final: LossBreakdown
    iterations: int
    stop_reason: str
    trace: list[tuple[int, float, tuple[float, ...]]] = field(
        default_factory=list
    )

    @property
    def trace_array(self) -> NDArray[np.float64]:
        """``(iterations + 1, 6)`` rows of iteration, E and the four
        weighted terms."""
        return np.array(
            [(i, total, *terms) for i, total, terms in self.trace]
        )


class GradientDescentRefiner:
    """Joint gradient descent on the maps of every domain.

    A step is accepted only if it strictly lowers the total loss; a
    rejected step is halved up to ``max_halvings`` times. The first trial
    step has length ``initial_step`` along the normalized gradient, and
    each later one starts from ``expansion`` times the last accepted step.

    Args:
        max_iters (int): (optional) Cap on accepted steps. Defaults to 500.
        rel_tol (float): (optional) Stop once an accepted step lowers the
            loss by less than this fraction. Defaults to 1e-7.
        max_halvings (int): (optional) Backtracking budget per iteration.
            Defaults to 30.
        initial_step (float): (optional) Length of the first trial step.
        expansion (float): (optional) Growth of the trial step between
            iterations.
    """

    def __init__(
        self,
        max_iters: int = 500,
        rel_tol: float = 1e-7,
        max_halvings: int = 30,
        initial_step: float = 1.0,
        expansion: float = 2.0,
    ):
        if max_iters < 0 or max_halvings < 0:
            raise ValueError("iteration budgets must be nonnegative")
        if rel_tol < 0 or initial_step <= 0 or expansion < 1:
            raise ValueError(
                "need rel_tol >= 0, initial_step > 0 and expansion >= 1"
            )
        self.max_iters = max_iters
        self.rel_tol = rel_tol
        self.max_halvings = max_halvings
        self.initial_step = initial_step
        self.expansion = expansion

    def __call__(
        self,
        pairs: list[FunctionalMapPair],
        weights: LossWeights,
        operators: list[DomainOperators | None] | None = None,
    ) -> RefineResult:
        current = [pair.copy() for pair in pairs]
        breakdown, gradients = loss_and_gradient(current, weights, operators)
        initial = breakdown
        trace = [(0, breakdown.total, tuple(breakdown.per_term.tolist()))]
        step = None
        iterations = 0
        stop_reason = "max iterations"

        while iterations < self.max_iters:
            loss = breakdown.total
            if loss == 0.0:
                stop_reason = "zero loss"
                break
            flat = np.concatenate(
                [g.ravel() for pair in gradients for g in pair]
            )
            if not np.all(np.isfinite(flat)):
                raise NonFiniteGradient(
                    f"gradient has non-finite entries at iteration "
                    f"{iterations}"
                )
            norm = float(np.linalg.norm(flat))
            if norm == 0.0:
                stop_reason = "stationary point"
                break

            step = (
                self.initial_step / norm
                if step is None
                else step * self.expansion
            )
            for _ in range(self.max_halvings + 1):
                candidate = [
                    FunctionalMapPair(
                        pair.alpha,
                        pair.C_xy - step * grad_a,
                        pair.C_yx - step * grad_b,
                    )
                    for pair, (grad_a, grad_b) in zip(current, gradients)
                ]
                candidate_loss = total_loss(candidate, weights, operators)
                if candidate_loss.total < loss:
                    break
                step *= 0.5
            else:
                stop_reason = "no decrease"
                break

            current = candidate
            breakdown, gradients = loss_and_gradient(
                current, weights, operators
            )
            iterations += 1
            terms = tuple(breakdown.per_term.tolist())
            trace.append((iterations, breakdown.total, terms))
            logger.debug(
                f"Iteration {iterations}: E = {breakdown.total:.6e}, "
                f"step {step:.3e}"
            )
            if (loss - breakdown.total) < self.rel_tol * loss:
                stop_reason = "relative decrease"
                break

        for index, pair in enumerate(current):
            pair.losses = dict(zip(TERMS, breakdown.terms[index].tolist()))
        logger.info(
            f"Refined {len(current)} domain(s) in {iterations} iterations "
            f"({stop_reason}): E {initial.total:.6e} -> "
            f"{breakdown.total:.6e}"
        )
        return RefineResult(
            current, initial, breakdown, iterations, stop_reason, trace
        )


def refine(
    pairs: list[FunctionalMapPair],
    weights: LossWeights,
    operators: list[DomainOperators | None] | None = None,
    **options,
) -> RefineResult:
    """Run :class:`GradientDescentRefiner` with ``options``."""
    return GradientDescentRefiner(**options)(pairs, weights, operators)


def write_loss_trace(result: RefineResult, path: str | Path) -> Path:
    path = Path(path)
    lines = ["iteration,E,E1,E2,E3,E4"]
    for iteration, total, terms in result.trace:
        values = ",".join(f"{v:.17g}" for v in (total, *terms))
        lines.append(f"{iteration},{values}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path
