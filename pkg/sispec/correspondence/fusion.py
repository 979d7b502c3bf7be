from dataclasses import dataclass, field
import logging
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist

from ..exceptions import DimensionMismatch, EmptyDomainList, ParseError
from ..spectral.spectral_utils import has_enough_memory

logger = logging.getLogger(__name__)

# Upper bound on one block of the candidate distance matrix
MAX_BLOCK_BYTES = 256 * 2**20


@dataclass(frozen=True, eq=False)
class DomainMatch:
    """Nearest-neighbour result of one spectral domain.

    ``mapping[i]`` is the source vertex closest to target vertex ``i`` and
    ``distances[i]`` that raw distance; ``minimum``, ``maximum`` and
    ``mean`` summarize all ``n_target * n_source`` candidate distances.
    """

    alpha: float
    mapping: NDArray[np.int64]
    distances: NDArray[np.float64]
    minimum: float
    maximum: float
    mean: float
    n_source: int

    @property
    def normalized(self) -> NDArray[np.float64]:
        return normalize_distances(
            self.distances, self.minimum, self.maximum, self.mean
        )


@dataclass(frozen=True, eq=False)
class Correspondence:
    """Target-to-source vertex map with the domain that won each vertex."""

    mapping: NDArray[np.int64]
    winning_domain: NDArray[np.int64]
    score: NDArray[np.float64]
    alphas: tuple[float, ...] = ()
    names: tuple[str, str] = ("source", "target")
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.mapping)

    def write(self, path: str | Path) -> Path:
        """One line per target vertex:
        ``target_index source_index domain_index normalized_distance``."""
        path = Path(path)
        lines = (
            f"{i} {j} {s} {d:.17g}\n"
            for i, (j, s, d) in enumerate(
                zip(
                    self.mapping.tolist(),
                    self.winning_domain.tolist(),
                    self.score.tolist(),
                )
            )
        )
        with open(path, "w", encoding="utf-8") as handle:
            handle.writelines(lines)
        logger.info(f"Wrote {path} ({len(self)} correspondences)")
        return path

    @classmethod
    def read(cls, path: str | Path) -> "Correspondence":
        path = Path(path)
        rows = []
        with open(path, encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                tokens = line.split()
                if not tokens:
                    continue
                if len(tokens) != 4:
                    raise ParseError(
                        path, number, f"expected 4 fields, got {len(tokens)}"
                    )
                try:
                    i, j, s = (int(t) for t in tokens[:3])
                    d = float(tokens[3])
                except ValueError:
                    raise ParseError(
                        path, number, f"malformed line '{line.strip()}'"
                    ) from None
                if i != len(rows):
                    raise ParseError(
                        path, number, f"expected target {len(rows)}, got {i}"
                    )
                rows.append((j, s, d))
        table = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(
            table[:, 0].astype(np.int64),
            table[:, 1].astype(np.int64),
            table[:, 2],
            names=("source", path.stem),
        )


def _block_rows(n_source: int, n_target: int) -> int:
    per_row = 8 * max(n_source, 1)
    budget = MAX_BLOCK_BYTES
    has_memory, _, available_gb = has_enough_memory(budget)
    if not has_memory:
        budget = int(available_gb * 2**30 / 4)
    return int(np.clip(budget // per_row, 1, max(n_target, 1)))


def pointwise_from_map(
    C: NDArray[np.float64],
    Phi: NDArray[np.float64],
    Psi: NDArray[np.float64],
    alpha: float = 0.0,
) -> DomainMatch:
    """Nearest source vertex for every target vertex under a functional
    map.

    Source vertices are embedded as the rows of ``Phi C^T`` and target
    vertices as the rows of ``Psi``; ties go to the lowest source index.
    The candidate distance matrix is processed in row blocks, so memory
    stays bounded while the global statistics cover every candidate pair.

    Args:
        C (NDArray[np.float64]): ``(k, k)`` map from source to target
            coefficients.
        Phi (NDArray[np.float64]): ``(n_source, k)`` source eigenfunctions.
        Psi (NDArray[np.float64]): ``(n_target, k)`` target eigenfunctions.
        alpha (float): (optional) Domain label.

    Returns:
        DomainMatch: Per-target mapping, winning distances and statistics.

    Raises:
        DimensionMismatch: If the shapes do not share ``k``.
    """
    C = np.asarray(C, dtype=float)
    k = C.shape[0]
    if C.shape != (k, k) or Phi.shape[1] != k or Psi.shape[1] != k:
        raise DimensionMismatch(
            f"map {C.shape} incompatible with bases {Phi.shape} and "
            f"{Psi.shape}"
        )
    source = Phi @ C.T
    n_source, n_target = len(source), len(Psi)
    mapping = np.empty(n_target, dtype=np.int64)
    distances = np.empty(n_target)
    minimum, maximum, total = np.inf, -np.inf, 0.0

    rows = _block_rows(n_source, n_target)
    for start in range(0, n_target, rows):
        block = cdist(Psi[start : start + rows], source)
        winners = np.argmin(block, axis=1)
        mapping[start : start + rows] = winners
        distances[start : start + rows] = block[
            np.arange(len(block)), winners
        ]
        minimum = min(minimum, float(block.min()))
        maximum = max(maximum, float(block.max()))
        total += float(block.sum())

    mean = total / (n_source * n_target)
    logger.debug(
        f"Domain alpha = {alpha}: distances in [{minimum:.4g}, "
        f"{maximum:.4g}], mean {mean:.4g}"
    )
    return DomainMatch(
        alpha, mapping, distances, minimum, maximum, mean, n_source
    )


def normalize_distances(
    distances: NDArray[np.float64],
    minimum: float,
    maximum: float,
    mean: float,
) -> NDArray[np.float64]:
    """Map ``[minimum, maximum]`` linearly onto ``[0, 1]`` and subtract the
    normalized mean. A domain whose distances are all equal maps to 0."""
    distances = np.asarray(distances, dtype=float)
    span = maximum - minimum
    if not span > 0:
        return np.zeros_like(distances)
    return (distances - minimum) / span - (mean - minimum) / span


def fuse(
    matches: list[DomainMatch], names: tuple[str, str] = ("source", "target")
) -> Correspondence:
    """Pick, for every target vertex, the domain whose normalized winning
    distance is smallest (lowest domain index on ties).

    Raises:
        EmptyDomainList: If ``matches`` is empty.
    """
    if not matches:
        raise EmptyDomainList("fusion needs at least one spectral domain")
    n_target = len(matches[0].mapping)
    if any(len(m.mapping) != n_target for m in matches):
        raise DimensionMismatch("domains disagree on the target vertex count")

    scores = np.stack([m.normalized for m in matches])
    winners = np.argmin(scores, axis=0)
    columns = np.arange(n_target)
    mappings = np.stack([m.mapping for m in matches])

    counts = np.bincount(winners, minlength=len(matches))
    logger.info(
        "Fusion winners: "
        + ", ".join(
            f"alpha {m.alpha}: {c}" for m, c in zip(matches, counts.tolist())
        )
    )
    return Correspondence(
        mapping=mappings[winners, columns],
        winning_domain=winners.astype(np.int64),
        score=scores[winners, columns],
        alphas=tuple(m.alpha for m in matches),
        names=names,
    )
