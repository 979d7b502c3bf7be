"""Geodesic error curves of a correspondence against a ground truth.

The default thresholds are the 100 values ``0.000, 0.001, ..., 0.099`` of
normalized geodesic error; pass ``thresholds`` to extend the range.
"""

from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..correspondence.fusion import Correspondence
from ..exceptions import GroundTruthMismatch, ParseError
from .geodesics import GeodesicOracle

logger = logging.getLogger(__name__)

# 0.000, 0.001, ..., 0.099
DEFAULT_THRESHOLDS = np.arange(100) / 1000.0

CSV_HEADER = "threshold,fraction"


@dataclass(frozen=True, eq=False)
class ErrorCurve:
    """Cumulative geodesic error: ``fraction[t]`` is the percentage of
    correspondences whose normalized error is at most ``thresholds[t]``."""

    thresholds: NDArray[np.float64]
    fraction: NDArray[np.float64]
    mean_error: float
    errors: NDArray[np.float64] | None = None
    label: str = ""

    @classmethod
    def from_errors(
        cls,
        errors: NDArray[np.float64],
        thresholds: NDArray[np.float64] = DEFAULT_THRESHOLDS,
        label: str = "",
    ) -> "ErrorCurve":
        errors = np.asarray(errors, dtype=float)
        if errors.size == 0:
            raise GroundTruthMismatch("no correspondences to evaluate")
        ordered = np.sort(errors)
        counts = np.searchsorted(ordered, thresholds, side="right")
        return cls(
            np.asarray(thresholds, dtype=float),
            100.0 * counts / errors.size,
            float(errors.mean()),
            errors,
            label,
        )

    def to_csv(self) -> str:
        rows = [CSV_HEADER]
        rows.extend(
            f"{t:.3f},{float(f)!r}"
            for t, f in zip(self.thresholds, self.fraction)
        )
        return "\n".join(rows) + "\n"

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        logger.info(f"Wrote {path} (mean error {self.mean_error:.6g})")
        return path

    @classmethod
    def read_csv(cls, path: str | Path, mean_error: float = float("nan")):
        """Parse a curve written by :meth:`write_csv`. The CSV does not
        carry the mean error, so it is passed through."""
        path = Path(path)
        thresholds, fractions = [], []
        with open(path, encoding="utf-8") as handle:
            header = handle.readline().strip()
            if header != CSV_HEADER:
                raise ParseError(path, 1, f"expected header '{CSV_HEADER}'")
            for number, line in enumerate(handle, start=2):
                if not line.strip():
                    continue
                try:
                    t, f = line.strip().split(",")
                    thresholds.append(float(t))
                    fractions.append(float(f))
                except ValueError:
                    raise ParseError(
                        path, number, f"malformed row '{line.strip()}'"
                    ) from None
        return cls(
            np.array(thresholds),
            np.array(fractions),
            mean_error,
            label=path.stem,
        )


def geodesic_error(
    correspondence: Correspondence | NDArray[np.int64],
    ground_truth: NDArray[np.int64],
    oracle: GeodesicOracle,
    thresholds: NDArray[np.float64] = DEFAULT_THRESHOLDS,
    label: str = "",
) -> ErrorCurve:
    """Normalized geodesic distance on the source mesh between every
    predicted and true source vertex, as a cumulative curve.

    Args:
        correspondence (Correspondence): Predicted target-to-source map.
        ground_truth (NDArray[np.int64]): True source vertex per target
            vertex.
        oracle (GeodesicOracle): Distances on the source mesh.

    Raises:
        GroundTruthMismatch: If the ground truth does not cover every
            target vertex or names a vertex the source mesh lacks.
    """
    mapping = np.asarray(
        getattr(correspondence, "mapping", correspondence), dtype=np.int64
    )
    ground_truth = np.asarray(ground_truth, dtype=np.int64)
    if ground_truth.shape != mapping.shape:
        raise GroundTruthMismatch(
            f"ground truth has {ground_truth.size} entries, correspondence "
            f"has {mapping.size}"
        )
    n_source = oracle.mesh.n_vertices
    for name, indices in (("ground truth", ground_truth), ("map", mapping)):
        if indices.size and (indices.min() < 0 or indices.max() >= n_source):
            raise GroundTruthMismatch(
                f"{name} indexes outside the {n_source} source vertices"
            )

    errors = oracle.pairwise(ground_truth, mapping)
    curve = ErrorCurve.from_errors(errors, thresholds, label)
    logger.info(
        f"Mean geodesic error{f' ({label})' if label else ''}: "
        f"{curve.mean_error:.6g}"
    )
    return curve
