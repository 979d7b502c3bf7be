"""Standalone SVG figures. Figures are built on ``matplotlib.figure.Figure``
directly so no GUI backend or global pyplot state is involved."""

import logging
from pathlib import Path

from matplotlib import rc_context
from matplotlib.figure import Figure
import numpy as np
from numpy.typing import NDArray

from .error_curve import ErrorCurve

logger = logging.getLogger(__name__)

# Fixed metadata and id salt keep repeated runs byte-identical
_SVG_METADATA = {"Date": None}
_SVG_RC = {"svg.hashsalt": "sispec", "svg.fonttype": "path"}


def _save(figure: Figure, path: Path) -> Path:
    with rc_context(_SVG_RC):
        figure.savefig(path, format="svg", metadata=_SVG_METADATA)
    logger.info(f"Wrote {path}")
    return path


def plot_error_curves(
    curves: list[ErrorCurve], path: str | Path, title: str = ""
) -> Path:
    """Overlay cumulative error curves with ``Geodesic Error`` on the x axis
    and ``% Correspondence`` on the y axis; the legend lists each mean
    error."""
    figure = Figure(figsize=(5.0, 4.0))
    axes = figure.add_subplot()
    for index, curve in enumerate(curves):
        label = curve.label or f"curve {index}"
        axes.plot(
            curve.thresholds,
            curve.fraction,
            label=f"{label} ({curve.mean_error:.4f})",
        )
    axes.set_xlabel("Geodesic Error")
    axes.set_ylabel("% Correspondence")
    axes.set_xlim(0.0, float(max(c.thresholds[-1] for c in curves)))
    axes.set_ylim(0.0, 100.0)
    axes.grid(True, alpha=0.3)
    if title:
        axes.set_title(title)
    axes.legend(loc="lower right")
    figure.tight_layout()
    return _save(figure, Path(path))


def emit_curve(
    curve: ErrorCurve, path: str | Path
) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and ``<path>.svg`` for one curve."""
    stem = Path(path).with_suffix("")
    return (
        curve.write_csv(stem.with_suffix(".csv")),
        plot_error_curves([curve], stem.with_suffix(".svg")),
    )


def emit_curves(
    curves: list[ErrorCurve], path: str | Path, title: str = ""
) -> list[Path]:
    """One CSV per curve (``<path>-<label>.csv``) and a single overlay
    SVG at ``<path>.svg``."""
    stem = Path(path).with_suffix("")
    written = [
        curve.write_csv(
            stem.with_name(f"{stem.name}-{curve.label or index}.csv")
        )
        for index, curve in enumerate(curves)
    ]
    written.append(
        plot_error_curves(curves, stem.with_suffix(".svg"), title)
    )
    return written


def plot_functional_maps(
    maps: dict[float, NDArray[np.float64]], path: str | Path
) -> Path:
    """Heatmaps of ``|C|`` side by side, one per domain."""
    figure = Figure(figsize=(3.2 * max(len(maps), 1), 3.2))
    for index, (alpha, C) in enumerate(sorted(maps.items()), start=1):
        axes = figure.add_subplot(1, len(maps), index)
        image = axes.imshow(np.abs(C), cmap="viridis", interpolation="none")
        axes.set_title(f"alpha = {alpha:g}")
        axes.set_xticks([])
        axes.set_yticks([])
        figure.colorbar(image, ax=axes, fraction=0.046, pad=0.04)
    figure.tight_layout()
    return _save(figure, Path(path))
