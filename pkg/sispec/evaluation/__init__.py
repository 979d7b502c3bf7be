from .geodesics import (
    GeodesicOracle as GeodesicOracle,
    geodesic_distances as geodesic_distances,
)
from .error_curve import (
    ErrorCurve as ErrorCurve,
    geodesic_error as geodesic_error,
)
from .plots import (
    emit_curve as emit_curve,
    emit_curves as emit_curves,
    plot_error_curves as plot_error_curves,
    plot_functional_maps as plot_functional_maps,
)
