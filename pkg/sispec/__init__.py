from .match import (
    compute_spectra as compute_spectra,
    match as match,
)

from .defaults import PipelineConfig as PipelineConfig
from .geometry.mesh import TriMesh as TriMesh
from .geometry.mesh_io import load_mesh as load_mesh
from sispec._version import __version__ as __version__
