from .operators import (
    assemble_mass as assemble_mass,
    assemble_stiffness as assemble_stiffness,
)
from .basis import (
    SpectralBasis as SpectralBasis,
    eigensolve as eigensolve,
    project as project,
)
from .descriptors import (
    DescriptorKind as DescriptorKind,
    DescriptorSet as DescriptorSet,
    hks as hks,
    normalize_channels as normalize_channels,
    project_all as project_all,
    subsample_channels as subsample_channels,
    wks as wks,
)
