from .fmap import (
    DomainOperators as DomainOperators,
    FunctionalMapPair as FunctionalMapPair,
    LossWeights as LossWeights,
    mult_operator as mult_operator,
    solve_lsq as solve_lsq,
)
from .losses import (
    LossBreakdown as LossBreakdown,
    loss_bijectivity as loss_bijectivity,
    loss_descriptor_commutativity as loss_descriptor_commutativity,
    loss_lbo_commutativity as loss_lbo_commutativity,
    loss_orthogonality as loss_orthogonality,
    total_loss as total_loss,
)
from .refine import (
    GradientDescentRefiner as GradientDescentRefiner,
    RefineResult as RefineResult,
    refine as refine,
)
from .fusion import (
    Correspondence as Correspondence,
    DomainMatch as DomainMatch,
    fuse as fuse,
    normalize_distances as normalize_distances,
    pointwise_from_map as pointwise_from_map,
)
