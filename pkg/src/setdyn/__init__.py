"""Minimal invariant sets and their bifurcations for set-valued maps.

Outer approximations are built on dyadic box covers: image enclosures give a
transition graph, terminal strongly connected components witness minimal
sets, and parameter sweeps classify how those sets change.
"""

from .continuation import (
    Bracket,
    ContinuationReport,
    Sample,
    Thresholds,
    TransitionEvent,
    bracket_bifurcation,
    classify_transition,
    dual_gap,
    sweep,
)
from .errors import (
    GLOBALLY_ATTRACTIVE,
    DepthMismatch,
    DomainMismatch,
    EmptySet,
    EventLost,
    InsufficientEvidence,
    InvalidCover,
    NonConvergence,
    NotAbsorbing,
    NotInvariant,
    RefinementLimit,
    SetDynError,
    UnsupportedParameter,
)
from .geometry import (
    Box,
    BoxCover,
    WorkingDomain,
    gap_dist,
    hausdorff_dist,
    inflate,
    overlap,
    ring,
    semi_dist,
    subdivide,
)
from .graph import (
    TransitionGraph,
    build_graph,
    domain_of_attraction,
    dual_set,
    image,
    omega_limit,
    reachable,
    robust_domain,
    terminal_sccs,
)
from .minimal import MinimalSetApproximation, check_minimality, contract_to_fixed_cover, refine_minimal_sets
from .models import (
    ContractionMap,
    MergingMap,
    PiecewiseAffineMap,
    SaturatingMap,
    SetValuedMap,
    check_contraction_certificate,
    make_model,
)

__version__ = "0.1.0"
