"""Finite Boolean algebras as partition subalgebras of a powerset."""
from .core import (
    Element,
    ElementFamily,
    GroundMismatch,
    InternalCheckError,
    InvalidSubalgebra,
    Subalgebra,
    generate_subalgebra,
    intersect,
    intersect_all,
    is_independent,
    join_all,
    join_subalgebras,
    lower_projection,
    upper_projection,
)
from .commute import (
    PredicateResult,
    WitnessTuple,
    commutes,
    commutes_over,
    commutes_well,
    weak_witness,
    weakly_commutes,
    weakly_commutes_well,
)
from .amalgam import (
    AssemblyChain,
    HypothesisFailed,
    OverlapSystem,
    PushoutResult,
    assemble,
    commutatively_reflects,
    compatible_tuples,
    embed_as_system,
    has_common_extension,
    pushout,
)

__version__ = "0.1.0"
