"""Exact kernel for truncated local algebras, jets and algebra-valued points.

Everything is computed over arbitrary-precision rationals, so equality of
ideals, ranks, contact data and all reported invariants is exact.
"""

from .errors import (
    ClassicalityError,
    DimensionMismatchError,
    EmptyQuotientError,
    HintTooSmallError,
    InternalCheckError,
    NotAnIdealError,
    NotEpimorphismError,
    NotInIdealError,
    NotWellDefinedError,
    SessionError,
    SessionParseError,
    UnknownNameError,
    WeilJetsError,
)
from .poly import (
    TruncatedPolynomial,
    as_fraction,
    format_polynomial,
    parse_polynomial,
    truncated_product,
    truncated_substitute,
    variable_names,
)
from .subspace import (
    Subspace,
    canonical_basis,
    nullspace,
    quotient_dimension,
    subspace_intersection,
    subspace_query,
    subspace_sum,
    zero_subspace,
)
from .weil import (
    AlgebraElement,
    AlgebraMorphism,
    DerivationSpace,
    IdealStabilityReport,
    WeilAlgebra,
    algebra_morphism,
    derivation_space,
    factor_epimorphism,
    free_truncated_algebra,
    ideal_stability,
    identity_morphism,
    invariants_agree,
    invert_substitution,
    order_and_width,
    quotient_algebra,
    tensor_product,
)
from .jets import (
    ContactData,
    CotangentModule,
    Jet,
    NormalForm,
    TangentMap,
    TangentModule,
    TaylorData,
    cartan_generation_oracle,
    classical_jet,
    contact_and_cartan,
    cotangent_module,
    derived_jet,
    hat_ideal,
    jet_fields,
    jet_from_ideal,
    normal_form,
    power_jet,
    pushforward,
    tangent_map,
    tangent_module,
    taylor_map,
)
from .apoints import (
    APoint,
    GroupLaw,
    ProlongedGroup,
    WeilCheckReport,
    apoint,
    cartesian_product,
    component_names,
    components_at,
    evaluate,
    group_law,
    prolong_group,
    prolong_ideal,
    prolong_polynomial,
    regularity_and_kernel,
    tangent_correspondence_check,
    weil_iso_check,
)
from .session import Report, Session, execute, parse_session, render

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
