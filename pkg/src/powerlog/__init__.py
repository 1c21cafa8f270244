"""powerlog: computer algebra for power-log series x^alpha * L^k, L = -1/log x.

Truncated series carry an explicit exactness region; all operations are pure
functions over immutable values and propagate regions soundly, so every
retained coefficient is a theorem about the represented series.
"""

from . import errors
from .errors import (
    DomainError,
    EmptyRegion,
    IrrationalExponent,
    NeedsFloatMode,
    NoFlow,
    NonConvergence,
    NonPositiveAlpha,
    NotApplicable,
    NotL0,
    NotLH,
    NotParabolic,
    NotStronglyHyperbolic,
    ParseError,
    PowerlogError,
    RegionExhausted,
    StronglyHyperbolicNotEmbeddable,
    ZeroSeries,
)
from .context import EXACT, FLOAT, Context
from .grid import Exponent, Region, SupportMeta, decompositions, lex_cmp, semigroup_elements_up_to
from .series import (
    Classification,
    Transseries,
    add,
    classify,
    clip,
    from_terms,
    geometric_inverse,
    identity,
    leading,
    monomial,
    mul,
    scalar_mul,
    sub,
    to_text,
    to_json,
    zero,
)
from .compose import compose, derivative, invert, lie_bracket
from .normalize import (
    ElementaryChange,
    HyperbolicNF,
    NormalizationResult,
    ParabolicNF,
    StronglyHyperbolicNF,
    linear_change_leading,
    linear_change_second,
    normal_form,
    solve_homological_hyperbolic,
    solve_homological_parabolic,
    solve_homological_strongly_hyperbolic,
)
from .embed import (
    VectorField,
    embed,
    flow,
    flow_strongly_hyperbolic,
    log_iso_parabolic,
    normal_field_hyperbolic,
    normal_field_parabolic,
    pushforward,
    verify_embedding,
    verify_flow_group_law,
)
from .cli import parse_series

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
