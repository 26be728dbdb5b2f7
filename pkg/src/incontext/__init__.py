"""In-context maps on discrete measures.

Discrete positive measures with exact 1-Wasserstein transport, multi-head
attention acting on measures, deep layer stacks as push-forward maps,
interacting-particle flows with their characteristic maps, and numerical
recovery of the pointwise map behind a black-box measure-to-measure map —
including an explicit map that is W1-continuous yet admits no continuous
pointwise representation.
"""

__version__ = "0.1.0"

from .attention import (
    AttentionParams,
    HeadParams,
    InContextMap,
    MlpParams,
    attention,
    attention_weights,
    compose_diamond,
    gamma,
    identity_mlp,
    mlp,
    velocity,
)
from .counterexample import (
    counter_map,
    discontinuity_scan,
    f_counter,
    kappa,
    r_map,
    two_atom_measure,
)
from .deep_transformer import (
    Layer,
    LayerStack,
    forward_map,
    forward_measure,
    forward_tokens,
)
from .derivative import (
    MeasureMap,
    TestFunction,
    build_patched_test,
    coordinate_test,
    extract_g,
    extract_g_detailed,
    regular_derivative,
    split_reg_irreg,
)
from .errors import DomainError
from .measures import (
    Box,
    DiscreteMeasure,
    TokenSequence,
    add_atom,
    canonicalize,
    default_box,
    dirac,
    gap,
    gap_strict,
    iota,
    iota_inv,
    is_dif,
    make_dif,
    new_discrete,
    new_tokens,
    push_forward,
)
from .transport import TransportPlan, w1_1d, w1_extended, w1_matching
from .vlasov import (
    Trajectory,
    VelocityField,
    characteristic_map,
    depth_limit_error,
    euler_flow,
    rk4_flow,
    scaled_stack,
    velocity_family,
    weak_residual,
)

__all__ = [
    "AttentionParams",
    "Box",
    "DiscreteMeasure",
    "DomainError",
    "HeadParams",
    "InContextMap",
    "Layer",
    "LayerStack",
    "MeasureMap",
    "MlpParams",
    "TestFunction",
    "TokenSequence",
    "Trajectory",
    "TransportPlan",
    "VelocityField",
    "add_atom",
    "attention",
    "attention_weights",
    "build_patched_test",
    "canonicalize",
    "characteristic_map",
    "compose_diamond",
    "coordinate_test",
    "counter_map",
    "default_box",
    "depth_limit_error",
    "dirac",
    "discontinuity_scan",
    "euler_flow",
    "extract_g",
    "extract_g_detailed",
    "f_counter",
    "forward_map",
    "forward_measure",
    "forward_tokens",
    "gamma",
    "gap",
    "gap_strict",
    "identity_mlp",
    "iota",
    "iota_inv",
    "is_dif",
    "kappa",
    "make_dif",
    "mlp",
    "new_discrete",
    "new_tokens",
    "push_forward",
    "r_map",
    "regular_derivative",
    "rk4_flow",
    "scaled_stack",
    "split_reg_irreg",
    "two_atom_measure",
    "velocity",
    "velocity_family",
    "w1_1d",
    "w1_extended",
    "w1_matching",
    "weak_residual",
]
