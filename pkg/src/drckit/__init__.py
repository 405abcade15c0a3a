"""Rack-aware erasure coding toolkit.

Implements two families of double regenerating codes with layered
(inner-rack / cross-rack) repair, RS baselines, analytic repair-traffic
models, a deterministic cluster performance model, and Markov MTTDL
reliability analysis for flat vs. hierarchical block placement.
"""

from .codes import (
    CodeSpec,
    RepairPlan,
    construct_f1,
    construct_f2,
    construct_rs,
    decode_stripe,
    encode_stripe,
    execute_repair,
    make_code,
    make_msr_model,
    plan_repair,
    validate_code,
)
from .engine import (
    StripeLayout,
    TrafficReport,
    analytic_cross_rack_traffic,
    decode_block,
    node_encode,
    place_stripe,
    relayer_encode,
    verify_theorem1,
)
from .stripe import Block, RsCodeSpec, StripeGeometry, make_rs_spec, rs_decode, rs_encode

__version__ = "0.1.0"

__all__ = [
    "Block",
    "CodeSpec",
    "RepairPlan",
    "RsCodeSpec",
    "StripeGeometry",
    "StripeLayout",
    "TrafficReport",
    "analytic_cross_rack_traffic",
    "construct_f1",
    "construct_f2",
    "construct_rs",
    "decode_block",
    "decode_stripe",
    "encode_stripe",
    "execute_repair",
    "make_code",
    "make_msr_model",
    "make_rs_spec",
    "node_encode",
    "place_stripe",
    "plan_repair",
    "relayer_encode",
    "rs_decode",
    "rs_encode",
    "validate_code",
    "verify_theorem1",
]
