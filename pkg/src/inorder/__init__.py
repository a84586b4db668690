"""Throughput versus in-order decoding delay for streaming codes over an
i.i.d. packet erasure channel with block-wise feedback: exact analytics,
envelope search over time-invariant schemes, and seeded Monte Carlo engines.
"""

from .analytics import (
    SuggestedSchemeParams,
    arq_point,
    block_first_decode,
    block_rank,
    block_rank_moments,
    block_stats,
    canonicalize,
    cost_of_optimal_lambda,
    cost_of_optimal_tau,
    divergence,
    suggested_point,
    suggested_scheme,
    tradeoff_point,
)
from .envelope import (
    EnvelopeResult,
    compute_envelope,
    enumerate_schemes,
    envelope_lambda,
    optimal_lambda_at,
    upper_envelope,
)
from .model import (
    BlockStats,
    ChannelParams,
    ErasurePattern,
    MixtureSpec,
    ReceiverState,
    SchemeVector,
    SimReport,
    TradeoffPoint,
    optimal_lambda_bound,
)
from .simulate import (
    ExponentEstimate,
    FullRankConfig,
    channel_trace,
    estimate_exponent_geometric,
    estimate_exponent_tail,
    simulate_arq,
    simulate_full_rank,
    simulate_mixture,
    simulate_time_invariant,
)

__all__ = [
    "BlockStats",
    "ChannelParams",
    "EnvelopeResult",
    "ErasurePattern",
    "ExponentEstimate",
    "FullRankConfig",
    "MixtureSpec",
    "ReceiverState",
    "SchemeVector",
    "SimReport",
    "SuggestedSchemeParams",
    "TradeoffPoint",
    "arq_point",
    "block_first_decode",
    "block_rank",
    "block_rank_moments",
    "block_stats",
    "canonicalize",
    "channel_trace",
    "compute_envelope",
    "cost_of_optimal_lambda",
    "cost_of_optimal_tau",
    "divergence",
    "enumerate_schemes",
    "envelope_lambda",
    "estimate_exponent_geometric",
    "estimate_exponent_tail",
    "optimal_lambda_at",
    "optimal_lambda_bound",
    "simulate_arq",
    "simulate_full_rank",
    "simulate_mixture",
    "simulate_time_invariant",
    "suggested_point",
    "suggested_scheme",
    "tradeoff_point",
    "upper_envelope",
]

__version__ = "0.1.0"
