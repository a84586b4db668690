"""Exact per-block analytics for time-invariant schemes.

A block of d slots transmits, in order, x_1 generic combinations of the
single lowest-index unseen packet, then x_2 combinations of the two
lowest-index unseen packets, and so on. With coefficients drawn from a large
field, linear independence depends only on the slots' support levels, so a
block outcome is fully described by which slots were received:

  * rank rule: walk the received slots in transmission order, keep a running
    rank r starting at 0; a received slot of level m is innovative iff r < m,
    and then r increments. The block contributes r innovative packets.
  * first-decode rule: the block decodes its first unseen packet iff some
    j >= 1 has at least j received slots of level <= j (those j combinations
    then pin down the j lowest unseen packets, the first one in particular).

Expectations are computed by exact enumeration of all 2^d erasure patterns;
the closed forms below are cross-checks of that oracle, never replacements.
All operations are pure functions and safe to call concurrently.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import BlockStats, ErasurePattern, SchemeVector, TradeoffPoint

__all__ = [
    "ENUMERATION_MAX_D",
    "SuggestedSchemeParams",
    "arq_point",
    "block_first_decode",
    "block_rank",
    "block_rank_moments",
    "block_stats",
    "canonicalize",
    "cost_of_optimal_lambda",
    "cost_of_optimal_tau",
    "divergence",
    "suggested_point",
    "suggested_scheme",
    "tradeoff_point",
]

ENUMERATION_MAX_D = 20


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly in (0, 1), got {p!r}")


@dataclass(frozen=True)
class SuggestedSchemeParams:
    """Parameters of the two-burst scheme family: a copies of the first unseen
    packet followed by d-a wide combinations. alpha is the ratio a/d."""

    d: int
    a: int
    alpha: float | None = None

    def __post_init__(self):
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if not (isinstance(self.a, int) and 1 <= self.a <= self.d):
            raise ValueError(f"a must lie in 1..d={self.d}, got {self.a!r}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.a / self.d)


def block_rank(x: SchemeVector, e: ErasurePattern) -> int:
    """Number of innovative combinations the receiver gets from one block."""
    if len(e) != x.d:
        raise ValueError(f"pattern length {len(e)} does not match block length d={x.d}")
    r = 0
    for level, got in zip(x.levels(), e.bits):
        if got and r < level:
            r += 1
    return r


def block_first_decode(x: SchemeVector, e: ErasurePattern) -> bool:
    """Whether the block decodes its first unseen packet from its own slots."""
    if len(e) != x.d:
        raise ValueError(f"pattern length {len(e)} does not match block length d={x.d}")
    received = sorted(lvl for lvl, got in zip(x.levels(), e.bits) if got)
    for j in range(1, x.d + 1):
        if bisect_right(received, j) >= j:
            return True
    return False


@lru_cache(maxsize=8)
def _recv_matrix(d: int) -> np.ndarray:
    """(2^d, d) boolean matrix; bit t of the row index marks slot t received."""
    ids = np.arange(1 << d, dtype=np.uint32)
    return ((ids[:, None] >> np.arange(d, dtype=np.uint32)) & 1).astype(bool)


@lru_cache(maxsize=128)
def pattern_tables(levels: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Per-pattern (rank, first_decode) lookup tables for a level profile.

    Index p of each table corresponds to the erasure pattern whose bit t is
    (p >> t) & 1. Vectorised equivalent of block_rank / block_first_decode.
    """
    d = len(levels)
    recv = _recv_matrix(d)
    rank = np.zeros(1 << d, dtype=np.int8)
    for t in range(d):
        np.add(rank, recv[:, t] & (rank < levels[t]), out=rank, casting="unsafe")
    first = np.zeros(1 << d, dtype=bool)
    csum = np.cumsum(recv, axis=1, dtype=np.int8)
    for j in sorted(set(levels)):
        k = bisect_right(levels, j)
        first |= csum[:, k - 1] >= j
    return rank, first


@lru_cache(maxsize=120_000)
def _success_polynomials(
    levels: tuple[int, ...],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Aggregate the pattern tables by success count s.

    Returns (R1, R2, F, Fc) with R1[s] the summed rank over patterns with s
    successes, R2[s] the summed squared rank, F[s] the count of first-decode
    patterns and Fc[s] the count of non-decoding patterns. Any expectation at
    channel parameter p is then a dot product with the weights
    p^s (1-p)^(d-s). Fc is kept separately so that 1 - p_d can be summed from
    positive terms, avoiding cancellation when p_d is close to 1.
    """
    d = len(levels)
    rank, first = pattern_tables(levels)
    nsucc = _recv_matrix(d).sum(axis=1, dtype=np.int8)
    r1 = np.bincount(nsucc, weights=rank, minlength=d + 1)
    r2 = np.bincount(nsucc, weights=rank.astype(np.float64) ** 2, minlength=d + 1)
    f = np.bincount(nsucc, weights=first, minlength=d + 1)
    fc = np.bincount(nsucc, weights=~first, minlength=d + 1)
    return r1, r2, f, fc


def _success_weights(d: int, p: float) -> np.ndarray:
    s = np.arange(d + 1)
    return p**s * (1.0 - p) ** (d - s)


def block_stats(x: SchemeVector, p: float, max_d: int = ENUMERATION_MAX_D) -> BlockStats:
    """Exact (p_d, E[S_d]) by enumeration over all 2^d erasure patterns."""
    _check_p(p)
    if x.d > max_d:
        raise ValueError(f"d={x.d} exceeds the enumeration cap {max_d}")
    r1, _, f, _ = _success_polynomials(x.levels())
    w = _success_weights(x.d, p)
    return BlockStats(p_d=float(f @ w), e_s_d=float(r1 @ w))


def block_no_decode_prob(x: SchemeVector, p: float, max_d: int = ENUMERATION_MAX_D) -> float:
    """1 - p_d summed from the non-decoding patterns (accurate when p_d -> 1)."""
    _check_p(p)
    if x.d > max_d:
        raise ValueError(f"d={x.d} exceeds the enumeration cap {max_d}")
    _, _, _, fc = _success_polynomials(x.levels())
    return float(fc @ _success_weights(x.d, p))


def block_rank_moments(
    x: SchemeVector, p: float, max_d: int = ENUMERATION_MAX_D
) -> tuple[float, float]:
    """(mean, variance) of the per-block innovative packet count S_d."""
    _check_p(p)
    if x.d > max_d:
        raise ValueError(f"d={x.d} exceeds the enumeration cap {max_d}")
    r1, r2, _, _ = _success_polynomials(x.levels())
    w = _success_weights(x.d, p)
    mean = float(r1 @ w)
    return mean, float(r2 @ w) - mean**2


def tradeoff_point(x: SchemeVector, p: float, max_d: int = ENUMERATION_MAX_D) -> TradeoffPoint:
    """(tau, lambda) = (E[S_d]/d, -log(1-p_d)/d) for one scheme."""
    _check_p(p)
    if x.d > max_d:
        raise ValueError(f"d={x.d} exceeds the enumeration cap {max_d}")
    r1, _, _, fc = _success_polynomials(x.levels())
    w = _success_weights(x.d, p)
    q_d = float(fc @ w)
    if q_d <= 0.0:
        raise ValueError(f"p_d = 1 leaves the exponent undefined (scheme {x}, p={p})")
    return TradeoffPoint(
        tau=float(r1 @ w) / x.d,
        lam=-math.log(q_d) / x.d,
        provenance=f"scheme:{x.compact()}",
    )


def divergence(r: float, p: float) -> float:
    """Binary divergence D(r || p) = r log(r/p) + (1-r) log((1-r)/(1-p)) in nats.

    r = 0 is handled as the limit -log(1-p)."""
    _check_p(p)
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r!r}")
    if r == 0.0:
        return -math.log1p(-p)
    return r * math.log(r / p) + (1.0 - r) * math.log((1.0 - r) / (1.0 - p))


def arq_point(p: float) -> TradeoffPoint:
    """Immediate feedback (d=1): repeat the first unseen packet until it lands."""
    _check_p(p)
    return TradeoffPoint(tau=p, lam=-math.log1p(-p), provenance="arq")


def cost_of_optimal_lambda(p: float, d: int) -> TradeoffPoint:
    """Best throughput when the exponent is held at its optimum -log(1-p).

    Achieved by the repetition scheme [d, 0, ..., 0]."""
    _check_p(p)
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return TradeoffPoint(
        tau=(1.0 - (1.0 - p) ** d) / d,
        lam=-math.log1p(-p),
        provenance=f"repetition:d={d}",
    )


def cost_of_optimal_tau(p: float, d: int) -> TradeoffPoint:
    """Best exponent when throughput is held at its optimum p.

    Achieved by the one-new-packet-per-slot scheme [1, 1, ..., 1]."""
    _check_p(p)
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return TradeoffPoint(
        tau=p,
        lam=-math.log1p(-p) / d,
        provenance=f"round-robin:d={d}",
    )


def suggested_scheme(params: SuggestedSchemeParams) -> SchemeVector:
    """Two-burst scheme: x_1 = a and, when a < d, x_{d-a+1} = d-a."""
    d, a = params.d, params.a
    xs = [0] * d
    xs[0] = a
    if a < d:
        xs[d - a] = d - a
    return SchemeVector(tuple(xs))


def suggested_point(params: SuggestedSchemeParams, p: float) -> TradeoffPoint:
    """Closed-form (tau, lambda) of the two-burst family, no enumeration:

    ((1 - (1-p)^a + (d-a) p) / d, -(a/d) log(1-p))."""
    _check_p(p)
    d, a = params.d, params.a
    return TradeoffPoint(
        tau=(1.0 - (1.0 - p) ** a + (d - a) * p) / d,
        lam=-(a / d) * math.log1p(-p),
        provenance=f"suggested:d={d},a={a}",
    )


def canonicalize(x: SchemeVector) -> SchemeVector:
    """Canonical representative of a scheme's (tau, lambda) equivalence class.

    While the scheme starts with x_1 >= 1, an entry x_i = 0 followed by
    x_{i+1} >= 1 is equivalent to x_i = 1 with x_{i+1} reduced by one; the
    rewrite is applied leftmost-first until no zero precedes a positive entry.
    Schemes with x_1 = 0 are genuinely different and are returned unchanged.
    """
    if x.x[0] == 0:
        return x
    v = list(x.x)
    j = 0  # next position a unit can be borrowed from
    for i in range(len(v)):
        if v[i] > 0:
            continue
        if j <= i:
            j = i + 1
        while j < len(v) and v[j] == 0:
            j += 1
        if j == len(v):
            break  # only zeros remain to the right
        v[i] = 1
        v[j] -= 1
    return SchemeVector(tuple(v))
