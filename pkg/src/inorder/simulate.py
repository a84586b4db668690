"""Seeded Monte Carlo engines for the three feedback regimes.

Every run is a pure function of its configuration: erasures come from one
substream of the master seed and mixture scheme draws from another, so adding
mixture sampling never perturbs the channel realisation. Independent runs may
execute concurrently; nothing is shared.

Inter-decoding gaps T are measured in slots, with the first sample taken from
slot 0 and the open interval after the last decoding instant censored. Block
engines record T at block granularity (multiples of d): the per-block
first-unseen decode events are i.i.d., which makes the block gap geometric
and the per-block maximum-likelihood exponent estimate exact; tail regression
is reserved for the no-feedback engine where no finite-state law holds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .analytics import block_first_decode, block_rank, pattern_tables
from .model import ChannelParams, ErasurePattern, MixtureSpec, ReceiverState, SchemeVector, SimReport

__all__ = [
    "ExponentEstimate",
    "FullRankConfig",
    "channel_trace",
    "estimate_exponent_geometric",
    "estimate_exponent_tail",
    "simulate_arq",
    "simulate_full_rank",
    "simulate_mixture",
    "simulate_time_invariant",
]

_CHANNEL_STREAM = 0
_MIXTURE_STREAM = 1


@dataclass(frozen=True)
class ExponentEstimate:
    """Point estimate of the in-order decoding exponent, in nats per slot."""

    lambda_hat: float
    stderr: float
    method: str
    n_samples: int

    def __post_init__(self):
        if self.lambda_hat < 0.0:
            raise ValueError(f"lambda_hat must be non-negative, got {self.lambda_hat}")
        if self.method == "tail-regression" and self.n_samples < 2:
            raise ValueError("tail regression needs at least 2 fitted points")


@dataclass(frozen=True)
class FullRankConfig:
    """No-feedback engine configuration: slot n carries a combination of all
    packets up to ceil(r * n). An optional piecewise schedule of
    (slot_count, rate) segments overrides the constant rate r."""

    r: float
    n_slots: int
    segments: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie strictly in (0, 1), got {self.r!r}")
        if not (isinstance(self.n_slots, int) and self.n_slots >= 1):
            raise ValueError(f"n_slots must be a positive integer, got {self.n_slots!r}")
        if self.segments is not None:
            segs = tuple((int(n), float(r)) for n, r in self.segments)
            object.__setattr__(self, "segments", segs)
            if any(n < 1 for n, _ in segs):
                raise ValueError("segment lengths must be positive")
            if any(not 0.0 < r < 1.0 for _, r in segs):
                raise ValueError("segment rates must lie strictly in (0, 1)")
            if sum(n for n, _ in segs) != self.n_slots:
                raise ValueError("segment lengths must sum to n_slots")


def _substream(params: ChannelParams, label: int) -> np.random.Generator:
    seq = np.random.SeedSequence(params.seed, spawn_key=(label,))
    return np.random.Generator(np.random.PCG64(seq))


def channel_trace(params: ChannelParams, n_slots: int) -> np.ndarray:
    """Boolean reception sequence; deterministic given (seed, p, n_slots)."""
    if n_slots < 1:
        raise ValueError(f"n_slots must be >= 1, got {n_slots}")
    rng = _substream(params, _CHANNEL_STREAM)
    return rng.random(n_slots) < params.p


def _histogram(ts: np.ndarray) -> dict[int, int]:
    values, counts = np.unique(ts, return_counts=True)
    return {int(t): int(c) for t, c in zip(values, counts)}


def _block_gaps_slots(firsts: np.ndarray, d: int) -> np.ndarray:
    """Block-granularity T samples in slots (first measured from the origin)."""
    decode_blocks = np.flatnonzero(firsts)
    if decode_blocks.size == 0:
        return np.empty(0, dtype=np.int64)
    return np.diff(decode_blocks, prepend=-1).astype(np.int64) * d


def _block_lambda(p_d_hat: float, d: int, n_blocks: int) -> tuple[float | None, float | None]:
    """Per-block geometric MLE of the exponent plus a delta-method stderr."""
    if p_d_hat >= 1.0:
        return None, None
    lam = -math.log1p(-p_d_hat) / d
    se = math.sqrt(p_d_hat / ((1.0 - p_d_hat) * n_blocks)) / d
    return lam, se


def simulate_time_invariant(
    x: SchemeVector,
    params: ChannelParams,
    n_blocks: int,
    record_slots: bool = False,
) -> SimReport:
    """Run a time-invariant scheme for n_blocks blocks.

    The fast path maps each block's erasure pattern through the exact
    per-pattern rank / first-decode tables (per-block outcomes are functions
    of the block's own pattern once seen packets are dropped from future
    combinations). With record_slots the slot-level receiver is simulated
    instead: it tracks the seen set and decoded prefix explicitly, records
    in-order decoding instants by slot, and asserts agreement with the
    per-pattern tables; aggregates are identical by construction.
    """
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
    d = x.d
    bits = channel_trace(params, n_blocks * d).reshape(n_blocks, d)
    if record_slots:
        ranks, firsts, decode_slots = _receiver_run(x, bits)
    else:
        ids = bits @ (1 << np.arange(d, dtype=np.int64))
        rank_t, first_t = pattern_tables(x.levels())
        ranks = rank_t[ids].astype(np.int64)
        firsts = first_t[ids]
        decode_slots = None
    total_rank = int(ranks.sum())
    total_recv = int(bits.sum())
    assert total_rank <= total_recv <= n_blocks * d, "rank/reception conservation violated"
    n = n_blocks
    p_d_hat = float(np.mean(firsts))
    lam, lam_se = _block_lambda(p_d_hat, d, n)
    ts = _block_gaps_slots(np.asarray(firsts), d)
    return SimReport(
        engine="scheme",
        config={"scheme": x.compact(), "p": params.p, "seed": params.seed, "n_blocks": n_blocks},
        slots=n_blocks * d,
        tau_hat=total_rank / (n_blocks * d),
        tau_stderr=float(np.std(ranks, ddof=1)) / math.sqrt(n) / d if n > 1 else 0.0,
        p_d_hat=p_d_hat,
        lambda_hat=lam,
        lambda_stderr=lam_se,
        lambda_method="geometric-mle",
        n_t_samples=int(ts.size),
        t_histogram=_histogram(ts),
        decode_slots=tuple(decode_slots) if decode_slots is not None else None,
    )


def _receiver_run(x: SchemeVector, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Slot-level reference receiver for a time-invariant scheme.

    Keeps the set of unseen packet indices (holes below the fresh frontier).
    Each block references the lowest max_level unseen packets; a received
    combination of level m is matched to the highest still-unmatched window
    position below m, which is how generic elimination assigns newly seen
    packets. The decoded prefix ends just before the lowest unseen packet.
    """
    n_blocks, d = bits.shape
    levels = x.levels()
    max_level = max(i + 1 for i, v in enumerate(x.x) if v > 0)
    rank_t, first_t = pattern_tables(levels)
    holes: list[int] = []
    next_fresh = 1
    state = ReceiverState()
    decode_slots: list[int] = []
    ranks = np.zeros(n_blocks, dtype=np.int64)
    firsts = np.zeros(n_blocks, dtype=bool)
    for b in range(n_blocks):
        h = min(max_level, len(holes))
        window = holes[:h] + list(range(next_fresh, next_fresh + (max_level - h)))
        fresh_used = max_level - h
        assigned = [False] * max_level
        nmatched = 0
        for t in range(d):
            if bits[b, t]:
                lvl = levels[t]
                state.equations.append(window[lvl - 1])
                pos = next((k for k in range(lvl - 1, -1, -1) if not assigned[k]), None)
                if pos is not None:
                    assigned[pos] = True
                    nmatched += 1
                    state.seen_prefix += 1
            first_unseen = next((window[k] for k in range(max_level) if not assigned[k]), None)
            if first_unseen is None:
                first_unseen = holes[h] if len(holes) > h else next_fresh + fresh_used
            if first_unseen - 1 > state.decoded_prefix:
                state.decoded_prefix = first_unseen - 1
                decode_slots.append(b * d + t + 1)
            state.check()
        pattern_id = int(bits[b] @ (1 << np.arange(d, dtype=np.int64)))
        pattern = ErasurePattern(tuple(bool(v) for v in bits[b]))
        assert nmatched == block_rank(x, pattern) == rank_t[pattern_id], "rank rule mismatch"
        assert assigned[0] == block_first_decode(x, pattern) == bool(first_t[pattern_id]), (
            "first-decode rule mismatch"
        )
        ranks[b] = nmatched
        firsts[b] = assigned[0]
        holes = [window[k] for k in range(max_level) if not assigned[k]] + holes[h:]
        next_fresh += fresh_used
        state.equations.clear()
    return ranks, firsts, decode_slots


def simulate_mixture(spec: MixtureSpec, params: ChannelParams, n_blocks: int) -> SimReport:
    """Time-share between schemes: per block, draw the scheme from the mixture
    weights (on a substream independent of the erasure stream), then run the
    block exactly as in simulate_time_invariant.

    The exponent is the weighted per-block MLE, -(1/d) sum_i w_i log(1-p_d_i)
    with w_i the realised block fraction of scheme i.
    """
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
    d = spec.d
    bits = channel_trace(params, n_blocks * d).reshape(n_blocks, d)
    ids = bits @ (1 << np.arange(d, dtype=np.int64))
    sidx = _substream(params, _MIXTURE_STREAM).choice(
        len(spec.schemes), size=n_blocks, p=np.asarray(spec.weights)
    )
    rank_tables = np.stack([pattern_tables(s.levels())[0] for s in spec.schemes])
    first_tables = np.stack([pattern_tables(s.levels())[1] for s in spec.schemes])
    ranks = rank_tables[sidx, ids].astype(np.int64)
    firsts = first_tables[sidx, ids]
    total_rank = int(ranks.sum())
    assert total_rank <= int(bits.sum()) <= n_blocks * d, "rank/reception conservation violated"

    lam: float | None = 0.0
    var = 0.0
    for i in range(len(spec.schemes)):
        mask = sidx == i
        n_i = int(mask.sum())
        if n_i == 0:
            continue
        w_i = n_i / n_blocks
        p_i = float(firsts[mask].mean())
        if p_i >= 1.0:
            lam = None
            break
        lam += -w_i * math.log1p(-p_i) / d
        var += (w_i / (d * (1.0 - p_i))) ** 2 * p_i * (1.0 - p_i) / n_i
    ts = _block_gaps_slots(firsts, d)
    return SimReport(
        engine="mixture",
        config={
            "schemes": [s.compact() for s in spec.schemes],
            "weights": list(spec.weights),
            "p": params.p,
            "seed": params.seed,
            "n_blocks": n_blocks,
        },
        slots=n_blocks * d,
        tau_hat=total_rank / (n_blocks * d),
        tau_stderr=float(np.std(ranks, ddof=1)) / math.sqrt(n_blocks) / d if n_blocks > 1 else 0.0,
        p_d_hat=float(firsts.mean()),
        lambda_hat=lam,
        lambda_stderr=math.sqrt(var) if lam is not None else None,
        lambda_method="geometric-mle",
        n_t_samples=int(ts.size),
        t_histogram=_histogram(ts),
    )


def _transmit_index(cfg: FullRankConfig) -> np.ndarray:
    """ceil(rate * n) per slot, in exact integer arithmetic (piecewise for a
    segmented schedule, each segment continuing from the previous end)."""
    segments = cfg.segments if cfg.segments is not None else ((cfg.n_slots, cfg.r),)
    parts = []
    base = 0
    for length, rate in segments:
        frac = Fraction(rate).limit_denominator(10**6)
        n = np.arange(1, length + 1, dtype=np.int64)
        part = base + (frac.numerator * n + frac.denominator - 1) // frac.denominator
        parts.append(part)
        base = int(part[-1])
    return np.concatenate(parts)


def simulate_full_rank(cfg: FullRankConfig, params: ChannelParams) -> SimReport:
    """No-feedback engine: slot n carries a combination of packets 1..V[n].

    With V non-decreasing, an arriving combination is innovative iff the
    current rank r is below V[n], so r evolves as r <- min(V[n], r + recv),
    and the whole introduced prefix decodes exactly when r catches V[n].
    Decoding instants are recorded at slot granularity and the exponent is
    estimated by tail regression on the gap histogram (None when the run is
    too short to fit).
    """
    if cfg.r > params.p:
        warnings.warn(
            f"introduction rate r={cfg.r} exceeds the channel success rate p={params.p}; "
            "throughput saturates below r",
            stacklevel=2,
        )
    n_slots = cfg.n_slots
    v = _transmit_index(cfg)
    recv = channel_trace(params, n_slots)
    e = np.cumsum(recv, dtype=np.int64)
    vme = np.concatenate(([0], v - e))
    rank = e + np.minimum.accumulate(vme)[1:]
    caught = rank == v
    decoded = np.maximum.accumulate(np.where(caught, v, 0))
    assert np.all(decoded <= rank), "decoded prefix exceeded seen prefix"
    total_rank = int(rank[-1])
    assert total_rank <= int(e[-1]) <= n_slots, "rank/reception conservation violated"
    instants = np.flatnonzero(np.diff(decoded, prepend=0) > 0) + 1
    ts = np.diff(instants, prepend=0)
    hist = _histogram(ts)
    lam = se = None
    method = "tail-regression"
    if ts.size:
        try:
            est = estimate_exponent_tail(hist)
            lam, se = est.lambda_hat, est.stderr
        except ValueError:
            pass
    tau_hat = total_rank / n_slots
    return SimReport(
        engine="full-rank",
        config={
            "r": cfg.r,
            "segments": [[n, r] for n, r in cfg.segments] if cfg.segments else None,
            "p": params.p,
            "seed": params.seed,
            "n_slots": n_slots,
        },
        slots=n_slots,
        tau_hat=tau_hat,
        tau_stderr=math.sqrt(tau_hat * (1.0 - tau_hat) / n_slots),
        p_d_hat=None,
        lambda_hat=lam,
        lambda_stderr=se,
        lambda_method=method,
        n_t_samples=int(ts.size),
        t_histogram=hist,
        decode_slots=tuple(int(i) for i in instants) if n_slots <= 100_000 else None,
    )


def simulate_arq(params: ChannelParams, n_slots: int) -> SimReport:
    """Immediate feedback: repeat the lowest unseen packet until it lands.

    Every successful slot decodes one in-order packet, so gaps are geometric
    and the exponent comes from the geometric MLE on the gap samples.
    """
    if n_slots < 1:
        raise ValueError(f"n_slots must be >= 1, got {n_slots}")
    recv = channel_trace(params, n_slots)
    successes = np.flatnonzero(recv) + 1
    ts = np.diff(successes, prepend=0)
    hist = _histogram(ts)
    lam = se = None
    if ts.size:
        try:
            est = estimate_exponent_geometric(hist)
            lam, se = est.lambda_hat, est.stderr
        except ValueError:
            pass
    tau_hat = successes.size / n_slots
    return SimReport(
        engine="arq",
        config={"p": params.p, "seed": params.seed, "n_slots": n_slots},
        slots=n_slots,
        tau_hat=tau_hat,
        tau_stderr=math.sqrt(tau_hat * (1.0 - tau_hat) / n_slots),
        p_d_hat=tau_hat,
        lambda_hat=lam,
        lambda_stderr=se,
        lambda_method="geometric-mle",
        n_t_samples=int(ts.size),
        t_histogram=hist,
    )


def estimate_exponent_geometric(t_histogram: dict[int, int]) -> ExponentEstimate:
    """Geometric MLE from gap samples T >= 1: p_hat = N / sum(T), exponent
    -log(1 - p_hat), stderr by the delta method."""
    n = sum(t_histogram.values())
    if n < 1:
        raise ValueError("need at least one T sample")
    total = sum(t * c for t, c in t_histogram.items())
    if any(t < 1 for t in t_histogram):
        raise ValueError("gap samples must be >= 1")
    p_hat = n / total
    if p_hat >= 1.0:
        raise ValueError("all gaps equal 1; geometric exponent is unbounded")
    se_p = p_hat * math.sqrt((1.0 - p_hat) / n)
    return ExponentEstimate(
        lambda_hat=-math.log1p(-p_hat),
        stderr=se_p / (1.0 - p_hat),
        method="geometric-mle",
        n_samples=n,
    )


def estimate_exponent_tail(
    t_histogram: dict[int, int], min_tail_mass: float | None = None
) -> ExponentEstimate:
    """Least-squares slope of log P(T > n) versus n over the tail window.

    The window keeps the n whose empirical CCDF lies in [min_tail_mass, 0.5]
    (default min_tail_mass = 50 / n_samples); the estimate is minus the
    fitted slope, with the regression standard error of the slope.
    """
    n_samples = sum(t_histogram.values())
    if n_samples < 100:
        raise ValueError(f"need at least 100 T samples for tail regression, got {n_samples}")
    if min_tail_mass is None:
        min_tail_mass = 50.0 / n_samples
    tmax = max(t_histogram)
    counts = np.zeros(tmax + 1, dtype=np.int64)
    for t, c in t_histogram.items():
        counts[t] = c
    ccdf = (n_samples - np.cumsum(counts)) / n_samples  # ccdf[t] = P(T > t)
    ns = np.arange(tmax + 1)
    mask = (ccdf >= min_tail_mass) & (ccdf <= 0.5) & (ccdf > 0.0)
    ns, ys = ns[mask], np.log(ccdf[mask])
    if ns.size < 2:
        raise ValueError("empty fitting window: CCDF never spans [min_tail_mass, 0.5]")
    nbar = ns.mean()
    sxx = float(np.sum((ns - nbar) ** 2))
    slope = float(np.sum((ns - nbar) * (ys - ys.mean())) / sxx)
    resid = ys - (ys.mean() + slope * (ns - nbar))
    se = math.sqrt(float(resid @ resid) / (ns.size - 2) / sxx) if ns.size > 2 else 0.0
    if slope > 0.0:
        raise ValueError("tail does not decay; cannot estimate a positive exponent")
    return ExponentEstimate(
        lambda_hat=-slope,
        stderr=se,
        method="tail-regression",
        n_samples=n_samples,
    )
