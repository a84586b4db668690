"""Core value types shared by the analytics, envelope, simulation and CLI layers.

Everything here is an immutable value object except ReceiverState, which is
single-owner mutable state inside one simulation run. All exponents are in
nats per slot (natural logarithms throughout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "ChannelParams",
    "SchemeVector",
    "ErasurePattern",
    "BlockStats",
    "TradeoffPoint",
    "MixtureSpec",
    "ReceiverState",
    "SimReport",
]

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ChannelParams:
    """i.i.d. erasure channel: each slot independently delivers with probability p.

    The seed drives every pseudo-random stream derived for a run, so a run is
    a pure function of its configuration.
    """

    p: float
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.p, (int, float)) and 0.0 < self.p < 1.0):
            raise ValueError(f"p must lie strictly in (0, 1), got {self.p!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class SchemeVector:
    """Per-block transmission plan for block length d = len(x).

    Entry x[i] is the number of slots in the block that carry a generic
    combination of the (i+1) lowest-index unseen packets; entries are
    non-negative and must sum to d.
    """

    x: tuple[int, ...]

    def __post_init__(self):
        xs = tuple(int(v) for v in self.x)
        object.__setattr__(self, "x", xs)
        if len(xs) == 0:
            raise ValueError("scheme vector must have at least one entry")
        if any(v < 0 for v in xs):
            raise ValueError(f"scheme entries must be non-negative, got {xs}")
        if sum(xs) != len(xs):
            raise ValueError(
                f"scheme entries must sum to the block length d={len(xs)}, got sum {sum(xs)}"
            )

    @property
    def d(self) -> int:
        return len(self.x)

    def levels(self) -> tuple[int, ...]:
        """Support level of each slot in transmission order (non-decreasing)."""
        out = []
        for i, cnt in enumerate(self.x):
            out.extend([i + 1] * cnt)
        return tuple(out)

    def compact(self) -> str:
        return ",".join(str(v) for v in self.x)

    @classmethod
    def parse(cls, text: str) -> "SchemeVector":
        try:
            xs = tuple(int(tok) for tok in text.split(","))
        except ValueError as exc:
            raise ValueError(f"cannot parse scheme vector from {text!r}") from exc
        return cls(xs)

    def __str__(self) -> str:
        return f"[{self.compact()}]"


@dataclass(frozen=True)
class ErasurePattern:
    """Outcome of one block: bits[t] is True when slot t was received."""

    bits: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))
        if len(self.bits) == 0:
            raise ValueError("erasure pattern must have at least one slot")

    @classmethod
    def from_string(cls, text: str) -> "ErasurePattern":
        if not set(text) <= {"0", "1"}:
            raise ValueError(f"pattern string must be over '0'/'1', got {text!r}")
        return cls(tuple(c == "1" for c in text))

    @property
    def n_received(self) -> int:
        return sum(self.bits)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class BlockStats:
    """Exact per-block statistics of a scheme at channel parameter p.

    p_d is the probability that the block decodes its first unseen packet,
    e_s_d the expected number of innovative packets received in the block.
    """

    p_d: float
    e_s_d: float

    def __post_init__(self):
        if not -WEIGHT_TOL <= self.p_d <= 1.0 + WEIGHT_TOL:
            raise ValueError(f"p_d must lie in [0, 1], got {self.p_d}")
        if self.e_s_d < -WEIGHT_TOL:
            raise ValueError(f"e_s_d must be non-negative, got {self.e_s_d}")


@dataclass(frozen=True)
class TradeoffPoint:
    """A (throughput, exponent) pair: tau in innovative packets per slot,
    lam in nats per slot, plus a tag recording what produced it."""

    tau: float
    lam: float
    provenance: str = ""

    def __post_init__(self):
        # -0.0 can show up from -log(1-p_d)/d at p_d == 0; normalise it.
        if self.lam == 0.0:
            object.__setattr__(self, "lam", 0.0)
        if self.tau == 0.0:
            object.__setattr__(self, "tau", 0.0)
        if self.tau < 0.0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")


@dataclass(frozen=True)
class MixtureSpec:
    """Time-sharing mixture: per block, scheme i is used with probability weights[i]."""

    schemes: tuple[SchemeVector, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.schemes) == 0:
            raise ValueError("mixture needs at least one scheme")
        if len(self.schemes) != len(self.weights):
            raise ValueError("mixture needs one weight per scheme")
        if any(w < 0.0 for w in self.weights):
            raise ValueError(f"mixture weights must be non-negative, got {self.weights}")
        if abs(sum(self.weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"mixture weights must sum to 1, got sum {sum(self.weights)!r}")
        d0 = self.schemes[0].d
        if any(s.d != d0 for s in self.schemes):
            raise ValueError("all schemes in a mixture must share the same block length d")

    @property
    def d(self) -> int:
        return self.schemes[0].d


@dataclass
class ReceiverState:
    """Receiver-side bookkeeping during one simulation run.

    decoded_prefix: largest j such that packets 1..j are decoded in order.
    seen_prefix: number of seen packets (each innovative reception makes one
    more packet seen). equations holds the max packet indices of combinations
    received in the current block and not yet absorbed by feedback.
    Invariant: decoded_prefix <= seen_prefix, and decoded_prefix never drops.
    """

    decoded_prefix: int = 0
    seen_prefix: int = 0
    equations: list[int] = field(default_factory=list)

    def check(self) -> None:
        if self.decoded_prefix > self.seen_prefix:
            raise AssertionError(
                f"decoded_prefix {self.decoded_prefix} exceeds seen_prefix {self.seen_prefix}"
            )


@dataclass(frozen=True)
class SimReport:
    """Outcome of a Monte Carlo run.

    t_histogram maps an inter-decoding gap T (in slots) to its observed count.
    The first T sample is measured from slot 0 and the open interval after the
    last decoding instant is censored (dropped), so counts sum to the number
    of decoding events observed. p_d_hat is reported by block engines only.
    decode_slots is populated only when slot-level recording was requested.
    """

    engine: str
    config: dict
    slots: int
    tau_hat: float
    tau_stderr: float
    p_d_hat: float | None
    lambda_hat: float | None
    lambda_stderr: float | None
    lambda_method: str
    n_t_samples: int
    t_histogram: dict[int, int]
    decode_slots: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.tau_hat <= 1.0:
            raise ValueError(f"tau_hat must lie in [0, 1], got {self.tau_hat}")
        if sum(self.t_histogram.values()) != self.n_t_samples:
            raise ValueError("t_histogram counts must sum to n_t_samples")

    def ccdf(self) -> dict[int, float]:
        """Empirical P(T > t) at every integer t from 0 to max observed T."""
        if self.n_t_samples == 0:
            return {0: 0.0}
        tmax = max(self.t_histogram)
        above = self.n_t_samples
        out = {}
        for t in range(0, tmax + 1):
            if t > 0:
                above -= self.t_histogram.get(t, 0)
            out[t] = above / self.n_t_samples
        return out

    def to_dict(self) -> dict:
        """JSON-ready representation (histogram as ascending [t, count] pairs)."""
        d = {
            "kind": "sim-report",
            "engine": self.engine,
            "config": self.config,
            "slots": self.slots,
            "tau_hat": self.tau_hat,
            "tau_stderr": self.tau_stderr,
            "p_d_hat": self.p_d_hat,
            "lambda_hat": self.lambda_hat,
            "lambda_stderr": self.lambda_stderr,
            "lambda_method": self.lambda_method,
            "n_t_samples": self.n_t_samples,
            "t_histogram": [[t, self.t_histogram[t]] for t in sorted(self.t_histogram)],
        }
        if self.decode_slots is not None:
            d["decode_slots"] = list(self.decode_slots)
        return d


def optimal_lambda_bound(p: float) -> float:
    """Best exponent achievable at any feedback delay: -log(1-p)."""
    return -math.log1p(-p)
