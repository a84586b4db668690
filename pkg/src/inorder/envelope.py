"""Scheme-space enumeration and the achievable (tau, lambda) envelope.

Time-sharing makes every convex combination of achievable points achievable,
so the optimal trade-off curve is the upper-left concave boundary of the
point cloud spanned by all time-invariant schemes: the piecewise-linear curve
from the max-exponent point to the max-throughput point. Scheme evaluation is
a pure map over the enumeration; hull extraction is single-threaded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .analytics import canonicalize, tradeoff_point
from .model import MixtureSpec, SchemeVector, TradeoffPoint

__all__ = [
    "COLLINEAR_TOL",
    "ENUMERATION_CAP",
    "EnvelopeResult",
    "compute_envelope",
    "enumerate_schemes",
    "envelope_lambda",
    "optimal_lambda_at",
    "upper_envelope",
]

ENUMERATION_CAP = 12
COLLINEAR_TOL = 1e-9


@dataclass(frozen=True)
class EnvelopeResult:
    """All evaluated points plus the dominating envelope.

    vertices are achievable scheme points ordered by strictly increasing tau
    and strictly decreasing lambda; segments pair adjacent vertices, each
    realisable in between by time-sharing its two endpoint schemes.
    """

    all_points: tuple[TradeoffPoint, ...]
    vertices: tuple[TradeoffPoint, ...]
    segments: tuple[tuple[TradeoffPoint, TradeoffPoint], ...]

    def __post_init__(self):
        vs = self.vertices
        for a, b in zip(vs, vs[1:]):
            if not (a.tau < b.tau and a.lam > b.lam):
                raise ValueError(
                    f"envelope vertices must strictly trade tau for lambda, got {a} -> {b}"
                )


def enumerate_schemes(d: int, dedupe: bool = True, cap: int = ENUMERATION_CAP) -> list[SchemeVector]:
    """All weak compositions of d into d parts, as scheme vectors.

    With dedupe, schemes starting with a positive entry are replaced by their
    canonical representative and duplicates dropped; schemes with x_1 = 0 are
    kept as-is (the canonical rewrite does not apply to them).
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if d > cap:
        raise ValueError(f"d={d} exceeds the enumeration cap {cap} (raise cap= to override)")
    out: list[SchemeVector] = []
    seen: set[tuple[int, ...]] = set()
    # stars and bars: d stars among 2d-1 positions, d-1 bars cut them into parts
    for bars in itertools.combinations(range(2 * d - 1), d - 1):
        ext = (-1, *bars, 2 * d - 1)
        comp = tuple(ext[k + 1] - ext[k] - 1 for k in range(d))
        s = SchemeVector(comp)
        if dedupe:
            if comp[0] >= 1:
                s = canonicalize(s)
            if s.x in seen:
                continue
            seen.add(s.x)
        out.append(s)
    return out


def _cross(o: TradeoffPoint, a: TradeoffPoint, b: TradeoffPoint) -> float:
    return (a.tau - o.tau) * (b.lam - o.lam) - (a.lam - o.lam) * (b.tau - o.tau)


def upper_envelope(points: list[TradeoffPoint] | tuple[TradeoffPoint, ...]) -> EnvelopeResult:
    """Upper-left concave boundary of a point cloud in the (tau, lambda) plane.

    Ties in tau keep only the max-lambda point; points left of the best
    exponent are dominated and never vertices; collinear interior points
    (cross product within COLLINEAR_TOL) are dropped.
    """
    pts = tuple(points)
    if not pts:
        raise ValueError("cannot build an envelope from an empty point list")
    best: dict[float, TradeoffPoint] = {}
    for pt in pts:
        cur = best.get(pt.tau)
        if cur is None or pt.lam > cur.lam:
            best[pt.tau] = pt
    cand = [best[t] for t in sorted(best)]
    peak = max(range(len(cand)), key=lambda i: (cand[i].lam, cand[i].tau))
    hull: list[TradeoffPoint] = []
    for pt in cand[peak:]:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) >= -COLLINEAR_TOL:
            hull.pop()
        hull.append(pt)
    return EnvelopeResult(
        all_points=pts,
        vertices=tuple(hull),
        segments=tuple(zip(hull, hull[1:])),
    )


def compute_envelope(
    d: int, p: float, dedupe: bool = True, cap: int = ENUMERATION_CAP
) -> EnvelopeResult:
    """Enumerate all schemes of block length d and extract their envelope at p."""
    points = [tradeoff_point(s, p) for s in enumerate_schemes(d, dedupe=dedupe, cap=cap)]
    return upper_envelope(points)


def envelope_lambda(result: EnvelopeResult, tau: float) -> float:
    """Envelope height at throughput tau (linear interpolation between vertices)."""
    vs = result.vertices
    lo, hi = vs[0].tau, vs[-1].tau
    if not lo - 1e-12 <= tau <= hi + 1e-12:
        raise ValueError(f"tau={tau} outside the envelope range [{lo}, {hi}]")
    tau = min(max(tau, lo), hi)
    for a, b in zip(vs, vs[1:]):
        if tau <= b.tau:
            if b.tau == a.tau:
                return max(a.lam, b.lam)
            t = (tau - a.tau) / (b.tau - a.tau)
            return (1.0 - t) * a.lam + t * b.lam
    return vs[-1].lam


def _scheme_of(point: TradeoffPoint) -> SchemeVector:
    if not point.provenance.startswith("scheme:"):
        raise ValueError(f"vertex {point} carries no scheme provenance, cannot build a mixture")
    return SchemeVector.parse(point.provenance.removeprefix("scheme:"))


def optimal_lambda_at(result: EnvelopeResult, tau_target: float) -> tuple[float, MixtureSpec]:
    """Best achievable exponent at a target throughput, with the realising mixture.

    On the segment between vertices L and R the mixture uses L with
    probability mu = (tau_R - tau_target) / (tau_R - tau_L).
    """
    vs = result.vertices
    lo, hi = vs[0].tau, vs[-1].tau
    if not lo - 1e-12 <= tau_target <= hi + 1e-12:
        raise ValueError(f"tau_target={tau_target} outside the envelope range [{lo}, {hi}]")
    tau_target = min(max(tau_target, lo), hi)
    for v in vs:
        if tau_target == v.tau:
            return v.lam, MixtureSpec(schemes=(_scheme_of(v),), weights=(1.0,))
    for a, b in zip(vs, vs[1:]):
        if tau_target < b.tau:
            mu = (b.tau - tau_target) / (b.tau - a.tau)
            lam = mu * a.lam + (1.0 - mu) * b.lam
            return lam, MixtureSpec(schemes=(_scheme_of(a), _scheme_of(b)), weights=(mu, 1.0 - mu))
    v = vs[-1]
    return v.lam, MixtureSpec(schemes=(_scheme_of(v),), weights=(1.0,))
