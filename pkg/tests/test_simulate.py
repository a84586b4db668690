import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
import hypothesis.strategies as st

from inorder import (
    ChannelParams,
    FullRankConfig,
    MixtureSpec,
    SchemeVector,
    block_rank_moments,
    block_stats,
    channel_trace,
    divergence,
    estimate_exponent_geometric,
    estimate_exponent_tail,
    simulate_arq,
    simulate_full_rank,
    simulate_mixture,
    simulate_time_invariant,
)
from inorder.simulate import _transmit_index

from conftest import scheme_vectors


# ---------------------------------------------------------------------------
# channel
# ---------------------------------------------------------------------------


def test_channel_trace_deterministic():
    params = ChannelParams(p=0.6, seed=42)
    a = channel_trace(params, 10)
    b = channel_trace(params, 10)
    assert np.array_equal(a, b)
    c = channel_trace(ChannelParams(p=0.6, seed=43), 10)
    assert not np.array_equal(a, c)


def test_channel_trace_prefix_consistent():
    params = ChannelParams(p=0.35, seed=9)
    long = channel_trace(params, 1000)
    short = channel_trace(params, 100)
    assert np.array_equal(long[:100], short)


def test_channel_trace_statistics():
    near_one = channel_trace(ChannelParams(p=0.999, seed=1), 100_000).mean()
    assert 0.996 <= near_one <= 1.0
    frac = channel_trace(ChannelParams(p=0.6, seed=2), 1_000_000).mean()
    assert abs(frac - 0.6) < 0.002
    with pytest.raises(ValueError):
        channel_trace(ChannelParams(p=0.6, seed=2), 0)


# ---------------------------------------------------------------------------
# time-invariant block engine
# ---------------------------------------------------------------------------


def test_scheme_sim_matches_oracle_worked_example():
    params = ChannelParams(p=0.6, seed=101)
    rep = simulate_time_invariant(SchemeVector((1, 0, 3, 0)), params, 100_000)
    assert abs(rep.tau_hat - 0.5676) <= 0.005
    assert abs(rep.p_d_hat - 0.6864) <= 0.005
    assert rep.lambda_method == "geometric-mle"
    assert math.isclose(rep.lambda_hat, -math.log1p(-rep.p_d_hat) / 4, abs_tol=1e-15)


def test_scheme_sim_round_robin_throughput():
    rep = simulate_time_invariant(SchemeVector((1, 1)), ChannelParams(p=0.6, seed=5), 100_000)
    assert abs(rep.tau_hat - 0.6) <= 0.005


def test_scheme_sim_deterministic_replay():
    params = ChannelParams(p=0.6, seed=77)
    a = simulate_time_invariant(SchemeVector((1, 0, 3, 0)), params, 5000)
    b = simulate_time_invariant(SchemeVector((1, 0, 3, 0)), params, 5000)
    assert a == b


def test_scheme_sim_histogram_accounting():
    rep = simulate_time_invariant(SchemeVector((2, 1, 0)), ChannelParams(p=0.5, seed=3), 2000)
    assert sum(rep.t_histogram.values()) == rep.n_t_samples
    assert all(t % 3 == 0 for t in rep.t_histogram)  # block granularity, d = 3
    assert rep.slots == 6000


def test_detailed_receiver_agrees_with_tables():
    params = ChannelParams(p=0.55, seed=99)
    for xs in [(1, 1), (2, 0), (0, 2), (1, 0, 3, 0), (1, 0, 0, 3), (0, 2, 1), (3, 0, 0, 1, 1)]:
        x = SchemeVector(xs)
        fast = simulate_time_invariant(x, params, 2000)
        slow = simulate_time_invariant(x, params, 2000, record_slots=True)
        assert fast.tau_hat == slow.tau_hat
        assert fast.p_d_hat == slow.p_d_hat
        assert fast.t_histogram == slow.t_histogram
        assert slow.decode_slots is not None
        assert all(1 <= s <= slow.slots for s in slow.decode_slots)
        assert list(slow.decode_slots) == sorted(slow.decode_slots)


@settings(deadline=None, max_examples=15)
@given(scheme_vectors(max_d=5), st.integers(min_value=0, max_value=2**32))
def test_detailed_receiver_agrees_on_random_schemes(x, seed):
    params = ChannelParams(p=0.45, seed=seed)
    fast = simulate_time_invariant(x, params, 300)
    slow = simulate_time_invariant(x, params, 300, record_slots=True)
    assert fast.tau_hat == slow.tau_hat
    assert fast.p_d_hat == slow.p_d_hat
    assert fast.t_histogram == slow.t_histogram


def test_scheme_sim_within_four_sigma_of_block_stats():
    n = 100_000
    for xs in [(1, 1), (1, 0, 3, 0), (0, 2, 1), (2, 1, 0)]:
        x = SchemeVector(xs)
        for p in (0.3, 0.6):
            params = ChannelParams(p=p, seed=hash((xs, p)) % 2**32)
            rep = simulate_time_invariant(x, params, n)
            stats = block_stats(x, p)
            sigma_p = math.sqrt(stats.p_d * (1 - stats.p_d) / n)
            _, var_s = block_rank_moments(x, p)
            sigma_tau = math.sqrt(var_s / n) / x.d
            assert abs(rep.p_d_hat - stats.p_d) <= 4 * sigma_p, (xs, p)
            assert abs(rep.tau_hat - stats.e_s_d / x.d) <= 4 * sigma_tau, (xs, p)


def test_block_gaps_are_geometric():
    x = SchemeVector((1, 0, 3, 0))
    p = 0.6
    n = 100_000
    rep = simulate_time_invariant(x, ChannelParams(p=p, seed=31), n)
    p_d = rep.p_d_hat
    gaps = {t // x.d: c for t, c in rep.t_histogram.items()}
    kmax = max(gaps)
    # pool tail so every expected bin count is >= 5
    expected, observed = [], []
    tail_exp = rep.n_t_samples
    tail_obs = rep.n_t_samples
    for k in range(1, kmax + 1):
        e = rep.n_t_samples * p_d * (1 - p_d) ** (k - 1)
        if e < 5:
            break
        expected.append(e)
        observed.append(gaps.get(k, 0))
        tail_exp -= e
        tail_obs -= gaps.get(k, 0)
    expected.append(max(tail_exp, 1e-9))
    observed.append(tail_obs)
    stat, pvalue = scipy.stats.chisquare(observed, expected, ddof=1)
    assert pvalue > 0.001


def test_conservation_invariant():
    for xs in [(1, 1, 1), (3, 0, 0), (0, 0, 3)]:
        rep = simulate_time_invariant(SchemeVector(xs), ChannelParams(p=0.7, seed=8), 10_000)
        assert 0.0 <= rep.tau_hat <= 1.0


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------


def test_mixture_degenerate_matches_scheme_engine():
    params = ChannelParams(p=0.6, seed=12)
    spec = MixtureSpec((SchemeVector((2, 0)), SchemeVector((1, 1))), (1.0, 0.0))
    mix = simulate_mixture(spec, params, 5000)
    single = simulate_time_invariant(SchemeVector((2, 0)), params, 5000)
    assert mix.tau_hat == single.tau_hat
    assert mix.p_d_hat == single.p_d_hat
    assert mix.lambda_hat == single.lambda_hat
    assert mix.t_histogram == single.t_histogram


def test_mixture_half_half_d2():
    params = ChannelParams(p=0.6, seed=13)
    spec = MixtureSpec((SchemeVector((2, 0)), SchemeVector((1, 1))), (0.5, 0.5))
    rep = simulate_mixture(spec, params, 100_000)
    lam_expect = 0.5 * (-math.log(0.4)) + 0.5 * (-math.log(0.4) / 2)
    assert abs(rep.tau_hat - 0.51) <= 0.005
    assert abs(rep.lambda_hat - lam_expect) <= 0.02


def test_mixture_quarter_three_quarter_d3():
    p = 0.6
    params = ChannelParams(p=p, seed=14)
    spec = MixtureSpec((SchemeVector((3, 0, 0)), SchemeVector((1, 1, 1))), (0.25, 0.75))
    rep = simulate_mixture(spec, params, 100_000)
    tau_expect = 0.25 * (1 - 0.4**3) / 3 + 0.75 * p
    lam_expect = 0.25 * (-math.log(0.4)) + 0.75 * (-math.log(0.4) / 3)
    assert abs(rep.tau_hat - tau_expect) <= 0.005
    assert abs(rep.lambda_hat - lam_expect) <= 0.02


def test_mixture_rejects_mismatched_d():
    with pytest.raises(ValueError):
        MixtureSpec((SchemeVector((2, 0)), SchemeVector((1, 1, 1))), (0.5, 0.5))


# ---------------------------------------------------------------------------
# full-rank (no feedback)
# ---------------------------------------------------------------------------


def brute_full_rank_instants(cfg, params):
    """Reference: explicit equation multiset; decoded prefix is the largest
    saturated prefix of the capped cumulative equation counts."""
    v = _transmit_index(cfg)
    recv = channel_trace(params, cfg.n_slots)
    cnt: dict[int, int] = {}
    instants = []
    decoded = 0
    for n in range(cfg.n_slots):
        if recv[n]:
            m = int(v[n])
            cnt[m] = cnt.get(m, 0) + 1
            r = 0
            best = 0
            for j in range(1, max(cnt) + 1):
                r = min(r + cnt.get(j, 0), j)
                if r == j:
                    best = j
            if best > decoded:
                decoded = best
                instants.append(n + 1)
    return instants


def test_full_rank_matches_brute_force():
    params = ChannelParams(p=0.6, seed=123)
    for r in (0.17, 0.3, 0.55):
        cfg = FullRankConfig(r=r, n_slots=2000)
        rep = simulate_full_rank(cfg, params)
        assert list(rep.decode_slots) == brute_full_rank_instants(cfg, params)


def test_full_rank_transmit_index_exact():
    v = _transmit_index(FullRankConfig(r=0.3, n_slots=40))
    assert [int(x) for x in v[:10]] == [1, 1, 1, 2, 2, 2, 3, 3, 3, 3]
    assert int(v[9]) == 3 and int(v[10]) == 4  # ceil(0.3 * 10) = 3 exactly
    v = _transmit_index(FullRankConfig(r=0.5, n_slots=6))
    assert [int(x) for x in v] == [1, 1, 2, 2, 3, 3]


def test_full_rank_throughput_tracks_r():
    rep = simulate_full_rank(FullRankConfig(r=0.3, n_slots=1_000_000), ChannelParams(p=0.6, seed=7))
    assert abs(rep.tau_hat - 0.3) <= 0.005
    assert rep.p_d_hat is None
    assert rep.lambda_method == "tail-regression"


def test_full_rank_exponent_monotone_in_r():
    params = ChannelParams(p=0.6, seed=7)
    lams = []
    for r in (0.3, 0.59):
        rep = simulate_full_rank(FullRankConfig(r=r, n_slots=1_000_000), params)
        lams.append(rep.lambda_hat)
    assert lams[1] < lams[0]


def test_full_rank_r_above_p_warns_and_saturates():
    with pytest.warns(UserWarning):
        rep = simulate_full_rank(FullRankConfig(r=0.9, n_slots=200_000), ChannelParams(p=0.5, seed=4))
    assert rep.tau_hat < 0.6


def test_full_rank_segments():
    cfg = FullRankConfig(r=0.3, n_slots=1000, segments=((500, 0.2), (500, 0.4)))
    v = _transmit_index(cfg)
    assert int(v[499]) == 100
    assert int(v[999]) == 300
    with pytest.raises(ValueError):
        FullRankConfig(r=0.3, n_slots=1000, segments=((300, 0.2), (500, 0.4)))
    with pytest.raises(ValueError):
        FullRankConfig(r=1.2, n_slots=1000)


# ---------------------------------------------------------------------------
# ARQ
# ---------------------------------------------------------------------------


def test_arq_statistics():
    rep = simulate_arq(ChannelParams(p=0.6, seed=7), 1_000_000)
    assert abs(rep.tau_hat - 0.6) <= 0.002
    cc = rep.ccdf()
    for n in range(1, 11):
        assert abs(cc.get(n, 0.0) - 0.4**n) < 0.01
    assert abs(rep.lambda_hat - (-math.log(0.4))) <= 0.02 * (-math.log(0.4))
    assert rep.p_d_hat == rep.tau_hat


def test_arq_determinism_and_accounting():
    a = simulate_arq(ChannelParams(p=0.3, seed=2), 10_000)
    b = simulate_arq(ChannelParams(p=0.3, seed=2), 10_000)
    assert a == b
    assert sum(a.t_histogram.values()) == a.n_t_samples


# ---------------------------------------------------------------------------
# exponent estimators
# ---------------------------------------------------------------------------


def test_geometric_mle_on_synthetic_geometric():
    rng = np.random.default_rng(5)
    ts = rng.geometric(0.6, size=1_000_000)
    values, counts = np.unique(ts, return_counts=True)
    hist = {int(t): int(c) for t, c in zip(values, counts)}
    est = estimate_exponent_geometric(hist)
    assert est.method == "geometric-mle"
    assert abs(est.lambda_hat - (-math.log(0.4))) <= 0.02 * (-math.log(0.4))
    assert est.stderr < 0.01


def test_tail_regression_on_synthetic_geometric():
    rng = np.random.default_rng(6)
    ts = rng.geometric(0.6, size=1_000_000)
    values, counts = np.unique(ts, return_counts=True)
    hist = {int(t): int(c) for t, c in zip(values, counts)}
    est = estimate_exponent_tail(hist)
    assert est.method == "tail-regression"
    assert abs(est.lambda_hat - (-math.log(0.4))) <= 0.02 * (-math.log(0.4))
    assert est.n_samples == 1_000_000


def test_tail_regression_rejects_degenerate_input():
    with pytest.raises(ValueError):
        estimate_exponent_tail({5: 1000})  # all gaps equal: no window
    with pytest.raises(ValueError):
        estimate_exponent_tail({1: 50})  # too few samples


def test_full_rank_tail_estimate_tracks_divergence_loosely():
    # The asymptotic exponent is D(r || p); the finite-horizon regression sits
    # above it (polynomial prefactor in the tail), so only sanity-bound it.
    rep = simulate_full_rank(FullRankConfig(r=0.3, n_slots=1_000_000), ChannelParams(p=0.6, seed=7))
    d = divergence(0.3, 0.6)
    assert d < rep.lambda_hat < 4 * d
