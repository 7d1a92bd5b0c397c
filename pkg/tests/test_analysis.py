import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from codedcaching import analysis as an
from codedcaching.harness import ExperimentConfig, run_trials


def test_peak_rate_reference_point():
    # (1-q)/q * (1-(1-q)^K) with q=1/4, K=8
    expected = 3 * (1 - 0.75 ** 8)
    assert an.peak_rate_asymptotic(8, 16, 4) == pytest.approx(expected, rel=1e-12)
    assert an.peak_rate_asymptotic(8, 16, 4) == pytest.approx(2.69966, abs=1e-5)


def test_peak_rate_grouped_rounds_up():
    # N/M = 10/3 -> c = 4, so grouped q = 1/4 instead of 3/10
    assert an.peak_rate_asymptotic(8, 10, 3, grouped=True) == an.peak_rate_asymptotic(8, 16, 4)
    assert an.peak_rate_asymptotic(8, 10, 3) != an.peak_rate_asymptotic(8, 16, 4)


def test_peak_rate_domain():
    with pytest.raises(ValueError):
        an.peak_rate_asymptotic(4, 8, 0)
    assert an.uncoded_rate(4, 8, 0) == 4
    assert an.uncoded_rate(8, 16, 4) == 6


@given(K=st.integers(1, 40), N=st.integers(1, 50), data=st.data())
@settings(max_examples=100, deadline=None)
def test_peak_below_uncoded(K, N, data):
    M = data.draw(st.integers(1, N))
    assert an.peak_rate_asymptotic(K, N, M) <= an.uncoded_rate(K, N, M) + 1e-9


def test_mu_values():
    assert an.mu_new(1, 8, 16, 4) == pytest.approx(4 * 0.75 ** 8)
    assert an.mu_new(3, 8, 16, 4) == pytest.approx(4 * 0.25 ** 2 * 0.75 ** 6)
    assert an.mu_old(3, 8, 16, 4) == pytest.approx(0.25 ** 2 * 0.75 ** 6)
    with pytest.raises(ValueError):
        an.mu_new(0, 8, 16, 4)


@pytest.mark.parametrize('n,p,s', [(1, 0.3, 1), (3, 0.5, 2), (4, 0.2, 3), (5, 0.7, 4), (6, 0.05, 5)])
def test_expected_max_binomial_brute_force(n, p, s):
    # enumerate the joint outcome space directly
    pmf = [binom.pmf(k, n, p) for k in range(n + 1)]
    total = 0.0
    for outcome in itertools.product(range(n + 1), repeat=s):
        total += max(outcome) * math.prod(pmf[k] for k in outcome)
    assert an.expected_max_binomial(n, p, s) == pytest.approx(total, rel=1e-10, abs=1e-14)


def test_expected_max_binomial_edges():
    assert an.expected_max_binomial(10, 0.0, 3) == 0
    assert an.expected_max_binomial(10, 1.0, 3) == 10
    assert an.expected_max_binomial(10, 0.3, 1) == pytest.approx(3.0)


def test_semianalytic_matches_monte_carlo_small_file():
    ref = an.expected_rate_semianalytic(8, 16, 4, 1)
    stats, _ = run_trials(ExperimentConfig(8, 16, 4, F_prime=1, trials=4000, seed=31))
    assert abs(stats.mean - ref) <= 3 * stats.stderr


def test_semianalytic_monotone_and_limit():
    vals = [an.expected_rate_semianalytic(8, 16, 4, f) for f in (1, 4, 16, 64, 256, 1024, 4096)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > an.peak_rate_asymptotic(8, 16, 4)
    assert vals[-1] == an.expected_rate_semianalytic(8, 16, 4, 4096)


def test_semianalytic_full_caching_and_limits():
    assert an.expected_rate_semianalytic(5, 4, 4, 10) == 0
    with pytest.raises(ValueError):
        an.expected_rate_semianalytic(31, 62, 4, 1)


def test_concentration_bounds():
    # K=8, N/M=4, F=16384, eps=0.1, E[R]=2.7
    value = 2 * math.exp(-2 * 0.01 * 2.7 ** 2 * 16384 / (8 * 16))
    assert an.concentration_bound_new(0.1, 2.7, 16384, 8, 16, 4) == pytest.approx(value)
    assert an.concentration_bound_new(0.1, 2.7, 16384, 8, 16, 4) < 1
    assert an.concentration_bound_new(0.1, 2.7, 64, 8, 16, 4) > 1
    assert an.concentration_bound_old(0.1, 2.7, 1000, 8) == pytest.approx(
        2 * math.exp(-2 * 0.01 * 2.7 ** 2 * 1000 / (8 * 81)))


def test_rate_floor_threshold_reference():
    floor, thr = an.rate_floor_and_threshold('new', 24, 48, 12)
    assert floor == 9
    # r=4, t=6: 4/48 * 3/4 * exp(12 * 3/4 * 23/24)
    assert thr == pytest.approx(4 / 48 * 0.75 * math.exp(12 * 0.75 * 23 / 24))
    assert 340 < thr < 355
    floor_old, thr_old = an.rate_floor_and_threshold('old', 24, 48, 12)
    assert floor_old == 9 and thr_old == pytest.approx(thr)
    with pytest.raises(ValueError):
        an.rate_floor_and_threshold('new', 24, 24, 12)
    with pytest.raises(ValueError):
        an.rate_floor_and_threshold('mixed', 24, 48, 12)


def test_filesize_lowerbound_examples():
    # K=8, N/M=4, so t=2
    assert an.filesize_lowerbound_cliquecover(3, 8, 16, 4) == pytest.approx(3 / math.e)
    assert an.filesize_lowerbound_cliquecover(4, 8, 16, 4) == pytest.approx(16 / math.e)
    assert an.filesize_lowerbound_cliquecover(4, 4, 16, 4) == pytest.approx(32 / math.e)
    with pytest.raises(ValueError):
        an.filesize_lowerbound_cliquecover(2, 4, 16, 4)


def test_balls_in_bins_bound_holds():
    n = 100
    m = int(round(n * math.log(n)))
    bound = an.balls_in_bins_max_bound(m, n)
    rng = np.random.default_rng(17)
    fullest = np.array([np.bincount(rng.integers(0, n, m), minlength=n).max() for _ in range(1000)])
    assert np.mean(fullest <= bound) >= 0.99
    assert an.balls_in_bins_max_bound(7, 1) == 7


def test_modified_delivery_helpers():
    assert an.modified_delivery_target(9, 2) == pytest.approx(4.0)
    cond = an.modified_delivery_condition(8, 16, 8, 2)
    assert set(cond) == {'g_range', 'c_small', 'N_gt_K', 'exp_condition', 'all'}
    assert cond['N_gt_K'] and not cond['all']
    k_group, f_prime = an.grouped_modified_params(2, 16, 8)
    assert k_group == math.ceil(2 * 6 * math.log(2))
    assert f_prime == math.ceil(math.comb(k_group, 2) * math.log(math.comb(k_group, 2)) ** 2)


def test_deterministic_grouped_rate():
    assert an.deterministic_grouped_rate(32, 64, 16, 2) == 8
    assert an.deterministic_grouped_rate(8, 16, 4, 2) == 2
    assert isinstance(an.deterministic_grouped_rate(8, 16, 4, 2), Fraction)
    with pytest.raises(ValueError):
        an.deterministic_grouped_rate(12, 64, 16, 2)


def test_bound_report():
    rep = an.bound_report(8, 16, 4, 400, g=3, eps=0.1)
    assert rep.concentration_vacuous is True
    assert any('vacuous' in n for n in rep.notes)
    assert rep.uncoded_rate == 6
    assert rep.filesize_lowerbound == pytest.approx(an.filesize_lowerbound_cliquecover(3, 8, 16, 4))
    big = an.bound_report(8, 16, 4, 10 ** 6)
    assert big.concentration_vacuous is False and big.concentration_bound < 1
    assert 'rate_floor' in big.to_dict()
    assert an.bound_report(4, 4, 2, 10).rate_floor is None
