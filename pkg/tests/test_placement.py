import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from codedcaching import (InstanceError, SystemParams, UserGrouping, place_deterministic_grouped,
                          place_new, place_old)
from codedcaching.placement import colex_subsets


def test_old_full_caching():
    config = place_old(SystemParams(3, 4, 4, 6), 0)
    assert (config.store == 0b111).all()


def test_old_single_user_forced_quota():
    config = place_old(SystemParams(1, 2, 1, 2), 9)
    assert config.occupancy().tolist() == [[1, 1]]


def test_old_rejects_fractional_quota():
    with pytest.raises(InstanceError, match='integer'):
        place_old(SystemParams(2, 3, 1, 4), 0)


@given(K=st.integers(1, 6), N=st.integers(1, 6), data=st.data(), seed=st.integers(0, 2**63))
@settings(max_examples=40, deadline=None)
def test_old_exact_quota(K, N, data, seed):
    M = data.draw(st.integers(0, N))
    F = N * data.draw(st.integers(1, 4))
    config = place_old(SystemParams(K, N, M, F), seed)
    assert (config.occupancy() == M * F // N).all()


def test_old_marginal_probability():
    # K=4, N=8, M=2, F=8 over 10^4 seeds: Pr[packet in cache] = M/N
    params = SystemParams(4, 8, 2, 8)
    hits = np.zeros((4, 8, 8))
    n = 10_000
    for seed in range(n):
        s = place_old(params, seed).store
        hits += (s[None, :, :] >> np.arange(4, dtype=np.uint64)[:, None, None]) & np.uint64(1)
    freq = hits / n
    assert abs(freq.mean() - 0.25) <= 0.01
    # every (user, file, packet) cell on its own, 5 standard errors
    assert np.abs(freq - 0.25).max() <= 5 * math.sqrt(0.25 * 0.75 / n)


def test_reproducible():
    p = SystemParams.grouped(6, 12, 3, 20)
    assert place_new(p, 42) == place_new(p, 42)
    assert place_new(p, 42) != place_new(p, 43)
    q = SystemParams(6, 12, 3, 20)
    assert place_old(q, 42) == place_old(q, 42)


def test_new_singleton_group():
    config = place_new(SystemParams.grouped(5, 3, 3, 7), 1)
    assert (config.store == 0b11111).all()


def test_new_requires_grouped_params():
    with pytest.raises(InstanceError):
        place_new(SystemParams(8, 16, 4, 400), 0)
    with pytest.raises(InstanceError):
        SystemParams.grouped(8, 16, 0, 4)


@given(K=st.integers(1, 8), N=st.integers(1, 12), data=st.data(), seed=st.integers(0, 2**63))
@settings(max_examples=40, deadline=None)
def test_new_one_packet_per_group(K, N, data, seed):
    M = data.draw(st.integers(1, N))
    Fp = data.draw(st.integers(1, 6))
    params = SystemParams.grouped(K, N, M, Fp)
    config = place_new(params, seed)
    c = params.group_size
    for k in range(K):
        held = (config.store >> np.uint64(k)) & np.uint64(1)
        assert (held.reshape(N, Fp, c).sum(axis=2) == 1).all()
    assert (config.occupancy() == Fp).all()


def test_new_quota_example():
    config = place_new(SystemParams.grouped(8, 16, 4, 100), 5)
    assert (config.occupancy() == 100).all()


def test_new_exact_set_probability():
    # Pr[packet stored at exactly S] = (1/4)^s (3/4)^(8-s), checked for S = {0..s-1}
    params = SystemParams.grouped(8, 16, 4, 10_000)
    store = place_new(params, 2024).store.ravel()
    n = store.size
    for s in range(0, 9):
        target = np.uint64((1 << s) - 1)
        p = 0.25 ** s * 0.75 ** (8 - s)
        freq = np.count_nonzero(store == target) / n
        assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n) + 1e-12, s


def test_new_groups_independent():
    # chi-square test of independence between the picks in consecutive groups
    from scipy.stats import chi2_contingency
    params = SystemParams.grouped(1, 4, 1, 20_000)
    held = place_new(params, 77).store.reshape(4, 10_000, 2, 4) == 1
    pick = held.argmax(axis=3)
    table = np.zeros((4, 4))
    np.add.at(table, (pick[:, :, 0].ravel(), pick[:, :, 1].ravel()), 1)
    assert chi2_contingency(table).pvalue > 0.001


def test_colex_order():
    assert colex_subsets(4, 2) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]


def test_deterministic_example_g2():
    # ceil(N/M)=4, g=2 -> K'=8, F=28, each user stores N*C(7,1)/28 = N/4 files
    params = SystemParams(8, 16, 4, 28)
    config, grouping = place_deterministic_grouped(params, 2)
    assert grouping.group_size == 8 and grouping.n_groups == 1
    assert (config.occupancy() == 7).all()
    assert config.occupancy().sum(axis=1)[0] / 28 == 16 / 4
    assert (config.level_counts() == 2).all()


def test_deterministic_degenerate_single_user():
    config, grouping = place_deterministic_grouped(SystemParams(1, 2, 2, 1), 1)
    assert grouping.group_size == 1
    assert (config.store == 1).all()


def test_deterministic_grouping_contiguous():
    params = SystemParams(16, 16, 4, 28)
    config, grouping = place_deterministic_grouped(params, 2)
    assert grouping.assignment == (0,) * 8 + (1,) * 8
    masks = config.store.astype(object)
    for m in masks.ravel():
        lo, hi = int(m) & 0xFF, int(m) >> 8
        # same subset inside each group, size g per group
        assert lo.bit_count() == 2 and lo == hi


def test_deterministic_mismatch():
    with pytest.raises(InstanceError):
        place_deterministic_grouped(SystemParams(12, 16, 4, 28), 2)
    with pytest.raises(InstanceError):
        place_deterministic_grouped(SystemParams(8, 16, 4, 27), 2)


def test_grouping_requires_divisor():
    with pytest.raises(InstanceError):
        UserGrouping(10, 4)
    assert list(UserGrouping(6, 3).members(1)) == [3, 4, 5]
