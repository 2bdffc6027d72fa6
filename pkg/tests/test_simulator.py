import math

import numpy as np
import pytest
from scipy import stats

from spolight.analysis import channel_fano, poisson_fano_stderr
from spolight.errors import ConfigError, DomainError
from spolight.simulator import (
    EventTimes,
    SimConfig,
    apply_detector,
    beam_split,
    bin_events,
    derive_seed,
    run_experiment,
    simulate_source,
    synthetic_source,
)


def test_zero_flux_empty():
    ev = simulate_source(0.0, 1.0, seed=1)
    assert len(ev) == 0 and ev.duration == 1e9


def test_source_count_and_determinism():
    a = simulate_source(2e5, 1.0, seed=11)
    b = simulate_source(2e5, 1.0, seed=11)
    np.testing.assert_array_equal(a.times, b.times)
    assert abs(len(a) - 200_000) <= 1342
    assert np.all(np.diff(a.times) >= 0) and a.times[0] >= 0 and a.times[-1] < a.duration


def test_source_interarrival_exponential():
    ev = simulate_source(2e5, 0.5, seed=3)
    gaps = np.diff(ev.times)
    assert stats.kstest(gaps, "expon", args=(0, 5000.0)).pvalue > 0.01


def test_source_validation():
    with pytest.raises(DomainError):
        simulate_source(-1.0, 1.0, 0)
    with pytest.raises(DomainError):
        simulate_source(1.0, 0.0, 0)


def test_event_times_validation():
    with pytest.raises(DomainError):
        EventTimes(np.array([2.0, 1.0]), 10.0)
    with pytest.raises(DomainError):
        EventTimes(np.array([10.0]), 10.0)


def test_detector_identity_and_empty():
    ev = simulate_source(1e5, 0.01, seed=5)
    same = apply_detector(ev, 1.0, 0.0, seed=9)
    np.testing.assert_array_equal(same.times, ev.times)
    assert len(apply_detector(ev, 0.0, 0.0, seed=9)) == 0


def test_dead_time_rule_by_hand():
    ev = EventTimes(np.array([0.0, 10.0, 60.0, 64.0, 100.0, 127.0, 128.0]), 1000.0)
    out = apply_detector(ev, 1.0, 64.0, seed=0)
    # 0 kept; 10, 60 inside; 64 kept (exactly tau after); 100, 127 inside; 128 kept
    np.testing.assert_array_equal(out.times, [0.0, 64.0, 128.0])


def test_dead_time_matches_sequential_reference():
    rng = np.random.default_rng(4)
    t = np.sort(rng.uniform(0, 5e4, 3000))
    out = apply_detector(EventTimes(t, 5e4), 1.0, 63.5, seed=0).times
    kept, last = [], -math.inf
    for v in t:
        if v - last >= 63.5:
            kept.append(v)
            last = v
    np.testing.assert_array_equal(out, kept)


def test_dead_time_subset():
    ev = simulate_source(2e6, 0.01, seed=8)
    out = apply_detector(ev, 0.6, 63.5, seed=2)
    assert np.all(np.isin(out.times, ev.times))
    assert np.all(np.diff(out.times) >= 63.5)


def test_dead_time_rate():
    rho, tau = 2e5, 63.5e-9
    ev = simulate_source(rho, 10.0, seed=21)
    out = apply_detector(ev, 1.0, 63.5, seed=22)
    expected = rho / (1 + rho * tau)
    assert abs(out.rate - expected) / expected < 0.003


def test_thinning_closure_chi_square():
    ev = simulate_source(2e5, 1.0, seed=31)
    thin = apply_detector(ev, 0.5, 0.0, seed=32)
    gaps = np.diff(thin.times)[:100_000]
    rate = 1e-9 * 1e5  # per ns
    edges = stats.expon.ppf(np.linspace(0, 1, 51), scale=1 / rate)
    observed, _ = np.histogram(gaps, bins=edges)
    expected = np.full(50, gaps.size / 50)
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_beam_split_partition():
    ev = simulate_source(1e6, 1.0, seed=1)
    a, b = beam_split(ev, 0.5, seed=2)
    assert len(a) + len(b) == len(ev)
    assert np.intersect1d(a.times, b.times).size == 0
    np.testing.assert_array_equal(np.sort(np.concatenate([a.times, b.times])), ev.times)
    all_, none = beam_split(ev, 1.0, seed=2)
    assert len(all_) == len(ev) and len(none) == 0


def test_beam_split_binomial():
    ev = EventTimes(np.arange(1_000_000, dtype=float), 1e6)
    a, _ = beam_split(ev, 0.5, seed=77)
    assert abs(len(a) - 500_000) <= 1500


def test_binning_rules():
    ev = EventTimes(np.array([25.0]), 100.0)
    counts = bin_events(ev, 12.5)
    assert counts.size == 8 and counts[2] == 1 and counts.sum() == 1
    ev = EventTimes(np.array([0.0, 12.4999, 12.5, 99.9]), 100.0)
    np.testing.assert_array_equal(bin_events(ev, 12.5), [2, 1, 0, 0, 0, 0, 0, 1])
    assert bin_events(EventTimes(np.array([]), 101.0), 12.5).size == 9


def test_bin_count_one_second():
    cfg = SimConfig(photon_flux=1e3, duration=1.0, dead_time=0.0)
    assert run_experiment(cfg).n_bins == 80_000_000


def test_conservation():
    ev = simulate_source(5e5, 0.1, seed=4)
    assert bin_events(ev, 12.5).sum() == len(ev)


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(topology="beam_splitter", split_ratio=1.0)
    with pytest.raises(ConfigError):
        SimConfig(topology="beam_splitter", split_ratio=0.0)
    with pytest.raises(ConfigError):
        SimConfig(topology="triangle")
    with pytest.raises(ConfigError):
        SimConfig(seed=-1)
    with pytest.raises(ConfigError):
        SimConfig(seed=2**64)
    with pytest.raises(ConfigError):
        SimConfig(bin_width=0)
    SimConfig(split_ratio=1.0)  # ignored without a splitter


def test_sub_seeds_distinct_and_stable():
    seeds = {derive_seed(7, k) for k in range(4)}
    assert len(seeds) == 4
    assert derive_seed(7, 0) == derive_seed(7, 0)
    assert derive_seed(7, 0) != derive_seed(8, 0)
    assert all(0 <= s < 2**64 for s in seeds)


def test_experiment_deterministic():
    cfg = SimConfig(duration=0.05, topology="beam_splitter", seed=123, quantum_efficiency=0.6)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.equals(b) and a.n_channels == 2
    c = run_experiment(SimConfig(duration=0.05, topology="beam_splitter", seed=124, quantum_efficiency=0.6))
    assert not a.equals(c)


def test_ideal_chain_is_poisson():
    cfg = SimConfig(duration=2.0, dead_time=0.0, seed=5)
    st = run_experiment(cfg)
    assert abs(channel_fano(st) - 1) < 3 * poisson_fano_stderr(st.n_bins)


def test_dead_time_makes_sub_poisson():
    st = run_experiment(SimConfig(duration=2.0, seed=5))
    assert (1 - channel_fano(st)) > 5 * poisson_fano_stderr(st.n_bins)


def test_synthetic_source_statistics():
    w = np.array([0.5, 0.2, 0.3])
    ev = synthetic_source(w, 200_000, 12.5, seed=3)
    counts = bin_events(ev, 12.5)
    assert counts.size == 200_000 and counts.max() <= 2
    freq = np.bincount(counts, minlength=3) / counts.size
    np.testing.assert_allclose(freq, w, atol=0.005)
