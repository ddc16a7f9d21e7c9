from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from covlab.geometry import Disk, DomainPair, Square, Torus
from covlab.sampler import (
    MASK64,
    ProcessPair,
    m_of_n,
    make_rng,
    mix,
    poisson_count,
    sample_binomial,
    sample_poisson,
)

SQUARE = DomainPair(Square(side=1.0))


def test_mix_matches_reference_splitmix_stream():
    # published SplitMix64 outputs for state 0
    assert mix(0, 0) == 0xE220A8397B1DCDAF
    assert mix(0, 1) == 0x6E789E6AA1B965F4
    assert mix(0, 2) == 0x06C45D188009454F


@given(st.integers(0, MASK64), st.integers(0, 10**9))
def test_mix_is_64_bit_and_deterministic(seed, i):
    v = mix(seed, i)
    assert 0 <= v <= MASK64
    assert v == mix(seed, i)


def test_mix_distinct_over_replicates():
    toks = {mix(2024, i) for i in range(100_000)}
    assert len(toks) == 100_000


def test_philox_stream_is_pinned():
    # frozen from the Philox-4x64 counter stream; guards against silent generator swaps
    assert make_rng(mix(1, 0)).random(3).tolist() == [0.5196633209999437, 0.3592168547114034, 0.9771480698147412]
    assert make_rng(5).bit_generator.state["bit_generator"] == "Philox"


def test_poisson_algorithm_is_pinned():
    rng = make_rng(mix(1, 0))
    assert [poisson_count(rng, 5.0) for _ in range(5)] == [5, 4, 10, 3, 1]
    assert [poisson_count(rng, 100.0) for _ in range(5)] == [98, 108, 99, 90, 117]


def test_replicate_streams_uncorrelated():
    a = np.array([make_rng(mix(9, i)).random(2000) for i in range(0, 200, 2)])
    b = np.array([make_rng(mix(9, i)).random(2000) for i in range(1, 200, 2)])
    corr = [np.corrcoef(x, y)[0, 1] for x, y in zip(a, b)]
    # each correlation ~ N(0, 1/2000); 100 of them
    assert max(abs(c) for c in corr) < 5 / math.sqrt(2000)
    assert abs(np.mean(corr)) < 4 / math.sqrt(2000 * 100)


@pytest.mark.parametrize("lam", [0.3, 5.0, 29.5, 30.0, 50.0, 1000.0, 1e5])
def test_poisson_count_moments(lam):
    rng = make_rng(mix(77, int(lam * 10)))
    n = 40_000
    draws = np.array([poisson_count(rng, lam) for _ in range(n)])
    assert abs(draws.mean() - lam) <= 4 * math.sqrt(lam / n)
    # variance of the sample variance ~ (2 lam^2 + lam) / n
    assert abs(draws.var(ddof=1) - lam) <= 4 * math.sqrt((2 * lam * lam + lam) / n)


@pytest.mark.parametrize("lam", [5.0, 50.0])
def test_poisson_count_chi_square(lam):
    rng = make_rng(mix(3, int(lam)))
    draws = np.array([poisson_count(rng, lam) for _ in range(50_000)])
    lo, hi = int(stats.poisson.ppf(1e-3, lam)), int(stats.poisson.ppf(1 - 1e-3, lam))
    obs = np.bincount(np.clip(draws, lo, hi) - lo, minlength=hi - lo + 1)
    probs = stats.poisson.pmf(np.arange(lo, hi + 1), lam)
    probs[0] += stats.poisson.cdf(lo - 1, lam)
    probs[-1] += stats.poisson.sf(hi, lam)
    assert stats.chisquare(obs, probs * len(draws)).pvalue > 1e-3


def test_poisson_count_edge_cases():
    rng = make_rng(1)
    assert poisson_count(rng, 0.0) == 0
    with pytest.raises(ValueError):
        poisson_count(rng, -1.0)


def test_m_of_n():
    assert m_of_n(10_000, 1.0) == 10_000
    assert m_of_n(10, 0.35) == 3
    assert m_of_n(7, 100.0) == 700


def test_binomial_deterministic():
    a = sample_binomial(SQUARE, 3, 2, seed=42)
    b = sample_binomial(SQUARE, 3, 2, seed=42)
    assert a.xs.tobytes() == b.xs.tobytes() and a.ys.tobytes() == b.ys.tobytes()
    assert a.xs.shape == (3, 2) and a.ys.shape == (2, 2)
    c = sample_binomial(SQUARE, 3, 2, seed=43)
    assert c.xs.tobytes() != a.xs.tobytes()


def test_binomial_containment():
    pair = DomainPair(Disk(radius=1.0), Disk(radius=0.9))
    pp = sample_binomial(pair, 10_000, 10_000, seed=1)
    assert np.all(np.linalg.norm(pp.ys, axis=1) <= 0.9)
    assert np.all(np.linalg.norm(pp.xs, axis=1) <= 1.0)
    assert np.any(np.linalg.norm(pp.xs, axis=1) > 0.9)


def test_binomial_left_half_count():
    counts = [np.sum(sample_binomial(SQUARE, 100, 1, seed=mix(5, i)).xs[:, 0] < 0.5) for i in range(1000)]
    assert abs(np.mean(counts) - 50) <= 3 * math.sqrt(25 / 1000)


def test_binomial_rejects_empty():
    with pytest.raises(ValueError):
        sample_binomial(SQUARE, 0, 5, seed=1)
    with pytest.raises(ValueError):
        sample_binomial(SQUARE, 5, 0, seed=1)


def test_poisson_counts_mean_variance_and_independence():
    nx, ny = [], []
    for i in range(10_000):
        pp = sample_poisson(SQUARE, 50.0, 50.0, seed=mix(11, i))
        nx.append(len(pp.xs))
        ny.append(len(pp.ys))
    nx, ny = np.array(nx), np.array(ny)
    assert abs(nx.mean() - 50) <= 3 * math.sqrt(50 / 1e4)
    assert abs(ny.var(ddof=1) - 50) <= 4 * math.sqrt((2 * 2500 + 50) / 1e4)
    assert abs(np.corrcoef(nx, ny)[0, 1]) <= 0.03


def test_poisson_thinning():
    # count of X in the left fifth of the square is Poisson(t / 5)
    t = 40.0
    counts = np.array([np.sum(sample_poisson(SQUARE, t, 1.0, seed=mix(13, i)).xs[:, 0] < 0.2) for i in range(5000)])
    lam = t / 5
    top = int(stats.poisson.ppf(0.999, lam))
    obs = np.bincount(np.minimum(counts, top), minlength=top + 1)
    probs = stats.poisson.pmf(np.arange(top + 1), lam)
    probs[-1] += stats.poisson.sf(top, lam)
    assert stats.chisquare(obs, probs * len(counts)).pvalue > 1e-3


def test_poisson_allows_empty_and_rejects_bad_intensity():
    sizes = {len(sample_poisson(SQUARE, 0.5, 0.5, seed=mix(2, i)).ys) for i in range(100)}
    assert 0 in sizes
    with pytest.raises(ValueError):
        sample_poisson(SQUARE, 0.0, 1.0, seed=1)
    with pytest.raises(ValueError):
        sample_poisson(SQUARE, 1.0, -2.0, seed=1)


def test_process_pair_csv_round_trip(tmp_path):
    pp = sample_binomial(DomainPair(Torus(d=3, side=2.0)), 17, 5, seed=8)
    path = tmp_path / "pp.csv"
    pp.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "role,coord_1,coord_2,coord_3"
    back = ProcessPair.from_csv(path)
    assert back.xs.tobytes() == pp.xs.tobytes()
    assert back.ys.tobytes() == pp.ys.tobytes()
