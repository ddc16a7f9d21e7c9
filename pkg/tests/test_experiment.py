from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covlab.experiment import (
    ExperimentConfig,
    emit,
    ks_distance,
    median_recenter,
    read_curves,
    read_samples,
    run_all,
    run_campaign,
)
from covlab.geometry import Disk, DomainPair, Square, Torus
from covlab.knn import coverage_threshold
from covlab.limits import beta_grid, empirical, gumbel, transform_statistic
from covlab.sampler import mix, sample_binomial, sample_poisson

TORUS = DomainPair(Torus(d=2, side=1.0))
DISK = DomainPair(Disk(radius=1.0))


def small(**kw):
    base = dict(domain=DISK, k=1, tau=1.0, mode="binomial", n_values=(2000,), replicates=40, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


# -- configuration --------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        small(publication=True, replicates=99)
    small(publication=True, replicates=100)
    with pytest.raises(ValueError):
        small(beta_grid=(-5.0, 10.0, 0.0))
    with pytest.raises(ValueError):
        small(mode="hybrid")
    with pytest.raises(ValueError):
        small(n_values=(2,))
    with pytest.raises(ValueError):
        small(tau=0.001, n_values=(100,))


def test_config_json_round_trip(tmp_path):
    raw = {
        "domain": {"A": {"kind": "disk", "radius": 1.0}, "B": {"kind": "disk", "radius": 0.5}},
        "k": 2,
        "tau": 0.5,
        "mode": "poisson",
        "t_values": [1000, 5000],
        "replicates": 10,
        "seed": 3,
        "beta_grid": {"min": -2, "max": 4, "step": 0.5},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.n_values == (1000.0, 5000.0) and cfg.domain.interior_flag
    assert cfg.setting.regime == "interior"
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


# -- campaigns ------------------------------------------------------------------------------

def test_replicate_matches_direct_pipeline():
    cfg = small(replicates=5)
    rep = run_campaign(cfg)
    direct = []
    for i in range(5):
        pp = sample_binomial(DISK, 2000, 2000, mix(cfg.seed, i))
        direct.append(transform_statistic(coverage_threshold(pp, DISK.A, 1), 2000, cfg.setting))
    assert rep.samples.tolist() == sorted(direct)


def test_poisson_replicate_matches_direct_pipeline():
    cfg = small(mode="poisson", n_values=(1500.0,), replicates=5, tau=2.0)
    rep = run_campaign(cfg)
    direct = []
    for i in range(5):
        pp = sample_poisson(DISK, 1500.0, 3000.0, mix(cfg.seed, i))
        direct.append(transform_statistic(coverage_threshold(pp, DISK.A, 1), 1500.0, cfg.setting))
    assert rep.samples.tolist() == sorted(direct)


def test_determinism_repeat():
    a = run_campaign(small(replicates=2))
    b = run_campaign(small(replicates=2))
    assert a.samples.tobytes() == b.samples.tobytes()
    assert np.array_equal(a.curves, b.curves)
    assert a.ks_limit == b.ks_limit and a.ks_corrected == b.ks_corrected


def test_determinism_across_workers(tmp_path):
    cfg = small(replicates=48, n_values=(1000,), domain=DomainPair(Square(side=1.0)), k=2)
    blobs = []
    for w in (1, 4, 16):
        rep = run_campaign(cfg, workers=w)
        emit(rep, tmp_path / f"w{w}")
        blobs.append((tmp_path / f"w{w}" / "samples.csv").read_bytes())
        assert rep.curves.tobytes() == run_campaign(cfg).curves.tobytes()
    assert blobs[0] == blobs[1] == blobs[2]


def test_report_invariants():
    rep = run_campaign(small(replicates=60))
    N = rep.samples.size
    assert np.all(np.diff(rep.samples) >= 0)
    assert np.allclose(rep.ecdf(rep.samples[np.r_[0:N]]), (np.searchsorted(rep.samples, rep.samples, "right")) / N)
    for col in (1, 2, 3):
        assert np.all(np.diff(rep.curves[:, col]) >= 0)
    assert 0 <= rep.ks_limit <= 1 and 0 <= rep.ks_corrected <= 1
    assert rep.curves.shape == (beta_grid().size, 4)
    assert rep.median_sample == float(np.median(rep.samples))
    assert {"wall_s", "sampling_s", "threshold_s"} <= set(rep.runtime_stats)


def test_torus_k1_correction_vanishes():
    rep = run_campaign(ExperimentConfig(TORUS, k=1, tau=1.0, n_values=(10_000,), replicates=300, seed=8))
    assert rep.ks_corrected == pytest.approx(rep.ks_limit, abs=1e-12)


def test_failed_replicates_are_infinite_and_counted():
    cfg = ExperimentConfig(DISK, k=30, tau=1.0, mode="poisson", n_values=(20.0,), replicates=200, seed=4)
    rep = run_campaign(cfg)
    assert rep.failed == int(np.sum(np.isinf(rep.samples))) and rep.failed > 100
    assert rep.curves[-1, 1] == pytest.approx(1 - rep.failed / 200)
    assert rep.ecdf.upper == pytest.approx(1 - rep.failed / 200)
    assert rep.ks_limit >= rep.failed / 200 - 1e-12
    assert 0 <= rep.ks_corrected <= 1


def test_corrected_law_absent_below_e_to_the_e():
    rep = run_campaign(ExperimentConfig(DISK, k=1, tau=1.0, mode="poisson", n_values=(12.0,), replicates=20, seed=4))
    assert rep.corrected is None and math.isnan(rep.ks_corrected)
    assert np.all(np.isnan(rep.curves[:, 3]))


def test_run_all_per_n():
    reps = run_all(small(n_values=(500, 1000), replicates=5))
    assert [r.n_or_t for r in reps] == [500, 1000]


# -- KS distance ----------------------------------------------------------------------------

def test_ks_inverse_cdf_grid():
    N = 1000
    u = (np.arange(N) + 0.5) / N
    samples = -np.log(-np.log(u))
    assert ks_distance(samples, gumbel(0.0, 1.0)) <= 1 / N


def test_ks_single_sample_at_median():
    g = gumbel(0.0, 1.0)
    assert ks_distance([-math.log(math.log(2))], g) == pytest.approx(0.5, abs=1e-12)


def test_ks_gumbel_draws_below_critical_value():
    rng = np.random.default_rng(2718)
    N = 10_000
    g = gumbel(0.0, 1.0)
    hits = sum(ks_distance(rng.gumbel(0.0, 1.0, N), g) < 1.63 / math.sqrt(N) for _ in range(100))
    assert hits >= 95


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=200))
def test_ks_of_own_ecdf_is_zero(xs):
    assert ks_distance(xs, empirical(xs)) == 0.0


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=100), st.floats(-3, 3), st.floats(0.3, 3))
def test_ks_bounds_and_brute_force(xs, xi, theta):
    g = gumbel(xi, theta)
    s = np.sort(np.array(xs))
    N = s.size
    F = g(s)
    ranks_hi = np.searchsorted(s, s, "right") / N
    ranks_lo = np.searchsorted(s, s, "left") / N
    ref = max(np.max(np.abs(F - ranks_hi)), np.max(np.abs(F - ranks_lo)))
    got = ks_distance(xs, g)
    assert 0 <= got <= 1
    assert got == pytest.approx(ref, abs=1e-15)


def test_ks_rejects_empty():
    with pytest.raises(ValueError):
        ks_distance([], gumbel(0, 1))


# -- recentering ----------------------------------------------------------------------------

def test_median_recenter_passes_through_half():
    rep = median_recenter(run_campaign(small(replicates=101)))
    assert rep.median_sample == 0.0
    i0 = int(np.argmin(np.abs(rep.grid)))
    step = rep.grid[1] - rep.grid[0]
    for col in (2, 3):
        assert abs(rep.curves[i0, col] - 0.5) <= 0.5 * step
    assert rep.ecdf.left(0.0) <= 0.5 <= rep.ecdf(0.0)
    assert rep.recentered


def test_median_recenter_idempotent_and_translation_invariant():
    rep = run_campaign(small(replicates=31))
    once = median_recenter(rep)
    twice = median_recenter(once)
    np.testing.assert_allclose(twice.samples, once.samples, atol=1e-12)
    np.testing.assert_allclose(twice.curves, once.curves, atol=1e-9)
    moved = rep.__class__(**{**rep.__dict__, "samples": rep.samples + 2.5, "median_sample": rep.median_sample + 2.5})
    np.testing.assert_allclose(median_recenter(moved).samples, once.samples, atol=1e-12)
    with pytest.raises(ValueError):
        median_recenter(rep.__class__(**{**rep.__dict__, "samples": rep.samples[:1]}))


# -- emission -------------------------------------------------------------------------------

def test_emit_round_trip(tmp_path):
    cfg = small(replicates=30, beta_grid=(-3.0, 6.0, 0.05))
    rep = run_campaign(cfg)
    paths = emit(rep, tmp_path / "out")
    assert {p.name for p in paths} == {"curves.csv", "samples.csv", "meta.json", "plot.gp"}
    curves = read_curves(tmp_path / "out" / "curves.csv")
    assert np.array_equal(curves, rep.curves)
    assert len(curves) == beta_grid(-3.0, 6.0, 0.05).size
    assert np.array_equal(read_samples(tmp_path / "out" / "samples.csv"), rep.samples)
    meta = json.loads((tmp_path / "out" / "meta.json").read_text())
    assert meta["resolved_config"] == json.loads(json.dumps(cfg.to_dict()))
    assert meta["seed"] == 5 and meta["failed_replicates"] == 0 and meta["ks_limit"] == rep.ks_limit
    assert "version" in meta and "runtime" in meta


def test_emit_echoes_raw_config(tmp_path):
    raw = {"domain": {"A": {"kind": "square", "side": 1.0}}, "k": 1, "n_values": [500], "replicates": 3, "note": "x"}
    cfg = ExperimentConfig.from_dict(raw)
    emit(run_campaign(cfg), tmp_path)
    assert json.loads((tmp_path / "meta.json").read_text())["config"] == raw


def test_emit_io_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit(run_campaign(small(replicates=2)), blocker / "sub")
