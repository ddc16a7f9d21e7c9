"""Monte Carlo campaigns for the transformed coverage statistic and their reports."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .geometry import DomainPair, region_from_dict
from .knn import coverage_threshold
from .limits import (
    CdfModel,
    Setting,
    beta_grid,
    corrected_cdf,
    empirical,
    limit_cdf,
    median_shift,
    transform_statistic,
)
from .sampler import m_of_n, mix, sample_binomial, sample_poisson

__all__ = [
    "ExperimentConfig",
    "Report",
    "run_campaign",
    "run_all",
    "ks_distance",
    "median_recenter",
    "emit",
    "read_curves",
    "read_samples",
]

_MODES = ("binomial", "poisson")


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainPair
    k: int = 1
    tau: float = 1.0
    mode: str = "binomial"
    n_values: tuple[float, ...] = (10_000,)
    replicates: int = 1000
    seed: int = 0
    beta_grid: tuple[float, float, float] = (-5.0, 10.0, 0.01)
    output_dir: str = "out"
    publication: bool = False
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.publication and self.replicates < 100:
            raise ValueError("publication reports need at least 100 replicates")
        lo, hi, step = self.beta_grid
        if not step > 0 or hi < lo:
            raise ValueError("beta_grid needs step > 0 and max >= min")
        if not self.n_values:
            raise ValueError("n_values must be non-empty")
        for n in self.n_values:
            if n <= math.e:
                raise ValueError(f"n = {n} too small: the centering needs log log n")
            if self.mode == "binomial" and (n != int(n) or m_of_n(int(n), self.tau) < 1):
                raise ValueError(f"binomial mode needs integer n with floor(tau n) >= 1, got n = {n}")

    @property
    def setting(self) -> Setting:
        return Setting.from_domain(self.domain, self.k, self.tau)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        dom = d["domain"]
        A = region_from_dict(dom["A"])
        B = region_from_dict(dom["B"]) if dom.get("B") else None
        grid = d.get("beta_grid", [-5.0, 10.0, 0.01])
        if isinstance(grid, dict):
            grid = [grid["min"], grid["max"], grid["step"]]
        mode = d.get("mode", "binomial")
        nv = d.get("n_values", d.get("t_values", [10_000]))
        nv = tuple(int(v) if mode == "binomial" else float(v) for v in nv)
        return cls(
            domain=DomainPair(A, B),
            k=int(d.get("k", 1)),
            tau=float(d.get("tau", 1.0)),
            mode=mode,
            n_values=nv,
            replicates=int(d.get("replicates", 1000)),
            seed=int(d.get("seed", 0)),
            beta_grid=tuple(float(v) for v in grid),
            output_dir=str(d.get("output_dir", "out")),
            publication=bool(d.get("publication", False)),
            raw=dict(d),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        return {
            "domain": self.domain.to_dict(),
            "k": self.k,
            "tau": self.tau,
            "mode": self.mode,
            "n_values": list(self.n_values),
            "replicates": self.replicates,
            "seed": self.seed,
            "beta_grid": list(self.beta_grid),
            "output_dir": self.output_dir,
            "publication": self.publication,
        }


@dataclass
class Report:
    n_or_t: float
    samples: np.ndarray  # sorted transformed statistics, +inf for failed replicates
    ecdf: CdfModel
    limit: CdfModel
    corrected: CdfModel | None
    grid: np.ndarray
    curves: np.ndarray  # columns beta, empirical, limit, corrected
    ks_limit: float
    ks_corrected: float
    median_sample: float
    runtime_stats: dict[str, float]
    failed: int
    config: ExperimentConfig
    recentered: bool = False


# ---------------------------------------------------------------------------
# replicate execution

_WORKER_STATE: dict[str, Any] = {}


def _init_worker(config: ExperimentConfig, n_or_t: float) -> None:
    _WORKER_STATE["config"] = config
    _WORKER_STATE["n"] = n_or_t


def _replicate_block(bounds: tuple[int, int]) -> tuple[int, np.ndarray, float, float]:
    cfg: ExperimentConfig = _WORKER_STATE["config"]
    n = _WORKER_STATE["n"]
    setting = cfg.setting
    pair = cfg.domain
    out = np.empty(bounds[1] - bounds[0])
    t_sample = t_knn = 0.0
    for j, i in enumerate(range(*bounds)):
        token = mix(cfg.seed, i)
        t0 = time.perf_counter()
        if cfg.mode == "binomial":
            pts = sample_binomial(pair, int(n), m_of_n(int(n), cfg.tau), token)
        else:
            pts = sample_poisson(pair, n, cfg.tau * n, token)
        t1 = time.perf_counter()
        R = coverage_threshold(pts, pair.A, cfg.k)
        t2 = time.perf_counter()
        out[j] = math.inf if math.isinf(R) else transform_statistic(R, n, setting)
        t_sample += t1 - t0
        t_knn += t2 - t1
    return bounds[0], out, t_sample, t_knn


def _simulate(config: ExperimentConfig, n_or_t: float, workers: int) -> tuple[np.ndarray, dict[str, float]]:
    N = config.replicates
    T = np.empty(N)
    stats = {"sampling_s": 0.0, "threshold_s": 0.0}
    if workers <= 1:
        _init_worker(config, n_or_t)
        blocks = [(0, N)]
        results = map(_replicate_block, blocks)
        for start, vals, ts, tk in results:
            T[start : start + len(vals)] = vals
            stats["sampling_s"] += ts
            stats["threshold_s"] += tk
        return T, stats
    size = max(1, min(256, N // (4 * workers) or 1))
    blocks = [(s, min(s + size, N)) for s in range(0, N, size)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(config, n_or_t)) as ex:
        for start, vals, ts, tk in ex.map(_replicate_block, blocks):
            T[start : start + len(vals)] = vals
            stats["sampling_s"] += ts
            stats["threshold_s"] += tk
    return T, stats


# ---------------------------------------------------------------------------
# comparison


def ks_distance(samples, model: CdfModel) -> float:
    """sup_x |F(x) - F_N(x)|, including the gap at +infinity when some samples are infinite."""
    s = np.sort(np.asarray(samples, dtype=float))
    N = s.size
    if N == 0:
        raise ValueError("ks_distance needs at least one sample")
    fin = s[np.isfinite(s)]
    if fin.size == 0:
        return float(abs(model.upper))
    xs, first = np.unique(fin, return_index=True)
    counts = np.diff(np.append(first, fin.size))
    hi = (first + counts) / N
    lo = first / N
    F = np.asarray(model(xs), dtype=float)
    Fl = np.asarray(model.left(xs), dtype=float)
    d = max(float(np.max(np.abs(F - hi))), float(np.max(np.abs(Fl - lo))))
    tail = abs(model.upper - fin.size / N)
    return float(min(max(d, tail), 1.0))


def _median(samples: np.ndarray) -> float:
    return float(np.median(samples))


def _assemble(config: ExperimentConfig, n_or_t: float, T: np.ndarray, stats: dict[str, float]) -> Report:
    setting = config.setting
    if config.mode == "binomial":
        setting = setting.with_n(int(n_or_t))
    samples = np.sort(T)
    ecdf = empirical(samples)
    lim = limit_cdf(setting)
    try:
        cor = corrected_cdf(setting, n_or_t)
    except ValueError:
        cor = None
    grid = beta_grid(*config.beta_grid)
    return _build_report(config, n_or_t, samples, ecdf, lim, cor, grid, stats, int(np.isinf(samples).sum()))


def _build_report(config, n_or_t, samples, ecdf, lim, cor, grid, stats, failed, recentered=False) -> Report:
    cols = [grid, ecdf(grid), lim(grid), cor(grid) if cor is not None else np.full(grid.size, np.nan)]
    return Report(
        n_or_t=n_or_t,
        samples=samples,
        ecdf=ecdf,
        limit=lim,
        corrected=cor,
        grid=grid,
        curves=np.column_stack(cols),
        ks_limit=ks_distance(samples, lim),
        ks_corrected=ks_distance(samples, cor) if cor is not None else math.nan,
        median_sample=_median(samples),
        runtime_stats=stats,
        failed=failed,
        config=config,
        recentered=recentered,
    )


def run_campaign(config: ExperimentConfig, n_or_t: float | None = None, workers: int = 1) -> Report:
    """Simulate ``config.replicates`` thresholds at one sample size and compare with the models.

    Replicate i is seeded with mix(seed, i), so the result does not depend on ``workers``.
    """
    n = config.n_values[0] if n_or_t is None else n_or_t
    t0 = time.perf_counter()
    T, stats = _simulate(config, n, workers)
    stats["wall_s"] = time.perf_counter() - t0
    stats["workers"] = float(workers)
    return _assemble(config, n, T, stats)


def run_all(config: ExperimentConfig, workers: int = 1) -> list[Report]:
    return [run_campaign(config, n, workers) for n in config.n_values]


def median_recenter(report: Report) -> Report:
    """Translate samples and models so that every curve passes through (0, 1/2)."""
    if report.samples.size < 2:
        raise ValueError("median_recenter needs at least two samples")
    med = report.median_sample
    samples = report.samples - med
    lim = report.limit.shifted(median_shift(report.limit))
    cor = report.corrected.shifted(median_shift(report.corrected)) if report.corrected is not None else None
    return _build_report(
        report.config,
        report.n_or_t,
        samples,
        empirical(samples),
        lim,
        cor,
        report.grid,
        dict(report.runtime_stats),
        report.failed,
        recentered=True,
    )


# ---------------------------------------------------------------------------
# output


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


_GNUPLOT = """set datafile separator ','
set key bottom right
set xlabel 'beta'
set ylabel 'probability'
plot 'curves.csv' using 1:2 with steps title 'empirical', \\
     '' using 1:3 with lines dashtype 2 title 'limit', \\
     '' using 1:4 with lines dashtype 3 title 'corrected'
"""


def emit(report: Report, directory: str | Path, gnuplot: bool = True) -> list[Path]:
    """Write curves.csv, samples.csv, meta.json (and plot.gp) into ``directory``."""
    from . import __version__

    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "curves.csv", out / "samples.csv", out / "meta.json"]
        with open(paths[0], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["beta", "empirical", "limit", "corrected"])
            for row in report.curves:
                w.writerow([_fmt(v) for v in row])
        with open(paths[1], "w") as fh:
            fh.writelines(_fmt(v) + "\n" for v in report.samples)
        meta = {
            "config": report.config.raw or report.config.to_dict(),
            "resolved_config": report.config.to_dict(),
            "seed": report.config.seed,
            "n_or_t": report.n_or_t,
            "version": __version__,
            "setting": report.config.setting.to_dict(),
            "runtime": report.runtime_stats,
            "ks_limit": report.ks_limit,
            "ks_corrected": None if math.isnan(report.ks_corrected) else report.ks_corrected,
            "median_sample": _fmt(report.median_sample),
            "failed_replicates": report.failed,
            "replicates": int(report.samples.size),
            "recentered": report.recentered,
        }
        with open(paths[2], "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
        if gnuplot:
            paths.append(out / "plot.gp")
            paths[-1].write_text(_GNUPLOT)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return paths


def read_curves(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r] for r in rows[1:]])


def read_samples(path: str | Path) -> np.ndarray:
    with open(path) as fh:
        return np.array([float(line) for line in fh if line.strip()])
