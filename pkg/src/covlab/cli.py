"""Command-line entry point: ``python -m covlab <command>``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .analytic import VacancyQuery, gamma_mc, gamma_quadrature, lemexp_check, moat_bulk_expansion
from .experiment import ExperimentConfig, emit, run_campaign
from .limits import beta_grid, corrected_cdf, limit_cdf, r_t

log = logging.getLogger("covlab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _load(path: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_json(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc


def _writer(out: str | None):
    if out is None:
        return sys.stdout, False
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    return open(out, "w", newline=""), True


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    base = Path(args.out or cfg.output_dir)
    for n in cfg.n_values:
        rep = run_campaign(cfg, n, workers=args.threads)
        target = base if len(cfg.n_values) == 1 else base / f"n{n:g}"
        emit(rep, target)
        print(
            f"n={n:g} replicates={rep.samples.size} failed={rep.failed} "
            f"ks_limit={rep.ks_limit:.4f} ks_corrected={rep.ks_corrected:.4f} -> {target}"
        )
    return EXIT_OK


def cmd_gamma(args) -> int:
    cfg = _load(args.config)
    betas = [float(b) for b in cfg.raw.get("betas", [-1.0, 0.0, 2.0])]
    samples = int(args.mc_samples or cfg.raw.get("mc_samples", 100_000))
    setting = cfg.setting
    fh, close = _writer(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["t", "beta", "gamma_quadrature", "gamma_mc", "mc_stderr", "expansion", "predicted_probability"])
        for t in cfg.n_values:
            for b in betas:
                r = r_t(b, t, setting)
                q = VacancyQuery(cfg.domain, float(t), r, cfg.k)
                try:
                    gq = gamma_quadrature(q)
                except ValueError:
                    gq = math.nan
                gm, se = gamma_mc(q, samples, cfg.seed)
                ex = moat_bulk_expansion(setting, t, b, b_volume=cfg.domain.B.volume) / cfg.domain.B.volume
                g = gm if math.isnan(gq) else gq
                tau = setting.tau if cfg.mode == "poisson" else math.floor(setting.tau * t) / t
                w.writerow([repr(float(t)), repr(b), repr(gq), repr(gm), repr(se), repr(ex), repr(math.exp(-tau * g))])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, fac = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--s-grid must look like lo:hi:factor, got {text!r}") from exc
    if lo <= 1 or hi < lo or fac <= 1:
        raise ConfigError("--s-grid needs 1 < lo <= hi and factor > 1")
    out = []
    s = lo
    while s <= hi * (1 + 1e-12):
        out.append(s)
        s *= fac
    return np.array(out)


def cmd_check_lemexp(args) -> int:
    grid = _parse_grid(args.s_grid)
    if args.alpha0 <= 0 or args.ell < 0 or args.d < 2:
        raise ConfigError("need alpha0 > 0, ell >= 0, d >= 2")
    fh, close = _writer(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["s", "lhs", "rhs", "residual"])
        res = []
        for s in grid:
            lhs, rhs, r = lemexp_check(float(s), args.alpha0, args.ell, args.d, args.variant)
            res.append(abs(r))
            w.writerow([repr(float(s)), repr(lhs), repr(rhs), repr(r)])
    finally:
        if close:
            fh.close()
    if len(grid) >= 2 and all(v > 0 for v in res):
        slope = np.polyfit(np.log(grid), np.log(res), 1)[0]
        print(f"# log-log slope of |residual|: {slope:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_curves(args) -> int:
    cfg = _load(args.config)
    grid = beta_grid(*cfg.beta_grid)
    fh, close = _writer(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["n", "beta", "limit", "corrected"])
        for n in cfg.n_values:
            s = cfg.setting.with_n(int(n)) if cfg.mode == "binomial" else cfg.setting
            lim = limit_cdf(s)(grid)
            cor = corrected_cdf(s, n)(grid)
            for b, fl, fc in zip(grid, lim, cor):
                w.writerow([f"{n:g}", repr(float(b)), repr(float(fl)), repr(float(fc))])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a Monte Carlo campaign and write its report")
    s.add_argument("--config", required=True)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gamma", help="vacancy expectations as CSV")
    g.add_argument("--config", required=True)
    g.add_argument("--mc-samples", type=int, default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gamma)

    c = sub.add_parser("check-lemexp", help="integral asymptotics residual table")
    c.add_argument("--ell", type=int, required=True)
    c.add_argument("--alpha0", type=float, required=True)
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--s-grid", required=True, help="lo:hi:factor")
    c.add_argument("--variant", choices=("intest1", "intest2"), default="intest1")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_check_lemexp)

    k = sub.add_parser("curves", help="limit and corrected CDF tables without simulation")
    k.add_argument("--config", required=True)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_curves)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
