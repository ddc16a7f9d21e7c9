"""Flat torus, k = 1: coverage probability against exp(-tau gamma) and binomial against Poisson samples."""
from __future__ import annotations

import dataclasses
import math

from _common import load, out_dir, parser

from covlab.analytic import predicted_probability
from covlab.experiment import emit, ks_distance, run_campaign
from covlab.limits import empirical, r_t


def main() -> None:
    p = parser(__doc__, "torus_poisson.json")
    p.add_argument("--betas", default="-1,0,1,2")
    args = p.parse_args()
    cfg = load(args)
    base = out_dir(args, cfg)
    t = cfg.n_values[0]
    poiss = run_campaign(cfg, t, workers=args.threads)
    emit(poiss, base / "poisson")
    N = poiss.samples.size
    print("beta  empirical  exp(-tau*gamma)  3se")
    for beta in (float(b) for b in args.betas.split(",")):
        emp = poiss.ecdf(beta)
        pred = predicted_probability(cfg.domain, cfg.setting, t, r_t(beta, t, cfg.setting), "poisson")
        print(f"{beta:5g}  {emp:.4f}     {pred:.4f}           {3 * math.sqrt(emp * (1 - emp) / N):.4f}")
    bcfg = dataclasses.replace(cfg, mode="binomial", n_values=(int(t),), seed=cfg.seed + 1)
    binom = run_campaign(bcfg, workers=args.threads)
    emit(binom, base / "binomial")
    print(f"KS(binomial, Poisson) = {ks_distance(binom.samples, empirical(poiss.samples)):.4f}")


if __name__ == "__main__":
    main()
