"""Compare the reduction and Hake strategies on a family of chirps x^alpha sin(|x|^-beta).

Prints one CSV row per (alpha, beta): both values, their gap and the wall time
of each strategy.  Example:

    python3 scripts/chirp_table.py --alphas=-3,-2,-1 --betas=1,2
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass

from distint.expr import Chirp
from distint.integrate import dist_integrate


@dataclass(frozen=True)
class TableConfig:
    alphas: tuple = (-3.0, -2.5, -2.0, -1.5, -1.0)
    betas: tuple = (1.0, 2.0)
    kind: str = "sin"
    lo: float = 0.0
    hi: float = 1.0


def _timed(f, force):
    t0 = time.perf_counter()
    r = dist_integrate(f, 0.0, 1.0, force=force)
    return r, time.perf_counter() - t0


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alphas", default=None, help="comma separated exponents")
    p.add_argument("--betas", default=None, help="comma separated frequencies")
    p.add_argument("--kind", choices=("sin", "cos"), default="sin")
    args = p.parse_args(argv)
    cfg = TableConfig(
        alphas=tuple(float(v) for v in args.alphas.split(",")) if args.alphas else TableConfig.alphas,
        betas=tuple(float(v) for v in args.betas.split(",")) if args.betas else TableConfig.betas,
        kind=args.kind,
    )
    out = csv.writer(sys.stdout)
    out.writerow(["alpha", "beta", "reduce", "hake", "hake_status", "gap", "t_reduce", "t_hake"])
    for beta in cfg.betas:
        for alpha in cfg.alphas:
            f = Chirp(alpha, beta, cfg.kind)
            red, t_red = _timed(f, "reduce")
            hake, t_hake = _timed(f, "hake")
            gap = abs(red.value - hake.value)
            out.writerow([alpha, beta, f"{red.value:.12g}", f"{hake.value:.12g}", hake.status,
                          f"{gap:.2e}", f"{t_red:.3f}", f"{t_hake:.3f}"])


if __name__ == "__main__":
    main()
