"""Recover sawtooth values from its Fourier coefficients by asymmetric Cesaro sums.

For each angle the script reports the (C,k) limit at every ratio a, the
recovered point value (or why there is none) and the pointwise formula.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

import numpy as np

from distint.expr import parse
from distint.fourier import cesaro_partial_sum, fourier_coeffs, recover_value

SAWTOOTH = "periodic(2*pi; poly(1.5707963267948966,-0.5))"


@dataclass(frozen=True)
class RecoveryConfig:
    n_max: int = 10_000
    thetas: tuple = (0.0, 0.5, math.pi / 2, math.pi, 5.0)
    ratios: tuple = (0.5, 1.0, 2.0)
    order: int = 1
    expr: str = field(default=SAWTOOTH)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-max", type=int, default=RecoveryConfig.n_max)
    p.add_argument("--order", type=int, default=RecoveryConfig.order)
    args = p.parse_args(argv)
    cfg = RecoveryConfig(n_max=args.n_max, order=args.order)

    fd = fourier_coeffs(parse(cfg.expr), cfg.n_max)
    print(f"{'theta':>8} " + " ".join(f"{'a=' + str(a):>20}" for a in cfg.ratios) + f" {'recovered':>12} {'exact':>10}")
    for theta in cfg.thetas:
        sums = [complex(cesaro_partial_sum(fd, theta, cfg.order, a).value) for a in cfg.ratios]
        pv = recover_value(fd, theta, cfg.ratios)
        exact = (math.pi - theta) / 2 if 0 < theta < 2 * math.pi else float("nan")
        shown = f"{pv.value:.6f}" if pv.status == "Exists" else pv.status
        cols = " ".join(f"{s.real:>+9.5f}{s.imag:>+9.5f}i " for s in sums)
        print(f"{theta:8.4f} {cols} {shown:>12} {exact:10.6f}")
    print(f"max |a_n - 1/(2in)| = {np.max(np.abs(fd.values[fd.n_max + 1:] - 1 / (2j * np.arange(1, fd.n_max + 1)))):.2e}")


if __name__ == "__main__":
    main()
