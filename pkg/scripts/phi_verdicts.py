"""Measure verdicts and radial extremes for a few distributions built from deltas.

Shows how the phi-transform separates positive measures from distributions
that are not: the transform of -delta drifts to minus infinity as t -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from distint.expr import parse
from distint.phitransform import DistRep, bump, measure_verdict, poisson, radial_extremes


@dataclass(frozen=True)
class Case:
    label: str
    dist: DistRep
    kernel: object


CASES = (
    Case("delta", DistRep(None, ((1.0, 0, 0.0),)), poisson()),
    Case("-delta", DistRep(None, ((-1.0, 0, 0.0),)), poisson()),
    Case("-delta'", DistRep(None, ((-1.0, 1, 0.0),)), bump(1.0, 0.5)),
    Case("indicator(0,1)", DistRep(parse("indicator(0,1)")), poisson()),
    Case("|x|^-1/2", DistRep(parse("pow(alpha=-0.5)")), poisson()),
)


def main() -> None:
    for case in CASES:
        upper, lower = radial_extremes(case.dist, case.kernel, 0.0)
        # a coarser mesh than the default keeps the demo to a few seconds
        verdict = measure_verdict(case.dist, case.kernel, (-1.0, 1.0), x_samples=9,
                                  t_mesh=tuple(np.geomspace(1.0, 1e-9, 19)))
        print(f"{case.label:>16}  radial limsup {upper:>12.5g}  liminf {lower:>12.5g}  {type(verdict).__name__}")


if __name__ == "__main__":
    main()
