"""Fourier coefficients through the distributional integral, and point values from them.

``a_n = (1/P) int_0^P f(theta) exp(-i n w theta) d theta`` with ``w = 2 pi / P``
is defined for every integrand the engine can integrate, including chirps
that are not Lebesgue integrable over a period.  Point values are recovered
from asymmetric Cesàro partial sums ``sum_{-x <= n <= a x} a_n e^{i n w theta}``,
which must share one limit for every ratio ``a``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cesaro import CONVERGED, CesaroValue, cesaro_sum
from .expr import Const, Periodic, Smooth
from .integrate import FINITE, expand_atoms, integrate_against_smooth
from .reduce import EXISTS, INCONCLUSIVE, NOVALUE, PointValue

__all__ = ["FourierData", "fourier_coeffs", "cesaro_partial_sum", "recover_value"]


@dataclass(frozen=True)
class FourierData:
    """Coefficients a_n for |n| <= n_max, stored as an array indexed n + n_max."""

    period: float
    n_max: int
    values: np.ndarray

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.n_max:
            raise KeyError(n)
        return complex(self.values[n + self.n_max])

    @property
    def coeffs(self) -> dict:
        return {n: self[n] for n in range(-self.n_max, self.n_max + 1)}

    def to_json(self) -> str:
        doc = {
            "period": self.period,
            "n_max": self.n_max,
            "n": list(range(-self.n_max, self.n_max + 1)),
            "re": [float(v.real) for v in self.values],
            "im": [float(v.imag) for v in self.values],
        }
        return json.dumps(doc, sort_keys=True)


def _poly_coeffs(smooth) -> Optional[np.ndarray]:
    if smooth is None:
        return np.array([1.0])
    if isinstance(smooth, Const):
        return np.array([smooth.c])
    if isinstance(smooth, Smooth) and smooth.kind == "poly":
        return np.asarray(smooth.coeffs, dtype=float)
    return None


def _poly_exp_integral(c: np.ndarray, p: float, q: float, k: np.ndarray) -> np.ndarray:
    """int_p^q P(x) exp(-i k x) dx for all k at once (k != 0), by repeated parts."""
    pp = np.polynomial.polynomial
    out = np.zeros(k.size, dtype=complex)
    ik = 1j * k
    deriv = c
    power = ik.copy()
    while deriv.size and np.any(deriv != 0):
        vq, vp = pp.polyval(q, deriv), pp.polyval(p, deriv)
        out -= (vq * np.exp(-1j * k * q) - vp * np.exp(-1j * k * p)) / power
        deriv = pp.polyder(deriv) if deriv.size > 1 else np.array([])
        power = power * ik
    return out


def fourier_coeffs(e, n_max: int, period: Optional[float] = None, tol: float = 1e-11) -> FourierData:
    """Coefficients of a periodic integrand (or of e on [0, period)).

    Polynomial pieces are integrated against the exponential in closed form
    by repeated integration by parts; every other piece goes through
    :func:`integrate_against_smooth` with cosine and sine multipliers.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if isinstance(e, Periodic):
        P, base = e.period, e.base
    elif period is not None:
        P, base = float(period), e
    else:
        raise ValueError("give a periodic expression or a period")
    w = 2.0 * math.pi / P
    n = np.arange(1, n_max + 1, dtype=float)
    pos = np.zeros(n_max, dtype=complex)
    a0 = 0.0
    for at in expand_atoms(base, 0.0, P):
        lo, hi = (0.0, P) if at.window is None else (max(0.0, at.window[0]), min(P, at.window[1]))
        if hi <= lo:
            continue
        c = _poly_coeffs(at.smooth) if at.leaf is None else None
        if c is not None:
            c = at.coef * c
            prim = np.polynomial.polynomial.polyint(c)
            a0 += float(np.polynomial.polynomial.polyval(hi, prim) - np.polynomial.polynomial.polyval(lo, prim))
            if n_max:
                pos += _poly_exp_integral(c, lo, hi, w * n)
            continue
        body = at.expr()
        r0 = integrate_against_smooth(body, Const(1.0), lo, hi, tol, method="direct")
        if r0.status != FINITE:
            raise ValueError(f"integral over a period is {r0.status}")
        a0 += r0.value
        for j in range(1, n_max + 1):
            cos_j = Smooth("cos", (0.0, w * j))
            sin_j = Smooth("sin", (0.0, w * j))
            rc = integrate_against_smooth(body, cos_j, lo, hi, tol, method="direct")
            rs = integrate_against_smooth(body, sin_j, lo, hi, tol, method="direct")
            if FINITE not in (rc.status,) or rs.status != FINITE:
                raise ValueError(f"coefficient {j} did not integrate")
            pos[j - 1] += rc.value - 1j * rs.value
    vals = np.concatenate([np.conj(pos[::-1]), [a0], pos]) / P
    return FourierData(P, int(n_max), vals)


def _partial_sums(fd: FourierData, theta: float, a: float, X: int) -> np.ndarray:
    w = 2.0 * math.pi / fd.period
    n = np.arange(1, fd.n_max + 1)
    pos = np.concatenate([[0.0], np.cumsum(fd.values[fd.n_max + 1:] * np.exp(1j * n * w * theta))])
    neg = np.concatenate([[0.0], np.cumsum(fd.values[fd.n_max - 1::-1] * np.exp(-1j * n * w * theta))])
    x = np.arange(0, X + 1)
    top = np.floor(a * x + 1e-9).astype(int)
    return fd.values[fd.n_max] + neg[x] + pos[top]


def cesaro_partial_sum(fd: FourierData, theta: float, k: Optional[int] = 1, a: float = 1.0,
                       x_max: Optional[int] = None, tol: float = 1e-4, k_max: int = 6) -> CesaroValue:
    """(C,k) limit in integer x of sum over -x <= n <= a x of a_n e^{i n w theta}."""
    if a <= 0:
        raise ValueError("a must be positive")
    limit = int(math.floor(fd.n_max / max(1.0, a)))
    X = limit if x_max is None else min(int(x_max), limit)
    if X < 1:
        raise ValueError("not enough coefficients for the requested range")
    S = _partial_sums(fd, theta, a, X)
    terms = np.diff(np.concatenate([[0.0], S]))
    cv = cesaro_sum(terms, k, N=terms.size, tol=tol, k_max=k_max)
    v = cv.value
    if isinstance(v, complex) and abs(v.imag) <= 1e-12 * max(1.0, abs(v)):
        v = v.real
    return CesaroValue(v, cv.order_k, cv.status, cv.diagnostics, cv.terms_used)


def recover_value(fd: FourierData, theta: float, ratios: Sequence[float] = (0.5, 1.0, 2.0),
                  k: Optional[int] = None, tol: float = 1e-3) -> PointValue:
    """Point value at theta when every ratio's Cesàro partial sum has one common limit."""
    if not ratios:
        raise ValueError("ratios must be nonempty")
    results = [cesaro_partial_sum(fd, theta, k, a, tol=tol) for a in ratios]
    vals = [complex(r.value) for r in results]
    order = max(r.order_k for r in results)
    spread = max(abs(u - v) for u in vals for v in vals)
    ok = all(r.status == CONVERGED for r in results)
    if ok and spread <= 10 * tol * max(1.0, abs(vals[0])):
        v = sum(vals) / len(vals)
        return PointValue(v.real if abs(v.imag) <= 10 * tol else v, order, EXISTS)
    if ok:
        detail = ", ".join(f"a={a}: {v.real:.6g}{v.imag:+.6g}i" for a, v in zip(ratios, vals))
        return PointValue(float("nan"), order, NOVALUE, None, f"ratio limits differ ({detail})")
    return PointValue(float("nan"), order, INCONCLUSIVE, None, "a partial-sum limit is undecided")
