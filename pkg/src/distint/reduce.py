"""Chirp reduction and distributional point values.

A chirp term ``psi(x) u**alpha trig(u**-beta)`` with ``u = |x - c|`` is
rewritten, one side at a time, through

    u^a sin(u^-b) = (1/b) d/du[u^(a+b+1) cos(u^-b)] - ((a+b+1)/b) u^(a+b) cos(u^-b)

and its cosine mirror.  Each step raises the exponent of the remainder by
``beta``; the derivative parts are collected into a closed-form primitive
``G`` and the rest into an absolutely integrable ``h``, so that ``f = G' + h``
away from the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .expr import (
    Atom, Chirp, Const, DomainError, Indicator, Power, Restrict, Scale, Smooth, SmoothProduct,
    StepSeq, Sum, atoms, differentiate, eval_at, is_smooth, sigma, singular_points,
)

__all__ = ["Reduction", "PointValue", "chirp_reduce", "point_value", "lateral_value"]


@dataclass(frozen=True)
class Reduction:
    G: object
    h: object
    steps: int
    center: float
    g_terms: tuple = field(default=(), repr=False)
    h_terms: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class PointValue:
    value: float
    order_n: int
    status: str  # Exists | NoValue | Inconclusive
    laterals: Optional[tuple] = None
    detail: str = ""


def _term_expr(coef, psi, alpha, beta, kind, c, side):
    leaf = Chirp(alpha, beta, kind, c, side, False)
    body = leaf if psi is None else SmoothProduct(psi, leaf)
    return body if coef == 1.0 else Scale(coef, body)


def _psi_prime(psi):
    if psi is None:
        return None
    d = differentiate(psi)
    if isinstance(d, Const) and d.c == 0.0:
        return None
    return d


def _as_smooth_factor(d):
    """Turn a derivative of a smooth factor into (scalar, smooth-or-None)."""
    if d is None:
        return 0.0, None
    if isinstance(d, Const):
        return d.c, None
    if isinstance(d, Scale) and is_smooth(d.e):
        return d.k, d.e
    return 1.0, d


def chirp_reduce(f, margin: float = 0.25) -> Reduction:
    """Split a chirp integrand into G' + h.

    ``f`` is a chirp leaf, possibly scaled, multiplied by a smooth factor, or a
    sum of such terms sharing one center.  Non-chirp smooth terms pass into h.
    Terms stop once their exponent exceeds ``-1 + margin``.
    """
    work: dict = {}
    passthrough = []
    center = None
    beta = None
    for at in atoms(f):
        leaf = at.leaf
        if at.window is not None:
            raise DomainError("chirp_reduce expects an unrestricted chirp term")
        if leaf is None:
            passthrough.append(at.expr())
            continue
        if not isinstance(leaf, Chirp):
            raise DomainError(f"chirp_reduce: unsupported leaf {type(leaf).__name__}")
        if center is not None and (leaf.a != center or leaf.beta != beta):
            raise DomainError("chirp_reduce: terms must share center and beta")
        center, beta = leaf.a, leaf.beta
        sp, sm = sigma(leaf.side, leaf.signed)
        for side, sg in (("right", sp), ("left", sm)):
            if sg != 0.0:
                key = (at.smooth, leaf.alpha, leaf.kind, side)
                work[key] = work.get(key, 0.0) + at.coef * sg
    if center is None:
        return Reduction(Const(0.0), f, 0, 0.0)
    limit = -1.0 + margin
    g_terms: dict = {}
    h_terms: dict = {}
    steps = 0
    while work:
        nxt: dict = {}
        stepped = False
        for (psi, alpha, kind, side), coef in work.items():
            if coef == 0.0:
                continue
            if alpha > limit:
                k = (psi, alpha, kind, side)
                h_terms[k] = h_terms.get(k, 0.0) + coef
                continue
            stepped = True
            s = 1.0 if side == "right" else -1.0
            p = alpha + beta + 1.0
            other = "cos" if kind == "sin" else "sin"
            sgn = 1.0 if kind == "sin" else -1.0
            gk = (psi, p, other, side)
            g_terms[gk] = g_terms.get(gk, 0.0) + sgn * s * coef / beta
            k1 = (psi, alpha + beta, other, side)
            nxt[k1] = nxt.get(k1, 0.0) - sgn * p * coef / beta
            dk, dpsi = _as_smooth_factor(_psi_prime(psi))
            if dk != 0.0:
                k2 = (dpsi, p, other, side)
                nxt[k2] = nxt.get(k2, 0.0) - sgn * s * coef * dk / beta
        steps += int(stepped)
        work = nxt
    G = [_term_expr(c, psi, a, beta, k, center, sd) for (psi, a, k, sd), c in g_terms.items() if c != 0.0]
    H = [_term_expr(c, psi, a, beta, k, center, sd) for (psi, a, k, sd), c in h_terms.items() if c != 0.0]
    H += passthrough
    G_e = Const(0.0) if not G else (G[0] if len(G) == 1 else Sum(tuple(G)))
    H_e = Const(0.0) if not H else (H[0] if len(H) == 1 else Sum(tuple(H)))
    return Reduction(G_e, H_e, steps, center, tuple(g_terms.items()), tuple(h_terms.items()))


# ---------------------------------------------------------------------------
# point values

EXISTS, NOVALUE, INCONCLUSIVE = "Exists", "NoValue", "Inconclusive"


def _panel_moments(e):
    from .quadrature import integrate_abs

    def moments(lo, hi, m_max):
        out = np.empty(m_max + 1)
        for m in range(m_max + 1):
            w = (lambda t, m=m: (hi - t) ** m) if m else None
            out[m] = integrate_abs(e, lo, hi, tol=1e-13, weight=w).value
        return out

    return moments


def _numeric_lateral(e, x0: float, s: float, n_max: int, tol: float, reach: float) -> PointValue:
    from .cesaro import local_cesaro_limit
    from .expr import evaluate

    cv = local_cesaro_limit(lambda x: evaluate(e, x), a=x0 + s * reach, b=x0, n_max=n_max,
                            tol=tol, moments=_panel_moments(e))
    status = {"Converged": EXISTS, "Diverged": NOVALUE}.get(cv.status, INCONCLUSIVE)
    return PointValue(cv.value, cv.order_k, status, None, f"local Cesaro limit, diag={cv.diagnostics:.3g}")


def _atom_lateral(at: Atom, x0: float, s: float, n_max: int, tol: float, reach: float,
                  closed_form: bool = True) -> PointValue:
    from .expr import evaluate

    if at.window is not None:
        lo, hi = at.window
        if x0 == lo:
            inside = s > 0
        elif x0 == hi:
            inside = s < 0
        else:
            inside = lo < x0 < hi
        if not inside:
            return PointValue(0.0, 0, EXISTS)
    leaf = at.leaf
    sm = 1.0 if at.smooth is None else float(evaluate(at.smooth, np.array([x0]))[0])
    if leaf is None:
        return PointValue(at.coef * sm, 0, EXISTS)
    if closed_form and isinstance(leaf, Chirp) and leaf.a == x0:
        return PointValue(0.0, 0, EXISTS, None, "chirp center")
    if isinstance(leaf, Power) and leaf.a == x0:
        sp, sgm = sigma(leaf.side, leaf.signed)
        sg = sp if s > 0 else sgm
        if sg == 0.0 or leaf.alpha > 0:
            return PointValue(0.0, 0, EXISTS)
        if leaf.alpha == 0:
            return PointValue(at.coef * sm * sg, 0, EXISTS)
    if isinstance(leaf, StepSeq) and x0 == leaf.a and s < 0:
        return PointValue(0.0, 0, EXISTS)
    if isinstance(leaf, StepSeq) and x0 == leaf.a + 1.0 and s > 0:
        return PointValue(0.0, 0, EXISTS)
    singular = singular_points(leaf, x0 - 1e-9, x0 + 1e-9)
    if not singular:
        v = float(at.evaluate(np.array([x0]))[0])
        if np.isfinite(v):
            return PointValue(v, 0, EXISTS)
    return _numeric_lateral(at.expr(), x0, s, n_max, tol, reach)


def lateral_value(e, x0: float, side: str, n_max: int = 6, tol: float = 1e-6,
                  reach: float = 0.5, closed_form: bool = True) -> PointValue:
    """Distributional lateral value of e at x0 from the left or right.

    Computed term by term; terms without a closed form go through the local
    Cesàro limit of the term itself on a geometric mesh of length ``reach``.
    ``closed_form=False`` disables the chirp-center shortcut (used to
    cross-check it numerically).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    s = 1.0 if side == "right" else -1.0
    parts = [_atom_lateral(at, x0, s, n_max, tol, _reach(e, x0, s, reach), closed_form) for at in atoms(e)]
    if any(p.status == NOVALUE for p in parts):
        return PointValue(float("nan"), max(p.order_n for p in parts), NOVALUE)
    if any(p.status == INCONCLUSIVE for p in parts):
        bad = [p for p in parts if p.status == INCONCLUSIVE]
        return PointValue(math.fsum(p.value for p in parts), max(p.order_n for p in parts),
                          INCONCLUSIVE, None, bad[0].detail)
    return PointValue(math.fsum(p.value for p in parts), max([0] + [p.order_n for p in parts]), EXISTS)


def _reach(e, x0, s, reach):
    # stay clear of other singular points on the approach side
    pts = [p for p in singular_points(e, x0 - 2 * reach, x0 + 2 * reach) if p != x0 and (p - x0) * s > 0]
    if pts:
        reach = min(reach, 0.5 * min(abs(p - x0) for p in pts))
    return reach


def point_value(e, x0: float, n_max: int = 6, tol: float = 1e-6, closed_form: bool = True) -> PointValue:
    """Distributional (Lojasiewicz) point value of e at x0.

    Exists when both lateral values exist and agree; NoValue when they differ
    by more than 10*tol; Inconclusive otherwise.
    """
    if closed_form and isinstance(e, Chirp) and e.a == x0:
        return PointValue(0.0, 0, EXISTS, (0.0, 0.0), "chirp center")
    if is_smooth(e):
        return PointValue(float(eval_at(e, x0)), 0, EXISTS)
    left = lateral_value(e, x0, "left", n_max, tol, closed_form=closed_form)
    right = lateral_value(e, x0, "right", n_max, tol, closed_form=closed_form)
    lat = (left.value, right.value)
    order = max(left.order_n, right.order_n)
    if NOVALUE in (left.status, right.status):
        return PointValue(float("nan"), order, NOVALUE, lat, "a lateral value does not exist")
    gap = abs(left.value - right.value)
    if left.status == EXISTS and right.status == EXISTS:
        if gap <= 10 * tol * max(1.0, abs(left.value)):
            return PointValue(0.5 * (left.value + right.value), order, EXISTS, lat)
        return PointValue(float("nan"), order, NOVALUE, lat, "lateral values differ")
    if gap > 10 * tol * max(1.0, abs(left.value)) and left.status == EXISTS or right.status == EXISTS and \
            gap > 1e3 * tol:
        return PointValue(float("nan"), order, INCONCLUSIVE, lat, "one lateral value undecided")
    return PointValue(float("nan"), order, INCONCLUSIVE, lat, "lateral values undecided")
