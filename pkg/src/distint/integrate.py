"""The distributional integral engine.

``dist_integrate`` cuts [a, b] at the singular points of the integrand and,
on every panel and for every additive term, tries four strategies in a fixed
order:

``abs``
    absolute quadrature when the term is Lebesgue integrable on the panel;
``reduce``
    chirp reduction ``f = G' + h`` at a chirp center, value ``G(far) + int h``
    with the Lojasiewicz value 0 of ``G`` at the center;
``series``
    a step function at its accumulation point, summed as the (C) series of
    its cell integrals;
``hake``
    the universal fallback: the local Cesàro limit of the indefinite integral
    as the panel end approaches the obstruction.

Non-integrable one-signed power singularities yield ``PlusInfinity`` or
``MinusInfinity``; everything else that fails is ``NotIntegrable`` or
``Inconclusive``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .cesaro import CesaroValue, EvDisagreement, cesaro_limit_at_infinity, cesaro_sum, local_cesaro_limit
from .expr import (
    Atom, Chirp, Const, DomainError, Periodic, Power, Restrict, Scale, Smooth, SmoothProduct, StepSeq,
    Sum, atoms, differentiate, eval_at, evaluate, is_smooth, poly, shift, sigma, singular_points, support,
)
from .quadrature import integrate_abs
from .reduce import chirp_reduce

__all__ = [
    "FINITE", "PLUS_INFINITY", "MINUS_INFINITY", "NOT_INTEGRABLE", "INCONCLUSIVE",
    "TraceEntry", "IntegralResult", "UnsupportedTransform", "HypothesisViolation",
    "ResidualNotBracketed", "dist_integrate", "indefinite", "integrate_against_smooth",
    "integrate_improper", "change_of_variables", "moment", "reconstruct_from_peano",
    "mvt_find_xi", "reflect", "expand_atoms", "power_weight_integrate",
]

FINITE = "Finite"
PLUS_INFINITY = "PlusInfinity"
MINUS_INFINITY = "MinusInfinity"
NOT_INTEGRABLE = "NotIntegrable"
INCONCLUSIVE = "Inconclusive"


class UnsupportedTransform(ValueError):
    """The substitution does not map this integrand back into the family."""


class HypothesisViolation(ValueError):
    """A mean value theorem hypothesis fails on the sample grid."""


class ResidualNotBracketed(ValueError):
    """No sign change of the mean value residual could be located."""


@dataclass(frozen=True)
class TraceEntry:
    lo: float
    hi: float
    strategy: str
    value: float
    diagnostics: str = ""


@dataclass(frozen=True)
class IntegralResult:
    value: float
    status: str
    error_estimate: float
    trace: tuple = field(default=())

    @property
    def finite(self) -> bool:
        return self.status == FINITE

    def __neg__(self) -> "IntegralResult":
        flip = {PLUS_INFINITY: MINUS_INFINITY, MINUS_INFINITY: PLUS_INFINITY}
        return IntegralResult(-self.value, flip.get(self.status, self.status), self.error_estimate,
                              self.trace)


@dataclass(frozen=True)
class _Piece:
    value: float
    status: str
    err: float
    strategy: str
    note: str = ""


# ---------------------------------------------------------------------------
# atom expansion


def expand_atoms(e, a: float, b: float) -> list[Atom]:
    """Atoms of e over [a, b], with periodic leaves unrolled into windowed copies."""
    out = []
    for at in atoms(e):
        if not isinstance(at.leaf, Periodic):
            out.append(at)
            continue
        P = at.leaf.period
        lo, hi = a, b
        if at.window is not None:
            lo, hi = max(lo, at.window[0]), min(hi, at.window[1])
        for k in range(math.floor(lo / P), math.ceil(hi / P)):
            win = (k * P, (k + 1) * P)
            if at.window is not None:
                win = (max(win[0], at.window[0]), min(win[1], at.window[1]))
            for sub in expand_atoms(shift(at.leaf.base, -k * P), *win):
                w = win if sub.window is None else (max(win[0], sub.window[0]), min(win[1], sub.window[1]))
                if w[1] <= w[0]:
                    continue
                smooth = at.smooth
                if sub.smooth is not None:
                    smooth = sub.smooth if smooth is None else SmoothProduct(smooth, sub.smooth)
                out.append(Atom(at.coef * sub.coef, smooth, sub.leaf, w))
    return out


def _atom_cuts(at: Atom, a: float, b: float) -> list[float]:
    pts = {a, b}
    if at.window is not None:
        pts.update(p for p in at.window if a < p < b)
    if at.leaf is not None:
        pts.update(p for p in singular_points(at.leaf, a, b) if a < p < b)
    return sorted(pts)


def _smooth_at(at: Atom, x: float) -> float:
    return 1.0 if at.smooth is None else float(evaluate(at.smooth, np.array([x]))[0])


# ---------------------------------------------------------------------------
# per-panel strategies


def _center_touch(at: Atom, p: float, q: float):
    """(center, side sign) if the atom's leaf has its obstruction at a panel end."""
    leaf = at.leaf
    if isinstance(leaf, (Power, Chirp)):
        if leaf.a == p:
            return p, 1.0
        if leaf.a == q:
            return q, -1.0
    if isinstance(leaf, StepSeq) and leaf.a == p:
        return p, 1.0
    return None


def _weighted(at: Atom, weight):
    if weight is None:
        return at.evaluate
    return lambda x: at.evaluate(x) * np.asarray(weight(x), dtype=float)


def _one_signed(at: Atom, c: float, s: float, span: float, weight) -> float:
    """+1 / -1 when the atom keeps one sign just beside c, else 0."""
    u = span * np.geomspace(1e-9, 0.5, 400)
    vals = _weighted(at, weight)(c + s * u)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0
    if np.all(vals >= 0) and np.any(vals > 0):
        return 1.0
    if np.all(vals <= 0) and np.any(vals < 0):
        return -1.0
    return 0.0


def _try_abs(at: Atom, p, q, tol, weight) -> Optional[_Piece]:
    try:
        r = integrate_abs(at.expr(), p, q, tol=tol, weight=weight)
    except DomainError:
        return None
    return _Piece(r.value, FINITE, r.abs_error_estimate, "abs")


def _try_reduce(at: Atom, p, q, c, s, tol) -> Optional[_Piece]:
    leaf = at.leaf
    if not isinstance(leaf, Chirp):
        return None
    sp, sm = sigma(leaf.side, leaf.signed)
    sg = sp if s > 0 else sm
    if sg == 0.0:
        return _Piece(0.0, FINITE, 0.0, "reduce", "zero side")
    side = "right" if s > 0 else "left"
    one = Chirp(leaf.alpha, leaf.beta, leaf.kind, leaf.a, side, False)
    body = one if at.smooth is None else SmoothProduct(at.smooth, one)
    red = chirp_reduce(Scale(at.coef * sg, body))
    far = q if s > 0 else p
    g_far = eval_at(red.G, far) or 0.0
    boundary = g_far if s > 0 else -g_far
    h = integrate_abs(red.h, p, q, tol=tol)
    return _Piece(boundary + h.value, FINITE, h.abs_error_estimate + 1e-15 * abs(boundary), "reduce",
                  f"steps={red.steps}")


def _step_terms(at: Atom, p, q, N: int, weight):
    """Cell integrals a_n (n > n0) of a step atom on (a, q] plus the partial cell."""
    leaf: StepSeq = at.leaf
    u1 = min(q - leaf.a, 1.0)
    n0 = max(1, math.floor(1.0 / u1 + 1e-12))
    if 1.0 / (n0 + 1) >= u1:
        n0 += 1
    n = np.arange(n0, n0 + N, dtype=float)
    lo = 1.0 / (n + 1.0)
    hi = np.minimum(1.0 / n, u1)
    cn = leaf.c(n)
    # 1/(n(n+1)) avoids the cancellation in 1/n - 1/(n+1) for large n
    width = np.where(hi < 1.0 / n, hi - lo, 1.0 / (n * (n + 1.0)))
    if at.smooth is None and weight is None:
        cells = at.coef * cn * width
    else:
        x, w = np.polynomial.legendre.leggauss(8)
        pts = leaf.a + 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x[None, :]
        base = np.ones_like(pts)
        if at.smooth is not None:
            base = base * evaluate(at.smooth, pts)
        if weight is not None:
            base = base * np.asarray(weight(pts.ravel()), dtype=float).reshape(pts.shape)
        cells = at.coef * cn * 0.5 * width * (base @ w)
    return cells


def _try_series(at: Atom, p, q, c, tol, weight, N: int = 1_000_000) -> Optional[_Piece]:
    if not isinstance(at.leaf, StepSeq) or c != at.leaf.a:
        return None
    cells = _step_terms(at, p, q, N, weight)
    cv = cesaro_sum(cells, None, N=cells.size, tol=max(tol, 1e-5))
    if cv.status == "Converged":
        return _Piece(float(cv.value), FINITE, float(cv.diagnostics), "series",
                      f"(C,{cv.order_k}) terms={cv.terms_used}")
    if cv.status == "Diverged":
        nz = cells[cells != 0]
        if nz.size and np.all(nz > 0):
            return _Piece(math.inf, PLUS_INFINITY, math.inf, "series", "positive series diverges")
        if nz.size and np.all(nz < 0):
            return _Piece(-math.inf, MINUS_INFINITY, math.inf, "series", "negative series diverges")
        return _Piece(float("nan"), NOT_INTEGRABLE, float("inf"), "series", "series diverges")
    return _Piece(float(cv.value), INCONCLUSIVE, float(cv.diagnostics), "series", "series undecided")


def _weighted_moments(at: Atom, weight):
    e = at.expr()

    def moments(lo, hi, m_max):
        out = np.empty(m_max + 1)
        for m in range(m_max + 1):
            if weight is None and m == 0:
                w = None
            else:
                w = (lambda t, m=m: (hi - t) ** m * (1.0 if weight is None else np.asarray(weight(t))))
            out[m] = integrate_abs(e, lo, hi, tol=1e-14, weight=w).value
        return out

    return moments


def _hake(at: Atom, p, q, c, s, tol, weight, n_max=6, decades=5.0) -> _Piece:
    far = q if s > 0 else p
    if isinstance(at.leaf, Chirp):
        # keep the phase |x - c|^-beta below about 1e5 on the mesh; every
        # Cesaro order gains a factor tau^beta, so faster chirps need fewer decades
        decades = min(decades, 5.0 / at.leaf.beta + math.log10(abs(far - c)))
        if decades < 1.0:
            # the phase is already near the cap at the far end of the panel
            return _Piece(float("nan"), INCONCLUSIVE, math.inf, "hake", "oscillation too fast for the mesh")
    # the convergence judge is relative to max(1, |L|); run it at unit amplitude
    # so a tiny coefficient cannot make every order look converged
    amp = abs(at.coef) if at.coef != 0.0 else 1.0
    unit = replace(at, coef=at.coef / amp)
    cv = local_cesaro_limit(None, a=far, b=c, n_max=n_max, tol=max(tol, 1e-7), decades=decades,
                            moments=_weighted_moments(unit, weight))
    # the limit is of the integral from far to c; orient it as the integral over [p, q]
    value = amp * (-cv.value if s > 0 else cv.value)
    cv = replace(cv, diagnostics=amp * cv.diagnostics)
    if cv.status == "Converged":
        return _Piece(value, FINITE, cv.diagnostics, "hake", f"(C,{cv.order_k})")
    if cv.status == "Diverged":
        sgn = _one_signed(at, c, s, q - p, weight)
        if sgn != 0.0:
            return _Piece(sgn * math.inf, PLUS_INFINITY if sgn > 0 else MINUS_INFINITY, math.inf, "hake",
                          "one-signed divergence")
        return _Piece(float("nan"), NOT_INTEGRABLE, math.inf, "hake", "local Cesaro limit diverges")
    return _Piece(value, INCONCLUSIVE, cv.diagnostics, "hake", "local Cesaro limit undecided")


def _power_infinity(at: Atom, p, q, c, s, weight) -> Optional[_Piece]:
    leaf = at.leaf
    if not isinstance(leaf, Power) or leaf.alpha > -1.0:
        return None
    sp, sm = sigma(leaf.side, leaf.signed)
    sg = sp if s > 0 else sm
    if sg == 0.0:
        return _Piece(0.0, FINITE, 0.0, "abs", "zero side")
    amp = at.coef * sg * _smooth_at(at, c) * (1.0 if weight is None else float(np.asarray(weight(np.array([c])))[0]))
    if amp == 0.0 or not np.isfinite(amp):
        return None
    if amp > 0:
        return _Piece(math.inf, PLUS_INFINITY, math.inf, "abs", "positive non-integrable singularity")
    return _Piece(-math.inf, MINUS_INFINITY, math.inf, "abs", "negative non-integrable singularity")


def _panel(at: Atom, p, q, tol, weight, force) -> _Piece:
    touch = _center_touch(at, p, q)
    if touch is None or force is None:
        if force is None or touch is None:
            r = _try_abs(at, p, q, tol, weight)
            if r is not None:
                return r
    if touch is None:
        return _Piece(float("nan"), INCONCLUSIVE, math.inf, "abs", "quadrature failed")
    c, s = touch
    if force in (None, "reduce") and weight is None:
        r = _try_reduce(at, p, q, c, s, tol)
        if r is not None:
            return r
    if force in (None, "series"):
        r = _try_series(at, p, q, c, tol, weight)
        if r is not None:
            return r
    if force is None:
        r = _power_infinity(at, p, q, c, s, weight)
        if r is not None:
            return r
    return _hake(at, p, q, c, s, tol, weight)


def _combine(pieces: Sequence[_Piece]) -> _Piece:
    statuses = {pc.status for pc in pieces}
    strategy = "+".join(sorted({pc.strategy for pc in pieces})) or "none"
    note = "; ".join(pc.note for pc in pieces if pc.note)
    if NOT_INTEGRABLE in statuses or {PLUS_INFINITY, MINUS_INFINITY} <= statuses:
        return _Piece(float("nan"), NOT_INTEGRABLE, math.inf, strategy, note)
    if PLUS_INFINITY in statuses:
        return _Piece(math.inf, PLUS_INFINITY, math.inf, strategy, note)
    if MINUS_INFINITY in statuses:
        return _Piece(-math.inf, MINUS_INFINITY, math.inf, strategy, note)
    value = math.fsum(pc.value for pc in pieces)
    err = sum(pc.err for pc in pieces)
    status = INCONCLUSIVE if INCONCLUSIVE in statuses else FINITE
    return _Piece(value, status, err, strategy, note)


def dist_integrate(e, a: float, b: float, tol: float = 1e-10,
                   weight: Optional[Callable] = None, force: Optional[str] = None) -> IntegralResult:
    """Distributional integral of e over [a, b].

    ``weight`` is an optional callable smooth on the open interval (used for
    power weights); ``force`` in {"reduce", "series", "hake"} skips earlier
    strategies on singular panels so their answers can be compared.
    """
    if a == b:
        return IntegralResult(0.0, FINITE, 0.0, ())
    if a > b:
        return -dist_integrate(e, b, a, tol, weight, force)
    ats = expand_atoms(e, a, b)
    cuts = {a, b}
    for at in ats:
        cuts.update(_atom_cuts(at, a, b))
    cuts = sorted(cuts)
    per_tol = tol / max(1, len(ats) * (len(cuts) - 1))
    trace = []
    panels = []
    for p, q in zip(cuts[:-1], cuts[1:]):
        pieces = []
        for at in ats:
            lo, hi = p, q
            if at.window is not None and (at.window[1] <= p or at.window[0] >= q):
                continue
            pieces.append(_panel(at, lo, hi, per_tol, weight, force))
        comb = _combine(pieces) if pieces else _Piece(0.0, FINITE, 0.0, "none")
        panels.append(comb)
        trace.append(TraceEntry(p, q, comb.strategy, comb.value, comb.note))
    total = _combine(panels)
    return IntegralResult(total.value, total.status, total.err, tuple(trace))


def indefinite(e, a: float, grid: Sequence[float], tol: float = 1e-10,
               with_status: bool = False) -> list:
    """(x, integral of e from a to x) for each grid point; nan where not Finite."""
    xs = sorted(set(float(x) for x in grid) | {float(a)})
    i0 = xs.index(float(a))
    vals = {float(a): (0.0, FINITE)}
    for seq in (xs[i0:], xs[i0::-1]):
        run, status = 0.0, FINITE
        for lo, hi in zip(seq[:-1], seq[1:]):
            r = dist_integrate(e, lo, hi, tol)
            if status == FINITE and r.status == FINITE:
                run += r.value
            elif status == FINITE:
                status = r.status
            vals[hi] = (run if status == FINITE else float("nan"), status)
    out = []
    for x in grid:
        v, st = vals[float(x)]
        out.append((float(x), v, st) if with_status else (float(x), v))
    return out


# ---------------------------------------------------------------------------
# integration against a smooth factor


def _as_expr(psi):
    return Const(float(psi)) if isinstance(psi, (int, float)) else psi


def _ev1(e, x: float) -> float:
    return float(evaluate(e, np.array([float(x)]))[0])


def _graded_nodes(p: float, q: float, grade_lo: bool, grade_hi: bool, depth: int, n: int = 20):
    """Composite Gauss-Legendre nodes/weights on [p, q], refined geometrically toward flagged ends.

    With grading, the innermost piece of width ``L 2^-depth`` is left out;
    callers choose ``depth`` so that the integrand is negligible there.
    """
    L = q - p
    cuts = {p, q}
    if not (grade_lo or grade_hi):
        cuts.update(np.linspace(p, q, max(4, int(math.ceil(8 * L))) + 1).tolist())
    if grade_lo:
        cuts.update(p + L * 0.5 ** k for k in range(1, depth + 1))
    if grade_hi:
        cuts.update(q - L * 0.5 ** k for k in range(1, depth + 1))
    cuts = sorted(cuts)
    skip = set()
    if grade_lo:
        skip.add(0)
    if grade_hi:
        skip.add(len(cuts) - 2)
    t, w = np.polynomial.legendre.leggauss(n)
    xs, ws = [], []
    for i, (lo, hi) in enumerate(zip(cuts[:-1], cuts[1:])):
        if i in skip:
            continue
        xs.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * t)
        ws.append(0.5 * (hi - lo) * w)
    return np.concatenate(xs), np.concatenate(ws)


def _primitive_against(g, p: float, q: float, dpsi, grade_lo: bool, grade_hi: bool, depth: int,
                       tol: float) -> float:
    """Integral over [p, q] of (integral from p to x of g) * dpsi(x)."""
    xs, ws = _graded_nodes(p, q, grade_lo, grade_hi, depth)
    pts = np.concatenate([[p], xs])
    steps = [integrate_abs(g, lo, hi, tol=tol).value for lo, hi in zip(pts[:-1], pts[1:])]
    H = np.cumsum(steps)
    total = math.fsum(ws * H * evaluate(dpsi, xs))
    if grade_hi:
        # on the skipped sliver next to q the primitive is H(q) up to a negligible amount
        d = (q - p) * 0.5 ** depth
        Hq = H[-1] + integrate_abs(g, xs[-1], q, tol=tol).value
        t, w = np.polynomial.legendre.leggauss(8)
        x = q - d + 0.5 * d * (t + 1.0)
        total += Hq * 0.5 * d * float(evaluate(dpsi, x) @ w)
    return total


def _parts_step(at: Atom, a: float, b: float, psi, dpsi, tol: float, N: int = 200_000) -> tuple:
    """(F(b), integral of F psi') for a step atom, F its indefinite integral from a."""
    leaf: StepSeq = at.leaf
    A, B = max(a, leaf.a), min(b, leaf.a + 1.0)
    if B <= A:
        Fb = 0.0 if b <= leaf.a or a >= leaf.a + 1.0 else float("nan")
        return Fb, 0.0
    FB = dist_integrate(at.expr(), a, B, tol).value
    x, w = np.polynomial.legendre.leggauss(8)
    uA, uB = A - leaf.a, B - leaf.a
    n0 = max(1, math.floor(1.0 / uB + 1e-12))
    if 1.0 / (n0 + 1) >= uB:
        n0 += 1
    if uA == 0.0:
        n1 = n0 + N - 1
    else:
        n1 = max(n0, math.ceil(1.0 / uA - 1e-12) - 1)
    n = np.arange(n0, n1 + 1, dtype=float)
    lo = np.maximum(1.0 / (n + 1.0), uA) + leaf.a
    hi = np.minimum(1.0 / n, uB) + leaf.a
    pts = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x[None, :]
    half = 0.5 * (hi - lo)
    s = np.ones_like(pts) if at.smooth is None else evaluate(at.smooth, pts)
    cn = at.coef * leaf.c(n)
    cell = cn * half * (s @ w)
    # cells run from B inward; R_n is the integral from the cell's right end to B
    R = np.concatenate([[0.0], np.cumsum(cell)[:-1]])
    psi_lo, psi_hi = evaluate(psi, lo), evaluate(psi, hi)
    inner = cn * half * ((s * (evaluate(psi, pts) - psi_lo[:, None])) @ w)
    terms = R * (psi_hi - psi_lo) + inner
    if uA == 0.0:
        # below the last cell the integral from x to B has local (C) value FB,
        # so the uncovered sliver contributes FB * (psi(a + u_last) - psi(a))
        corr = FB * (_ev1(psi, leaf.a + 1.0 / (n1 + 1.0)) - _ev1(psi, leaf.a))
        cv = cesaro_sum(terms, None, N=terms.size, tol=1e-6)
        T = (math.fsum(terms) if cv.order_k == 0 else float(cv.value)) + corr
    else:
        T = math.fsum(terms)
    total = FB * (_ev1(psi, B) - _ev1(psi, A)) - T + FB * (_ev1(psi, b) - _ev1(psi, B))
    Fb = FB
    return Fb, total


def _parts_atom(at: Atom, a: float, b: float, psi, dpsi, tol: float) -> tuple:
    """(F(b), integral over [a, b] of F psi') for one atom."""
    if isinstance(at.leaf, StepSeq):
        return _parts_step(at, a, b, psi, dpsi, tol)
    cuts = _atom_cuts(at, a, b)
    F, total = 0.0, 0.0
    for p, q in zip(cuts[:-1], cuts[1:]):
        total += F * (_ev1(psi, q) - _ev1(psi, p))
        if at.window is not None and (at.window[1] <= p or at.window[0] >= q):
            continue
        piece = _panel(at, p, q, tol, None, None)
        if piece.status != FINITE:
            raise DomainError(f"integral over [{p}, {q}] is {piece.status}")
        body = Atom(at.coef, at.smooth, at.leaf, None)
        touch = _center_touch(at, p, q)
        if isinstance(at.leaf, Chirp) and touch is not None:
            c, s = touch
            leaf = at.leaf
            sp, sm = sigma(leaf.side, leaf.signed)
            sg = sp if s > 0 else sm
            if sg != 0.0:
                one = Chirp(leaf.alpha, leaf.beta, leaf.kind, leaf.a, "right" if s > 0 else "left", False)
                # grading stops where the phase outruns the grid; reduce far enough
                # that the remainder's primitive is negligible inside that gap
                u_min = 2000.0 ** (-1.0 / leaf.beta)
                depth = max(1, int(math.ceil(math.log2((q - p) / u_min))))
                u_min = (q - p) * 0.5 ** depth
                expo = math.log(1e-2 * max(tol, 1e-14)) / math.log(u_min) - 2.0
                red = chirp_reduce(Scale(at.coef * sg, one if at.smooth is None else SmoothProduct(at.smooth, one)),
                                   margin=max(expo, 0.0) + 1.0)
                g_p = 0.0 if c == p else (eval_at(red.G, p) or 0.0)
                gpart = dist_integrate(SmoothProduct(dpsi, red.G), p, q, tol)
                if gpart.status != FINITE:
                    raise DomainError("closed-form part did not integrate")
                total += gpart.value - g_p * (_ev1(psi, q) - _ev1(psi, p))
                total += _primitive_against(red.h, p, q, dpsi, c == p, c == q, depth, tol)
        else:
            grade = touch is not None
            total += _primitive_against(body.expr(), p, q, dpsi, grade and touch[0] == p,
                                        grade and touch[0] == q, 40, tol)
        F += piece.value
    return F, total


def integrate_against_smooth(f, psi, a: float, b: float, tol: float = 1e-10,
                             method: str = "parts") -> IntegralResult:
    """Integral of f*psi over [a, b] for a smooth psi.

    ``method="parts"`` evaluates ``F(b) psi(b) - int F psi'`` with ``F`` the
    indefinite integral of f from a; near chirp centers F is split into its
    closed-form part G (integrated against psi' by the engine) and a smooth
    remainder sampled on a graded grid.  ``method="direct"`` integrates the
    product itself.
    """
    psi = _as_expr(psi)
    if not is_smooth(psi):
        raise DomainError("psi must be a smooth expression")
    if method == "direct":
        return dist_integrate(SmoothProduct(psi, f), a, b, tol)
    if method != "parts":
        raise ValueError("method must be 'parts' or 'direct'")
    if a == b:
        return IntegralResult(0.0, FINITE, 0.0, ())
    if a > b:
        return -integrate_against_smooth(f, psi, b, a, tol, method)
    whole = dist_integrate(f, a, b, tol)
    if whole.status != FINITE:
        return whole
    dpsi = differentiate(psi)
    if isinstance(dpsi, Const) and dpsi.c == 0.0:
        v = whole.value * _ev1(psi, b)
        return IntegralResult(v, FINITE, whole.error_estimate * abs(_ev1(psi, b)),
                              (TraceEntry(a, b, "parts", v, "constant psi"),))
    Fb, inner = 0.0, 0.0
    for at in expand_atoms(f, a, b):
        try:
            fb, tot = _parts_atom(at, a, b, psi, dpsi, tol)
        except DomainError as exc:
            return IntegralResult(float("nan"), INCONCLUSIVE, math.inf,
                                  (TraceEntry(a, b, "parts", float("nan"), str(exc)),))
        Fb += fb
        inner += tot
    v = Fb * _ev1(psi, b) - inner
    err = whole.error_estimate + 1e3 * tol
    return IntegralResult(v, FINITE, err, (TraceEntry(a, b, "parts", v, ""),))


# ---------------------------------------------------------------------------
# improper integrals and moments


def _improper(e, a: float, k: Optional[int], k_max: int, X: float, tol: float):
    """(IntegralResult, CesaroValue or None) for the integral of e over [a, inf)."""
    lo_s, hi_s = support(e)
    if hi_s <= a:
        return IntegralResult(0.0, FINITE, 0.0, ()), None
    if hi_s < math.inf:
        r = dist_integrate(e, a, hi_s)
        return r, None
    periodic = any(isinstance(at.leaf, Periodic) for at in atoms(e))
    if periodic:
        X0 = a
        F0 = 0.0
        ats = expand_atoms(e, a, X)

        def moments(lo, hi, m_max):
            out = np.zeros(m_max + 1)
            for m in range(m_max + 1):
                w = (lambda t, m=m: (hi - t) ** m) if m else None
                for at in ats:
                    if at.window is not None and (at.window[1] <= lo or at.window[0] >= hi):
                        continue
                    out[m] += integrate_abs(at.expr(), lo, hi, tol=1e-13, weight=w).value
            return out

        kw = dict(moments=moments, panel_width=max(0.25, (X - a) / 4000.0))
    else:
        pts = singular_points(e, a, X)
        X0 = a if not pts else max(a, max(pts) + 1.0)
        head = dist_integrate(e, a, X0) if X0 > a else IntegralResult(0.0, FINITE, 0.0, ())
        if head.status != FINITE:
            return head, None
        F0 = head.value
        kw = dict(density=lambda x: evaluate(e, x))
    cv = cesaro_limit_at_infinity(None, k=k, X=X, X0=X0, F0=F0, tol=tol, k_max=k_max, **kw)
    trace = (TraceEntry(a, math.inf, f"cesaro-infinity(C,{cv.order_k})", float(cv.value), cv.status),)
    if cv.status == "Converged":
        return IntegralResult(float(cv.value), FINITE, float(cv.diagnostics), trace), cv
    if cv.status == "Diverged":
        tail = evaluate(e, np.geomspace(max(X0, 1.0), X, 2000))
        tail = tail[np.isfinite(tail)]
        if tail.size and np.all(tail >= 0):
            return IntegralResult(math.inf, PLUS_INFINITY, math.inf, trace), cv
        if tail.size and np.all(tail <= 0):
            return IntegralResult(-math.inf, MINUS_INFINITY, math.inf, trace), cv
        return IntegralResult(float("nan"), NOT_INTEGRABLE, math.inf, trace), cv
    return IntegralResult(float(cv.value), INCONCLUSIVE, float(cv.diagnostics), trace), cv


def integrate_improper(e, a: float, direction: str = "+inf", k_max: int = 6, k: Optional[int] = None,
                       X: float = 1e4, tol: float = 1e-3) -> IntegralResult:
    """(C) improper integral of e over [a, inf) (or (-inf, a] with direction "-inf").

    The indefinite integral is carried exactly up to the last singular point
    and continued by its density; its Cesàro limit at infinity is the value,
    with the order escalating up to ``k_max`` unless ``k`` is fixed.
    """
    if direction in ("+inf", "+", "inf"):
        return _improper(e, a, k, k_max, X, tol)[0]
    if direction in ("-inf", "-"):
        return _improper(reflect(e), -a, k, k_max, X, tol)[0]
    raise ValueError("direction must be '+inf' or '-inf'")


def reflect(e):
    """e(-x) as an expression."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Smooth):
        return Smooth(e.kind, tuple(c * (-1.0) ** i for i, c in enumerate(e.coeffs)))
    if isinstance(e, (Power, Chirp)):
        side = {"left": "right", "right": "left", "both": "both"}[e.side]
        if isinstance(e, Power):
            node = Power(e.alpha, -e.a, side, e.signed)
        else:
            node = Chirp(e.alpha, e.beta, e.kind, -e.a, side, e.signed)
        return Scale(-1.0, node) if e.signed else node
    if isinstance(e, StepSeq):
        raise UnsupportedTransform("step sequences accumulate from the right only")
    from .expr import Indicator
    if isinstance(e, Indicator):
        return Indicator(-e.hi, -e.lo)
    if isinstance(e, Restrict):
        return Restrict(-e.hi, -e.lo, reflect(e.body))
    if isinstance(e, Sum):
        return Sum(tuple(reflect(t) for t in e.terms))
    if isinstance(e, SmoothProduct):
        return SmoothProduct(reflect(e.smooth), reflect(e.general))
    if isinstance(e, Scale):
        return Scale(e.k, reflect(e.e))
    if isinstance(e, Periodic):
        return Periodic(e.period, shift(reflect(e.base), -e.period))
    raise TypeError(f"not an expression node: {e!r}")


def moment(e, n: int, k_max: int = 6, X: float = 1e4, tol: float = 1e-3) -> CesaroValue:
    """(C) moment: integral over the real line of e(x) x^n, split at 0."""
    if n < 0:
        raise ValueError("n must be a non-negative integer")
    weighted = e if n == 0 else SmoothProduct(poly(*([0.0] * n + [1.0])), e)
    lo, hi = support(e)
    if math.isfinite(lo) and math.isfinite(hi):
        r = dist_integrate(weighted, lo, hi)
        return CesaroValue(r.value, 0, "Converged" if r.status == FINITE else r.status, r.error_estimate, 0)
    right, cr = _improper(weighted, 0.0, None, k_max, X, tol)
    left, cl = _improper(reflect(weighted), 0.0, None, k_max, X, tol)
    orders = [c.order_k for c in (cr, cl) if c is not None]
    order = max(orders) if orders else 0
    statuses = {right.status, left.status}
    if statuses == {FINITE}:
        return CesaroValue(right.value + left.value, order, "Converged",
                           right.error_estimate + left.error_estimate, 0)
    if statuses == {PLUS_INFINITY, MINUS_INFINITY}:
        raise EvDisagreement({"right": right.value, "left": left.value},
                             "one-sided integrals diverge with opposite signs; the value depends on the split")
    if INCONCLUSIVE in statuses or NOT_INTEGRABLE in statuses and FINITE in statuses:
        return CesaroValue(float("nan"), order, "Inconclusive", math.inf, 0)
    return CesaroValue(float("nan"), order, "Diverged", math.inf, 0)


# ---------------------------------------------------------------------------
# Peano reconstruction


def reconstruct_from_peano(fn, inits: Sequence[float], a: float, b: float, n: int,
                           grid: Sequence[float]) -> list:
    """f(x) = sum_j inits[j] (x-a)^j / j! + integral from a to x of (x-t)^(n-1)/(n-1)! fn(t) dt."""
    if n < 1 or len(inits) != n:
        raise ValueError("need n >= 1 and exactly n initial values")
    out = []
    for x in grid:
        if not a <= x <= b:
            raise ValueError(f"grid point {x} outside [{a}, {b}]")
        taylor = math.fsum(c * (x - a) ** j / math.factorial(j) for j, c in enumerate(inits))
        # (x - t)^(n-1)/(n-1)! expanded in powers of t
        coeffs = [math.comb(n - 1, j) * x ** (n - 1 - j) * (-1.0) ** j / math.factorial(n - 1)
                  for j in range(n)]
        kernel = poly(*coeffs) if n > 1 else Const(1.0)
        body = fn if n == 1 else SmoothProduct(kernel, fn)
        r = dist_integrate(body, a, x)
        out.append((float(x), taylor + r.value if r.status == FINITE else float("nan")))
    return out


# ---------------------------------------------------------------------------
# change of variables


def _parse_transform(transform):
    if isinstance(transform, str):
        transform = (transform,)
    kind, *args = transform
    if kind == "affine" and len(args) == 2 and args[0] != 0:
        return kind, tuple(float(v) for v in args)
    if kind == "power" and len(args) == 1 and args[0] > 0:
        return kind, (float(args[0]),)
    if kind == "inverse" and not args:
        return kind, ()
    raise ValueError(f"bad transform {transform!r}")


def _compose(sm, inner: np.ndarray):
    """Smooth factor sm evaluated at the polynomial inner(t) (ascending coefficients)."""
    if sm is None:
        return None
    if isinstance(sm, Const):
        return sm
    if isinstance(sm, Smooth):
        out = np.zeros(1)
        power = np.ones(1)
        for c in sm.coeffs:
            out = np.polynomial.polynomial.polyadd(out, c * power)
            power = np.polynomial.polynomial.polymul(power, inner)
        return Smooth(sm.kind, tuple(float(c) for c in out))
    if isinstance(sm, SmoothProduct):
        return SmoothProduct(_compose(sm.smooth, inner), _compose(sm.general, inner))
    if isinstance(sm, Scale):
        return Scale(sm.k, _compose(sm.e, inner))
    if isinstance(sm, Sum):
        return Sum(tuple(_compose(t, inner) for t in sm.terms))
    raise UnsupportedTransform(f"cannot compose {type(sm).__name__}")


def _constant_value(sm) -> Optional[float]:
    if sm is None:
        return 1.0
    if isinstance(sm, Const):
        return sm.c
    if isinstance(sm, Smooth) and sm.kind == "poly" and len(sm.coeffs) == 1:
        return sm.coeffs[0]
    return None


def _build(coef, smooth, leaf, window):
    body = leaf if leaf is not None else (smooth if smooth is not None else Const(1.0))
    if leaf is not None and smooth is not None:
        body = SmoothProduct(smooth, leaf)
    if window is not None:
        body = Restrict(window[0], window[1], body)
    return Scale(coef, body)


def _affine_atom(at: Atom, p: float, q: float):
    leaf, coef = at.leaf, at.coef * p
    win = None
    if at.window is not None:
        ends = sorted(((at.window[0] - q) / p, (at.window[1] - q) / p))
        win = (ends[0], ends[1])
    smooth = _compose(at.smooth, np.array([q, p]))
    if leaf is None:
        new = None
    elif isinstance(leaf, Power) or (isinstance(leaf, Chirp) and abs(p) == 1.0):
        a2 = (leaf.a - q) / p
        side = leaf.side if p > 0 else {"left": "right", "right": "left", "both": "both"}[leaf.side]
        coef *= abs(p) ** leaf.alpha * (-1.0 if leaf.signed and p < 0 else 1.0)
        if isinstance(leaf, Power):
            new = Power(leaf.alpha, a2, side, leaf.signed)
        else:
            new = Chirp(leaf.alpha, leaf.beta, leaf.kind, a2, side, leaf.signed)
    elif isinstance(leaf, (StepSeq, Periodic)) and p == 1.0:
        new = shift(leaf, q)
    else:
        raise UnsupportedTransform(f"{type(leaf).__name__} is not closed under x = {p} t + {q}")
    return _build(coef, smooth, new, win)


def _right_factor(leaf) -> float:
    sp, _ = sigma(leaf.side, leaf.signed)
    return sp


def _power_atom(at: Atom, g: float):
    leaf, coef = at.leaf, at.coef * g
    if at.window is not None:
        w0, w1 = max(at.window[0], 0.0), at.window[1]
        if w1 <= 0:
            return Const(0.0)
        win = (w0 ** (1.0 / g), w1 ** (1.0 / g))
    else:
        win = None
    if at.smooth is not None:
        if float(g).is_integer():
            inner = np.zeros(int(g) + 1)
            inner[-1] = 1.0
            smooth = _compose(at.smooth, inner)
        else:
            cv = _constant_value(at.smooth)
            if cv is None:
                raise UnsupportedTransform("a non-constant smooth factor needs an integer power map")
            smooth, coef = None, coef * cv
    else:
        smooth = None
    if leaf is None:
        new = Power(g - 1.0, 0.0, "right") if g != 1.0 else None
    elif isinstance(leaf, (Power, Chirp)) and leaf.a == 0.0:
        coef *= _right_factor(leaf)
        expo = leaf.alpha * g + g - 1.0
        if isinstance(leaf, Power):
            new = Power(expo, 0.0, "right")
        else:
            new = Chirp(expo, leaf.beta * g, leaf.kind, 0.0, "right")
    else:
        raise UnsupportedTransform("the power map needs leaves centered at 0")
    return _build(coef, smooth, new, win)


def _inverse_atom(at: Atom):
    leaf, coef = at.leaf, at.coef
    win = None
    if at.window is not None:
        w0, w1 = at.window
        if w1 <= 0:
            return Const(0.0)
        win = (1.0 / w1, math.inf if w0 <= 0 else 1.0 / w0)
    cv = _constant_value(at.smooth)
    if leaf is None:
        if not (isinstance(at.smooth, Smooth) and at.smooth.kind == "poly") and cv is None:
            raise UnsupportedTransform("only polynomial factors map to sums of powers under x = 1/t")
        cs = (cv,) if cv is not None else at.smooth.coeffs
        terms = [_build(coef * c, None, Power(-j - 2.0, 0.0, "right"), win) for j, c in enumerate(cs) if c != 0]
        return Sum(tuple(terms)) if terms else Const(0.0)
    if cv is None:
        raise UnsupportedTransform("smooth factors on singular leaves do not survive x = 1/t")
    coef *= cv
    if isinstance(leaf, (Power, Chirp)) and leaf.a == 0.0:
        coef *= _right_factor(leaf)
        new = Power(-leaf.alpha - 2.0, 0.0, "right")
        if isinstance(leaf, Power):
            return _build(coef, None, new, win)
        if not float(leaf.beta).is_integer():
            raise UnsupportedTransform("x = 1/t turns the chirp into a smooth factor only for integer beta")
        trig = Smooth(leaf.kind, tuple([0.0] * int(leaf.beta) + [1.0]))
        return _build(coef, trig, new, win)
    raise UnsupportedTransform(f"{type(leaf).__name__} is not closed under x = 1/t")


def change_of_variables(e, transform, lo: float, hi: float) -> tuple:
    """Substitute x = phi(t) and integrate both sides.

    ``transform`` is ``("affine", p, q)`` for x = p t + q, ``("power", g)``
    for x = t^g on [0, hi], or ``"inverse"`` for x = 1/t, which sends (0, hi]
    to [1/hi, inf) and is evaluated as a (C) improper integral.  Returns the
    transformed integrand with the integrals before and after.
    """
    kind, args = _parse_transform(transform)
    if not lo < hi:
        raise ValueError("need lo < hi")
    ats = expand_atoms(e, lo, hi)
    if kind == "affine":
        p, q = args
        new = [_affine_atom(at, p, q) for at in ats]
        t0, t1 = (lo - q) / p, (hi - q) / p
    elif kind == "power":
        if lo != 0.0:
            raise ValueError("the power map needs lo = 0")
        (g,) = args
        new = [_power_atom(at, g) for at in ats]
        t0, t1 = 0.0, hi ** (1.0 / g)
    else:
        if lo < 0.0:
            raise ValueError("the inverse map needs lo >= 0")
        new = [_inverse_atom(at) for at in ats]
        t0, t1 = 1.0 / hi, (math.inf if lo == 0.0 else 1.0 / lo)
    te = new[0] if len(new) == 1 else Sum(tuple(new)) if new else Const(0.0)
    before = dist_integrate(e, lo, hi)
    if math.isinf(t1):
        after = integrate_improper(te, t0)
    else:
        after = dist_integrate(te, t0, t1)
    return te, before, after


# ---------------------------------------------------------------------------
# mean value theorems


def _bisect(r: Callable[[float], float], lo: float, hi: float, r_lo: float, iters: int = 80) -> float:
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        r_mid = r(mid)
        if r_mid == 0.0:
            return mid
        if (r_mid > 0) == (r_lo > 0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mvt_find_xi(kind: str, f, psi, a: float, b: float, tol: float = 1e-8, samples: int = 400) -> float:
    """A point xi in (a, b) satisfying one of the mean value identities.

    ``first``:  int f psi = f(xi) int psi, for psi >= 0;
    ``second``: int f psi = psi(a) int_a^xi f + psi(b) int_xi^b f, for monotone psi;
    ``bonnet``: int f psi = psi(b) int_xi^b f, for positive increasing psi.

    The residual is scanned on a grid and the first sign change is bisected;
    a residual above ``tol * max(1, |int f psi|)`` at the returned point is
    reported as :class:`ResidualNotBracketed` rather than returned.
    """
    psi = _as_expr(psi)
    if not is_smooth(psi):
        raise DomainError("psi must be a smooth expression")
    if not a < b:
        raise ValueError("need a < b")
    grid = np.linspace(a, b, samples + 1)
    pv = evaluate(psi, grid)
    rising = np.all(np.diff(pv) >= -1e-14 * np.max(np.abs(pv)))
    falling = np.all(np.diff(pv) <= 1e-14 * np.max(np.abs(pv)))
    if kind == "first" and not (np.all(pv >= 0) and np.any(pv > 0)):
        raise HypothesisViolation("psi must be non-negative and not identically zero")
    if kind == "second" and not (rising or falling):
        raise HypothesisViolation("psi must be monotone")
    if kind == "bonnet" and not (np.all(pv > 0) and rising):
        raise HypothesisViolation("psi must be positive and increasing")
    if kind not in ("first", "second", "bonnet"):
        raise ValueError("kind must be 'first', 'second' or 'bonnet'")
    whole = dist_integrate(SmoothProduct(psi, f), a, b)
    if whole.status != FINITE:
        raise ResidualNotBracketed(f"the integral of f psi is {whole.status}")
    I = whole.value
    pa, pb = _ev1(psi, a), _ev1(psi, b)
    inner = grid[1:-1]
    if kind == "first":
        m = dist_integrate(psi, a, b).value

        def r(x):
            v = eval_at(f, x)
            return math.nan if v is None else v * m - I

        rs = np.array([r(x) for x in inner])
    else:
        Fb = dist_integrate(f, a, b)
        if Fb.status != FINITE:
            raise ResidualNotBracketed(f"the integral of f is {Fb.status}")
        Fs = [0.0]
        for lo, hi in zip(grid[:-1], grid[1:-1]):
            Fs.append(Fs[-1] + dist_integrate(f, lo, hi).value)
        Fs = np.array(Fs[1:])

        def from_F(Fx):
            if kind == "second":
                return pa * Fx + pb * (Fb.value - Fx) - I
            return pb * (Fb.value - Fx) - I

        def r(x):
            i = int(np.searchsorted(grid, x)) - 1
            i = min(max(i, 0), len(grid) - 2)
            base = 0.0 if i == 0 else Fs[i - 1]
            return from_F(base + dist_integrate(f, grid[i], x).value)

        rs = from_F(Fs)
    scale = tol * max(1.0, abs(I))
    ok = np.isfinite(rs)
    hits = np.flatnonzero(ok & (np.abs(rs) <= scale))
    if hits.size:
        return float(inner[hits[0]])
    for i in range(len(inner) - 1):
        if ok[i] and ok[i + 1] and (rs[i] > 0) != (rs[i + 1] > 0):
            xi = _bisect(r, inner[i], inner[i + 1], rs[i])
            res = r(xi)
            if abs(res) <= scale:
                return xi
            raise ResidualNotBracketed(f"sign change near {xi:.6g} is a jump (residual {res:.3g})")
    raise ResidualNotBracketed("the residual keeps one sign on the sample grid")


# ---------------------------------------------------------------------------
# power weights


def power_weight_integrate(f, a: float, b: float, beta: float, end: str = "right",
                           tol: float = 1e-10) -> IntegralResult:
    """Integral of (x-a)^beta f (end="left") or (b-x)^beta f (end="right") over [a, b].

    The weight is smooth inside (a, b) and enters every strategy as a
    multiplier; obstructions of f are resolved by the local Cesàro limit of
    the weighted indefinite integral.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if end == "left":
        weight = lambda x: np.abs(np.asarray(x, dtype=float) - a) ** beta  # noqa: E731
    elif end == "right":
        weight = lambda x: np.abs(b - np.asarray(x, dtype=float)) ** beta  # noqa: E731
    else:
        raise ValueError("end must be 'left' or 'right'")
    return dist_integrate(f, a, b, tol=tol, weight=weight)
