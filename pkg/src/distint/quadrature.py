"""Absolute (Lebesgue-sense) integration of integrand expressions.

The workhorse is a vectorized, globally adaptive Gauss-Legendre rule with a
bisection error estimate.  Integrands are first flattened into atoms and
split at their singular points, so every panel carries at most one
singularity and only at an endpoint.  Endpoint behaviour is then handled
structurally:

* power singularities by the substitution ``x - c = t**p``, ``p = ceil(2/(1+alpha))``;
* chirps by integrating lobe by lobe in the phase variable ``v = |x-c|**-beta``,
  after peeling off an exact boundary part with :func:`distint.reduce.chirp_reduce`
  when the panel reaches the center;
* step sequences by exact cell sums plus a tail estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import (
    Atom, Chirp, DomainError, Periodic, Power, StepSeq, atoms, evaluate, shift, sigma,
    singular_points,
)

__all__ = ["QuadResult", "adaptive", "integrate_abs", "indefinite_samples", "DEFAULT_BUDGET"]

DEFAULT_BUDGET = 10_000_000
_MAX_LOBES = 400_000


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool

    def __neg__(self) -> "QuadResult":
        return QuadResult(-self.value, self.abs_error_estimate, self.evaluations, self.converged)


@lru_cache(maxsize=None)
def _rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


class _Acc:
    """Running budget and evaluation counter shared across one call tree."""

    def __init__(self, budget: int):
        self.budget = budget
        self.evals = 0
        self.exhausted = False

    def charge(self, n: int) -> None:
        self.evals += int(n)
        if self.evals > self.budget:
            self.exhausted = True


def _gl_batch(f: Callable, a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    x, w = _rule(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    return half * (vals @ w)


def _adaptive(f, a, b, tol, acc: _Acc, n: int = 15, max_depth: int = 60):
    """Batch bisection: returns (value, err). Deterministic ordering."""
    if a == b:
        return 0.0, 0.0
    total_width = abs(b - a)
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    whole = _gl_batch(f, lo, hi, n)
    abs_whole = _gl_batch(lambda x: np.abs(f(x)), lo, hi, n)
    acc.charge(2 * n)
    # tolerances below the rounding level of the integrand are unattainable
    tol = max(tol, 256 * np.finfo(float).eps * float(abs_whole[0]))
    pieces: list[tuple[float, float, float]] = []  # (left endpoint, value, err)
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        left = _gl_batch(f, lo, mid, n)
        right = _gl_batch(f, mid, hi, n)
        acc.charge(2 * n * lo.size)
        halves = left + right
        err = np.abs(halves - whole)
        floor = 64 * np.finfo(float).eps * (np.abs(left) + np.abs(right))
        err = np.maximum(err, floor)
        local_tol = tol * np.abs(hi - lo) / total_width
        done = (err <= local_tol) | (depth == max_depth) | acc.exhausted
        if not np.all(np.isfinite(halves)):
            raise DomainError("integrand not finite on the integration panel")
        for i in np.flatnonzero(done):
            pieces.append((float(lo[i]), float(halves[i]), float(err[i])))
        keep = ~done
        if not keep.any():
            break
        lo, mid_k, hi = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate([lo, mid_k])
        hi = np.concatenate([mid_k, hi])
        whole = np.concatenate([left[keep], right[keep]])
        order = np.argsort(lo, kind="stable")
        lo, hi, whole = lo[order], hi[order], whole[order]
    pieces.sort(key=lambda p: p[0])
    return math.fsum(p[1] for p in pieces), math.fsum(p[2] for p in pieces)


def adaptive(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float = 1e-10,
             budget: int = DEFAULT_BUDGET) -> QuadResult:
    """Adaptive Gauss-Legendre integration of a vectorized callable on [a, b]."""
    acc = _Acc(budget)
    if a > b:
        return -adaptive(f, b, a, tol, budget)
    v, err = _adaptive(f, a, b, tol, acc)
    return QuadResult(v, err, acc.evals, (not acc.exhausted) and err <= max(tol, tol * abs(v)))


# ---------------------------------------------------------------------------
# lobe integration for chirp panels


def _lobes(g: Callable, beta: float, u0: float, u1: float, offset: float, acc: _Acc,
           accelerate: bool = False, max_lobes: int = _MAX_LOBES):
    """Integrate g(u) over [u0, u1] (0 < u0 < u1) by phase lobes of v = u**-beta.

    Breakpoints sit at v = offset + k*pi; each lobe is split in two and
    integrated with 16- and 10-point rules, the difference being the error
    estimate.  Returns (value, err, partial sums at lobe boundaries from the
    outside in).
    """
    v_lo, v_hi = u1 ** (-beta), u0 ** (-beta)
    flat_v = max(2 * math.pi, v_lo)
    val = 0.0
    err = 0.0
    u_flat = min(u1, flat_v ** (-1.0 / beta))
    if u_flat < u1:
        # the outermost stretch is only mildly oscillatory
        lo_u = max(u0, u_flat)
        v, e = _adaptive(g, lo_u, u1, 1e-13 * max(1.0, u1 - lo_u), acc)
        val += v
        err += e
        if lo_u == u0:
            return val, err, np.array([val])
        v_lo = flat_v
    k0 = math.ceil((v_lo - offset) / math.pi)
    k1 = math.floor((v_hi - offset) / math.pi)
    if k1 - k0 > max_lobes:
        k1 = k0 + max_lobes
        acc.exhausted = True
    ks = np.arange(k0, k1 + 1, dtype=float)
    vb = offset + ks * math.pi
    vb = np.concatenate([[v_lo], vb[(vb > v_lo) & (vb < v_hi)], [v_hi] if k1 - k0 < max_lobes else []])
    vm = np.empty(2 * vb.size - 1)
    vm[0::2] = vb
    vm[1::2] = 0.5 * (vb[:-1] + vb[1:])
    ub = vm ** (-1.0 / beta)
    a, b = ub[1:], ub[:-1]  # a < b, ordered outside in
    total = np.zeros(a.size)
    coarse = np.zeros(a.size)
    chunk = 200_000
    for s in range(0, a.size, chunk):
        total[s:s + chunk] = _gl_batch(g, a[s:s + chunk], b[s:s + chunk], 16)
        coarse[s:s + chunk] = _gl_batch(g, a[s:s + chunk], b[s:s + chunk], 10)
    acc.charge(26 * a.size)
    lobe = total[0::2] + np.concatenate([total[1::2], [0.0] * (total[0::2].size - total[1::2].size)])
    err += float(np.sum(np.abs(total - coarse))) + 64 * np.finfo(float).eps * float(np.sum(np.abs(total)))
    partial = val + np.cumsum(lobe)
    return float(partial[-1]) if partial.size else val, err, np.concatenate([[val], partial])


def _euler_limit(partial: np.ndarray, depth: int = 10):
    """Limit of an alternating partial-sum sequence by iterated averaging."""
    s = np.asarray(partial[-(depth + 2):], dtype=float)
    prev = s[-1]
    for _ in range(min(depth, s.size - 1)):
        prev = s[-1]
        s = 0.5 * (s[1:] + s[:-1])
    return float(s[-1]), float(abs(s[-1] - prev))


# ---------------------------------------------------------------------------
# atom panels


def _smooth_max(atom: Atom, weight, xs: np.ndarray) -> float:
    v = np.ones_like(xs)
    if atom.smooth is not None:
        v = v * np.abs(evaluate(atom.smooth, xs))
    if weight is not None:
        v = v * np.abs(np.asarray(weight(xs), dtype=float))
    return float(np.max(v)) if v.size else 0.0


def _make_f(atom: Atom, weight):
    if weight is None:
        return atom.evaluate
    return lambda x: atom.evaluate(x) * np.asarray(weight(x), dtype=float)


def _power_panel(atom, leaf: Power, p, q, tol, weight, acc):
    c = leaf.a
    f = _make_f(atom, weight)
    touch = c in (p, q)
    if not touch:
        return _adaptive(f, p, q, tol, acc)
    s = 1.0 if p == c else -1.0
    sp, sm = sigma(leaf.side, leaf.signed)
    if (sp if s > 0 else sm) == 0.0:
        return 0.0, 0.0
    if leaf.alpha <= -1.0:
        raise DomainError(f"|x-{c}|^{leaf.alpha} is not absolutely integrable at {c}")
    if leaf.alpha >= 0 and float(leaf.alpha).is_integer():
        return _adaptive(f, p, q, tol, acc)
    L = q - p
    pw = max(1, math.ceil(2.0 / (1.0 + leaf.alpha)))

    # the leaf is evaluated from the exact offset u, not from x - c, which
    # loses all relative precision next to a center away from the origin
    rest = Atom(atom.coef, atom.smooth, None, atom.window)
    sg = sp if s > 0 else sm

    def g(t):
        u = L * t ** pw
        x = c + s * u
        v = rest.evaluate(x) * sg * u ** leaf.alpha
        if weight is not None:
            v = v * np.asarray(weight(x), dtype=float)
        return v * (L * pw * t ** (pw - 1))

    return _adaptive(g, 0.0, 1.0, tol, acc)


def _target_exponent(beta: float) -> float:
    return math.ceil(2.5 * beta)


def _chirp_panel(atom, leaf: Chirp, p, q, tol, weight, acc):
    c = leaf.a
    f = _make_f(atom, weight)
    s = 1.0 if p >= c else -1.0
    sp, sm = sigma(leaf.side, leaf.signed)
    if (sp if s > 0 else sm) == 0.0:
        return 0.0, 0.0
    u0, u1 = (p - c, q - c) if s > 0 else (c - q, c - p)
    offset = 0.0 if leaf.kind == "sin" else 0.5 * math.pi

    def g(u):
        return f(c + s * u)

    if u0 > 0:
        if u0 ** (-leaf.beta) <= 50.0:
            return _adaptive(f, p, q, tol, acc)
        v, e, _ = _lobes(g, leaf.beta, u0, u1, offset, acc)
        return v, e
    if leaf.alpha <= -1.0:
        raise DomainError(f"chirp with alpha={leaf.alpha} is not absolutely integrable at {c}")
    if weight is not None:
        return _chirp_weighted_tail(g, leaf, u1, tol, offset, acc)
    return _chirp_reduced(atom, leaf, p, q, s, u1, tol, acc)


def _chirp_weighted_tail(g, leaf: Chirp, u1, tol, offset, acc):
    # amplitude of a lobe near u is about u**(alpha+beta+1)*pi/beta; take enough
    # lobes that iterated averaging of the alternating partial sums settles
    expo = leaf.alpha + leaf.beta + 1.0
    v_stop = max(4000.0, (tol * leaf.beta) ** (-leaf.beta / expo) if tol > 0 else 4000.0)
    v_stop = min(v_stop, 4000.0 * math.pi)
    u_stop = v_stop ** (-1.0 / leaf.beta)
    if u_stop >= u1:
        u_stop = 0.5 * u1
    v, e, partial = _lobes(g, leaf.beta, u_stop, u1, offset, acc)
    if partial.size > 12:
        lim, de = _euler_limit(partial)
        return lim, e + de
    return v, e + abs(v)


def _chirp_reduced(atom, leaf: Chirp, p, q, s, u1, tol, acc):
    from .expr import Chirp as _C, Restrict, SmoothProduct, Scale
    from .reduce import chirp_reduce

    side = "right" if s > 0 else "left"
    sp, sm = sigma(leaf.side, leaf.signed)
    one = _C(leaf.alpha, leaf.beta, leaf.kind, leaf.a, side, False)
    body = one if atom.smooth is None else SmoothProduct(atom.smooth, one)
    k = atom.coef * (sp if s > 0 else sm)
    target = _target_exponent(leaf.beta)
    red = chirp_reduce(Scale(k, body), margin=target + 1.0)
    from .expr import eval_at
    gq = eval_at(red.G, q) if q != leaf.a else 0.0
    gp = eval_at(red.G, p) if p != leaf.a else 0.0
    boundary = (gq or 0.0) - (gp or 0.0)
    h_atoms = atoms(red.h)
    if not h_atoms:
        return boundary, 64 * np.finfo(float).eps * abs(boundary)
    xs = np.linspace(p, q, 65)
    bound_coef = 0.0
    e_min = math.inf
    for ha in h_atoms:
        e_min = min(e_min, ha.leaf.alpha)
        bound_coef += abs(ha.coef) * _smooth_max(ha, None, xs)
    # |integral over [0, eps] of h| <= bound_coef * eps**(e_min+1)/(e_min+1)
    eps = (0.1 * tol * (e_min + 1.0) / max(bound_coef, 1e-300)) ** (1.0 / (e_min + 1.0))
    eps = min(max(eps, _MAX_LOBES ** (-1.0 / leaf.beta)), 0.5 * u1)
    tail_bound = bound_coef * eps ** (e_min + 1.0) / (e_min + 1.0)
    h_fun = lambda x: sum(a.evaluate(x) for a in h_atoms)  # noqa: E731
    offset = 0.0
    v, e, _ = _lobes(lambda u: h_fun(leaf.a + s * u), leaf.beta, eps, u1, offset, acc)
    return boundary + v, e + tail_bound


def _step_cells(leaf: StepSeq, u0: float, u1: float, n_cap: int):
    """Cell indices and clipped local intervals covering (u0, u1) within (0, 1)."""
    u1 = min(u1, 1.0)
    n_first = max(1, math.floor(1.0 / u1 + 1e-12)) if u1 < 1.0 else 1
    if 1.0 / (n_first + 1) >= u1:
        n_first += 1
    if u0 > 0:
        n_last = max(n_first, math.ceil(1.0 / u0 - 1e-12) - 1)
        if 1.0 / n_last <= u0:
            n_last -= 1
        n_last = max(n_first, n_last)
    else:
        n_last = n_first + n_cap - 1
    n = np.arange(n_first, n_last + 1, dtype=float)
    lo = np.maximum(1.0 / (n + 1.0), u0)
    hi = np.minimum(1.0 / n, u1)
    keep = hi > lo
    return n[keep], lo[keep], hi[keep]


def _step_panel(atom, leaf: StepSeq, p, q, tol, weight, acc):
    a0 = leaf.a
    u0, u1 = max(p - a0, 0.0), min(q - a0, 1.0)
    if u1 <= u0:
        return 0.0, 0.0
    plain = atom.smooth is None and weight is None
    n_cap = 1 << 20 if plain else 1 << 16
    if u0 > 0 and (1.0 / u0 - 1.0 / u1) > 5e7:
        acc.exhausted = True
    chunks_val = []
    err = 0.0
    a_tail = None
    n_all, lo_all, hi_all = _step_cells(leaf, u0, u1, n_cap)
    for s in range(0, n_all.size, 1 << 20):
        n, lo, hi = n_all[s:s + (1 << 20)], lo_all[s:s + (1 << 20)], hi_all[s:s + (1 << 20)]
        cn = leaf.c(n)
        if plain:
            cells = atom.coef * cn * (hi - lo)
            acc.charge(n.size)
        else:
            x, w = _rule(8)
            pts = a0 + 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x[None, :]
            base = np.ones_like(pts)
            if atom.smooth is not None:
                base = base * evaluate(atom.smooth, pts)
            if weight is not None:
                base = base * np.asarray(weight(pts.ravel()), dtype=float).reshape(pts.shape)
            cells = atom.coef * cn * 0.5 * (hi - lo) * (base @ w)
            acc.charge(pts.size)
        if not np.all(np.isfinite(cells)):
            raise DomainError("step coefficients are not finite")
        chunks_val.append(cells)
        a_tail = cells
    cells = np.concatenate(chunks_val) if chunks_val else np.zeros(0)
    value = math.fsum(cells)
    err += 64 * np.finfo(float).eps * float(np.sum(np.abs(cells)))
    if u0 == 0.0 and cells.size > 64:
        tail, tail_err = _step_tail(cells, n_all)
        value += tail
        err += tail_err
    return value, err


def _step_tail(cells: np.ndarray, n: np.ndarray):
    """Tail of sum a_n beyond the last computed cell; requires |a_n| = O(n^-p), p > 1."""
    N = n.size
    q = N // 4
    s1 = float(np.sum(np.abs(cells[q:2 * q])))
    s2 = float(np.sum(np.abs(cells[2 * q:4 * q])))
    if s1 == 0.0 or s2 == 0.0:
        return 0.0, 0.0
    # a window twice as long carries 2**(1-p) of the mass for |a_n| ~ n**-p
    p_dec = 1.0 - math.log2(s2 / s1)
    if p_dec <= 1.05:
        raise DomainError("step sequence is not absolutely summable at its accumulation point")
    last = cells[-64:]
    nN = float(n[-1])
    bound = float(np.max(np.abs(last))) * nN / (p_dec - 1.0)
    signs = np.sign(last)
    if np.all(signs == signs[0]):
        def geometric_tail(w):
            # windows (w, 2w] and (2w, 4w] in index, tail beyond 4w
            a1 = float(np.sum(cells[w:2 * w]))
            a2 = float(np.sum(cells[2 * w:4 * w]))
            r = a2 / a1
            return a2 * r / (1.0 - r)

        tail = geometric_tail(q)
        coarse = geometric_tail(q // 2) - float(np.sum(cells[2 * q:4 * q]))
        return tail, abs(tail - coarse) + 1e-3 * abs(tail)
    if np.all(signs[1:] == -signs[:-1]):
        nxt = -float(last[-1]) * (nN / (nN + 1.0)) ** p_dec
        return 0.5 * nxt, abs(float(last[-1]) - abs(nxt)) + abs(nxt) * p_dec / nN
    return 0.0, bound


def _periodic_panel(atom, leaf: Periodic, p, q, tol, weight, acc):
    P = leaf.period
    k0 = math.floor(p / P)
    k1 = math.ceil(q / P)
    if k1 - k0 > 100_000:
        raise DomainError("too many periods in the integration range")
    val = []
    err = 0.0
    for k in range(k0, k1):
        lo, hi = max(p, k * P), min(q, (k + 1) * P)
        if hi <= lo:
            continue
        base = shift(leaf.base, -k * P)
        for sub in atoms(base):
            win = (k * P, (k + 1) * P)
            if sub.window is not None:
                win = (max(win[0], sub.window[0]), min(win[1], sub.window[1]))
            if win[1] <= win[0]:
                continue
            smooth = atom.smooth
            if sub.smooth is not None:
                from .expr import SmoothProduct
                smooth = sub.smooth if smooth is None else SmoothProduct(smooth, sub.smooth)
            sa = Atom(atom.coef * sub.coef, smooth, sub.leaf, win)
            v, e = _atom_integral(sa, lo, hi, tol / max(1, k1 - k0), weight, acc)
            val.append(v)
            err += e
    return math.fsum(val), err


def _atom_integral(atom: Atom, lo: float, hi: float, tol: float, weight, acc: _Acc):
    p, q = lo, hi
    if atom.window is not None:
        p, q = max(p, atom.window[0]), min(q, atom.window[1])
    if q <= p or atom.coef == 0.0:
        return 0.0, 0.0
    leaf = atom.leaf
    if leaf is None:
        return _adaptive(_make_f(atom, weight), p, q, tol, acc)
    if isinstance(leaf, Periodic):
        return _periodic_panel(atom, leaf, p, q, tol, weight, acc)
    if isinstance(leaf, StepSeq):
        return _step_panel(atom, leaf, p, q, tol, weight, acc)
    cuts = [p] + [c for c in singular_points(leaf, p, q) if p < c < q] + [q]
    vals = []
    err = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        t = tol * (b - a) / (q - p)
        if isinstance(leaf, Power):
            v, e = _power_panel(atom, leaf, a, b, t, weight, acc)
        else:
            v, e = _chirp_panel(atom, leaf, a, b, t, weight, acc)
        vals.append(v)
        err += e
    return math.fsum(vals), err


def integrate_abs(e, lo: float, hi: float, tol: float = 1e-10,
                  weight: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  budget: int = DEFAULT_BUDGET) -> QuadResult:
    """Absolute integral of e (times an optional smooth callable weight) over [lo, hi].

    Raises DomainError when a leaf is not absolutely integrable on the range.
    """
    if lo == hi:
        return QuadResult(0.0, 0.0, 0, True)
    if lo > hi:
        return -integrate_abs(e, hi, lo, tol, weight, budget)
    acc = _Acc(budget)
    parts = atoms(e)
    vals = []
    err = 0.0
    for atom in parts:
        v, er = _atom_integral(atom, lo, hi, tol / max(1, len(parts)), weight, acc)
        vals.append(v)
        err += er
    value = math.fsum(vals)
    converged = (not acc.exhausted) and err <= max(tol, tol * abs(value))
    return QuadResult(value, err, acc.evals, converged)


def indefinite_samples(e, base: float, grid: Sequence[float], tol: float = 1e-10) -> list[tuple[float, float]]:
    """(x, integral of e from base to x) for each grid point, sharing panels between points."""
    xs = sorted(set(float(x) for x in grid) | {float(base)})
    i0 = xs.index(float(base))
    F = {float(base): 0.0}
    run = 0.0
    for a, b in zip(xs[i0:-1], xs[i0 + 1:]):
        run += integrate_abs(e, a, b, tol).value
        F[b] = run
    run = 0.0
    for a, b in zip(xs[i0:0:-1], xs[i0 - 1::-1]):
        run -= integrate_abs(e, b, a, tol).value
        F[b] = run
    return [(float(x), F[float(x)]) for x in grid]
