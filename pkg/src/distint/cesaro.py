"""Cesàro summability: (C,k) means of series, limits at infinity, local limits.

Three estimators share one idea: a function or sequence has a (C,k) limit
``L`` when its k-th primitive (or k-fold sum) behaves like ``L x^k/k!`` up to
a polynomial of lower degree and an ``o(x^k)`` remainder.

* :func:`cesaro_sum` uses the binomial (C,k) weights on partial sums.
* :func:`cesaro_limit_at_infinity` fits ``{1, x, ..., x^k}`` to the k-th
  primitive over the last decade of a mesh.
* :func:`local_cesaro_limit` does the same near a finite point ``b`` on a
  geometric mesh, re-anchoring the primitives inside each window so that the
  fit never has to see far-away mass.

When finite computation cannot decide, the answer is ``Inconclusive``; a
``Diverged`` verdict needs positive evidence of growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .expr import compile_sequence

__all__ = [
    "CesaroValue", "EvDisagreement", "cesaro_means", "cesaro_sum", "cesaro_limit_at_infinity",
    "local_cesaro_limit", "pv_ev_evaluate", "iterated_primitives",
]

CONVERGED, DIVERGED, INCONCLUSIVE = "Converged", "Diverged", "Inconclusive"
BLOWUP = 1e12


@dataclass(frozen=True)
class CesaroValue:
    value: float
    order_k: int
    status: str
    diagnostics: float
    terms_used: int

    @property
    def ok(self) -> bool:
        return self.status == CONVERGED


class EvDisagreement(ArithmeticError):
    """Ratio-dependent limits: the evaluation exists at most in the principal-value sense."""

    def __init__(self, values: dict, message: str = "e.v. limits disagree across ratios"):
        super().__init__(f"{message}: {values}")
        self.values = values


# ---------------------------------------------------------------------------
# series


def _terms(a, N: int) -> np.ndarray:
    if isinstance(a, str):
        a = compile_sequence(a)
    if callable(a):
        return np.asarray(a(np.arange(1, N + 1, dtype=float)), dtype=float)
    arr = np.asarray(a)
    arr = arr.astype(complex if np.iscomplexobj(arr) else float)
    return arr[:N]


def cesaro_means(terms: np.ndarray, k: int) -> np.ndarray:
    """(C,k) means of the partial sums s_0 = 0, s_1, ..., s_N (complex allowed)."""
    s = np.concatenate([[0.0], np.cumsum(terms)])
    n = np.arange(s.size, dtype=float)
    for _ in range(k):
        s = np.cumsum(s)
    # binom(n + k, k) computed in floating point, stable for large n
    norm = np.ones_like(n)
    for j in range(1, k + 1):
        norm = norm * (n + j) / j
    return s / norm


def _judge(means: np.ndarray, tol: float):
    """Status, value and tail-oscillation measure of a mean sequence."""
    N = means.size - 1
    value = means[-1]
    w0 = max(1, int(0.9 * N))
    window = means[w0:]
    osc = float(np.max(np.abs(window - value))) if np.iscomplexobj(window) else float(np.ptp(window))
    scale = max(1.0, abs(value))
    if not np.isfinite(value) or abs(value) > BLOWUP:
        return DIVERGED, value, osc
    if osc <= tol * scale:
        return CONVERGED, value, osc
    if not np.iscomplexobj(means) and N >= 16:
        q = means[N // 4:]
        d = np.diff(q)
        mono = np.all(d >= 0) or np.all(d <= 0)
        inc_late = abs(means[N] - means[N // 2])
        inc_early = abs(means[N // 2] - means[N // 4])
        if mono and inc_late >= 0.9 * inc_early and inc_late > tol * scale:
            return DIVERGED, value, osc
    return INCONCLUSIVE, value, osc


def _refine(means: np.ndarray, value, osc: float):
    """Sharpen a converged (C,k) mean by removing its O(1/N) drift.

    Averaging neighbours cancels the alternating part of the error; a
    Richardson step between N and N/2 then removes the smooth 1/N part.  The
    refinement is kept only when the same step one level coarser (N/2 and
    N/4) agrees with it better than it moved the value.
    """
    N = means.size - 1
    if N < 64:
        return value

    def step(n):
        h = n // 2
        m_n = 0.5 * (means[n] + means[n - 1])
        m_h = 0.5 * (means[h] + means[h - 1])
        return (n * m_n - h * m_h) / (n - h)

    ref, coarse = step(N), step(N // 2)
    if abs(ref - coarse) <= max(osc, 0.5 * abs(ref - value)):
        return ref
    return value


def cesaro_sum(a: Union[str, Callable, Sequence[float]], k: Optional[int] = None, N: int = 100_000,
               tol: float = 1e-4, k_max: int = 6) -> CesaroValue:
    """(C,k) sum of the series sum_{n>=1} a_n using N terms.

    With ``k=None`` the order escalates from 0 to ``k_max`` and the first
    converged order is returned.
    """
    terms = _terms(a, N)
    if k is not None:
        # a series summable at a lower order j has the same (C,k) sum, and
        # the lower-order means carry less finite-N bias
        for j in range(0, k):
            lower = _order(terms, j, tol)
            if lower.status == CONVERGED:
                return CesaroValue(lower.value, k, CONVERGED, lower.diagnostics, lower.terms_used)
        return _order(terms, k, tol)
    last = None
    for kk in range(0, k_max + 1):
        last = _order(terms, kk, tol)
        if last.status == CONVERGED:
            return last
    return last


def _order(terms: np.ndarray, k: int, tol: float) -> CesaroValue:
    means = cesaro_means(terms, k)
    status, value, osc = _judge(means, tol)
    if status == CONVERGED:
        value = _refine(means, value, osc)
    return CesaroValue(float(np.real(value)) if not np.iscomplexobj(value) else value,
                       k, status, osc, int(terms.size))


# ---------------------------------------------------------------------------
# iterated primitives on a mesh


def _panel_moments_from_callable(g: Callable, nodes: np.ndarray, m_max: int, n_gl: int = 24,
                                 sub: Optional[np.ndarray] = None) -> np.ndarray:
    """M[i, m] = integral over [x_i, x_{i+1}] (signed) of (x_{i+1} - t)^m g(t) dt."""
    x, w = np.polynomial.legendre.leggauss(n_gl)
    a, b = nodes[:-1], nodes[1:]
    nsub = np.ones(a.size, dtype=int) if sub is None else sub
    out = np.zeros((a.size, m_max + 1))
    for s in np.unique(nsub):
        idx = np.flatnonzero(nsub == s)
        aa, bb = a[idx], b[idx]
        edges = aa[:, None] + (bb - aa)[:, None] * (np.arange(s + 1) / s)[None, :]
        lo, hi = edges[:, :-1], edges[:, 1:]
        pts = 0.5 * (lo + hi)[..., None] + 0.5 * (hi - lo)[..., None] * x
        vals = np.asarray(g(pts.ravel()), dtype=float).reshape(pts.shape)
        half = 0.5 * (hi - lo)
        d = bb[:, None, None] - pts
        for m in range(m_max + 1):
            out[idx, m] = np.sum(half * ((vals * d ** m) @ w), axis=1)
    return out


def iterated_primitives(nodes: np.ndarray, moments: np.ndarray, order: int,
                        init: Optional[Sequence[float]] = None) -> np.ndarray:
    """Values P[j-1, i] of the j-th primitive (j = 1..order) of g at the nodes.

    The primitives are anchored at nodes[0] with values ``init`` (default 0)
    and propagated panel by panel with exact Taylor shifts plus the panel
    moments ``moments[i, m]`` (see :func:`_panel_moments_from_callable`).
    """
    P = np.zeros((order, nodes.size))
    if init is not None:
        P[:, 0] = init[:order]
    fact = [math.factorial(m) for m in range(order + 1)]
    h = np.diff(nodes)
    cur = P[:, 0].copy()
    for i in range(h.size):
        new = np.empty(order)
        for j in range(1, order + 1):
            acc = moments[i, j - 1] / fact[j - 1]
            for m in range(0, j - 1 + 1):
                if j - m >= 1:
                    acc += cur[j - m - 1] * h[i] ** m / fact[m]
            new[j - 1] = acc
        cur = new
        P[:, i + 1] = cur
    return P


# ---------------------------------------------------------------------------
# limits at infinity


def _fit_leading(x: np.ndarray, y: np.ndarray, k: int, X: float):
    """Least-squares fit y ~ sum_{i<=k} c_i (x/X)^i; returns (L, residual/x^k scaled)."""
    z = x / X
    V = np.vander(z, k + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    resid = y - V @ coef
    L = math.factorial(k) * coef[k] / X ** k
    return L, resid * math.factorial(k) / x ** k


def cesaro_limit_at_infinity(F: Optional[Callable] = None, k: Optional[int] = None, X: float = 1e4,
                             X0: float = 0.0, density: Optional[Callable] = None, F0: float = 0.0,
                             panel_width: float = 0.25, tol: float = 1e-3, k_max: int = 6,
                             moments: Optional[Callable] = None) -> CesaroValue:
    """(C,k) limit of F(x) as x -> +infinity.

    Supply either ``F`` (vectorized callable) or its ``density`` f with
    ``F(x) = F0 + integral from X0 to x of f``; a ``moments(lo, hi, m_max)``
    callback may replace ``density`` for panels needing structural quadrature.
    With ``k=None`` the order escalates from 0 to ``k_max``.
    """
    if F is None and density is None and moments is None:
        raise ValueError("need F, density or moments")
    npan = int(min(400_000, max(4000, math.ceil((X - X0) / panel_width))))
    nodes = X0 + (X - X0) * np.linspace(0.0, 1.0, npan + 1)
    orders = [k] if k is not None else list(range(0, k_max + 1))
    top = max(orders)
    if moments is not None:
        M = np.array([moments(nodes[i], nodes[i + 1], top + 1) for i in range(npan)])
        structural = True
    elif density is not None:
        M = _panel_moments_from_callable(density, nodes, top + 1, n_gl=16)
        structural = True
    else:
        M = _panel_moments_from_callable(F, nodes, top, n_gl=16)
        structural = False
    if structural:
        init = np.zeros(top + 2)
        prims = iterated_primitives(nodes, M, top + 1)
        Fvals = F0 + prims[0]
        # F^(-j) = F0 (x-X0)^j/j! + f^(-(j+1))
        P = [Fvals] + [F0 * (nodes - X0) ** j / math.factorial(j) + prims[j] for j in range(1, top + 1)]
    else:
        prims = iterated_primitives(nodes, M, top) if top > 0 else np.zeros((0, nodes.size))
        Fvals = np.asarray(F(nodes), dtype=float)
        P = [Fvals] + [prims[j - 1] for j in range(1, top + 1)]
    last = None
    fit_mask = nodes >= X0 + 0.1 * (X - X0)
    res_mask = nodes >= X0 + 0.5 * (X - X0)
    prev_mask = (nodes >= X0 + 0.01 * (X - X0)) & (nodes <= X0 + 0.1 * (X - X0))
    for kk in orders:
        y = P[kk]
        x = nodes - X0
        if kk == 0:
            L = float(y[-1])
            r = y - L
            osc = float(np.max(np.abs(r[res_mask])))
            L_prev = float(y[prev_mask][-1])
        else:
            L, r = _fit_leading(x[fit_mask], y[fit_mask], kk, X - X0)
            osc = float(np.max(np.abs(r[res_mask[fit_mask]])))
            L_prev, _ = _fit_leading(x[prev_mask], y[prev_mask], kk, 0.1 * (X - X0))
        scale = max(1.0, abs(L))
        if not np.isfinite(L) or abs(L) > BLOWUP:
            status = DIVERGED
        elif osc <= tol * scale and abs(L - L_prev) <= 10 * tol * scale:
            status = CONVERGED
        elif abs(L) > 2.0 * abs(L_prev) + tol and abs(L) > 1.0 / tol:
            status = DIVERGED
        else:
            status = INCONCLUSIVE
        last = CesaroValue(float(L), kk, status, osc, int(nodes.size))
        if status == CONVERGED:
            return last
    if last.status == INCONCLUSIVE and _grows(P[orders[-1]], nodes - X0, orders[-1]):
        return CesaroValue(last.value, last.order_k, DIVERGED, last.diagnostics, last.terms_used)
    return last


def _grows(y, x, k):
    """Evidence that y / x^k keeps growing in magnitude over the last decades."""
    n = y.size
    marks = [n // 100, n // 10, n - 1]
    vals = [abs(y[m]) / max(x[m], 1e-300) ** max(k, 0) for m in marks if m > 0]
    return len(vals) == 3 and vals[0] * 3 < vals[1] and vals[1] * 3 < vals[2]


# ---------------------------------------------------------------------------
# local (finite point) limits


def local_cesaro_limit(F: Optional[Callable] = None, a: float = 0.0, b: float = 1.0,
                       n: Optional[int] = None, n_max: int = 6, r: float = 0.9,
                       decades: float = 5.0, tol: float = 1e-7,
                       density: Optional[Callable] = None, F_a: float = 0.0,
                       moments: Optional[Callable] = None,
                       oscillation: Optional[Callable[[float], float]] = None) -> CesaroValue:
    """Local (C,n) limit of F(c) as c -> b from the side of a.

    ``F`` is a vectorized callable on the half-open range between a and b; or
    give ``density`` / ``moments(lo, hi, m_max)`` of f with ``F(c) = F_a +
    integral from a to c of f``.  The mesh is geometric, ``c_j = b + (a-b) r^j``,
    reaching ``decades`` decades toward b.  ``oscillation(tau)`` may return a
    local phase rate so callable moments subdivide panels accordingly.
    """
    if a == b:
        raise ValueError("a must differ from b")
    span = a - b
    J = int(math.ceil(decades * math.log(10.0) / -math.log(r)))
    tau = span * r ** np.arange(J + 1)
    nodes = b + tau
    orders = [n] if n is not None else list(range(0, n_max + 1))
    top = max(orders)
    structural = F is None
    m_needed = top + 1 if structural else max(top - 1, 0)
    if moments is not None:
        M = np.array([moments(nodes[i], nodes[i + 1], m_needed) for i in range(J)])
    else:
        g = density if structural else F
        if g is None:
            raise ValueError("need F, density or moments")
        sub = None
        if oscillation is not None:
            width = np.abs(np.diff(nodes))
            rate = np.array([oscillation(abs(t)) for t in tau[1:]])
            sub = np.clip(np.ceil(rate * width / 2.0), 1, 20_000).astype(int)
        M = _panel_moments_from_callable(g, nodes, m_needed, sub=sub)
    if structural:
        Fnodes = F_a + np.concatenate([[0.0], np.cumsum(M[:, 0])])
    else:
        Fnodes = np.asarray(F(nodes), dtype=float)
    s_step = max(1, int(round(math.log(0.5) / math.log(r))))
    per_dec = J / decades
    last = None
    prev_cross = None
    for nn in orders:
        idx = np.arange(0, J - nn * s_step + 1)
        if idx.size == 0:
            # the mesh is too short for this order's divided differences
            break
        ests = np.empty(idx.size)
        for t, j in enumerate(idx):
            sel = j + s_step * np.arange(nn + 1)
            if nn == 0:
                ests[t] = Fnodes[j]
                continue
            stop = sel[-1]
            x = nodes[j:stop + 1]
            q = nn + 1 if structural else nn
            prims = iterated_primitives(x, M[j:stop], q)
            if structural:
                y = Fnodes[j] * (x - x[0]) ** nn / math.factorial(nn) + prims[nn]
            else:
                y = prims[nn - 1]
            ests[t] = math.factorial(nn) * _divided_difference(x[sel - j], y[sel - j])
        taus = np.abs(nodes[idx] - b)
        L, diag = _extrapolate(taus, ests, per_dec)
        scale = max(1.0, abs(L))
        # two consecutive orders agreeing is a sharper error estimate than the
        # decade-to-decade drift, which mostly measures the outer decade's error
        cross = abs(L - last.value) if last is not None and last.order_k == nn - 1 else math.inf
        # on short meshes the drift is unavailable; three consecutive orders
        # agreeing within tol is then the evidence
        run = cross if prev_cross is None else max(cross, prev_cross)
        prev_cross = cross
        if np.isfinite(L) and diag <= tol * scale:
            status = CONVERGED
        elif np.isfinite(L) and cross <= tol * scale and diag <= math.sqrt(tol) * scale:
            status = CONVERGED
            diag = cross
        elif np.isfinite(L) and run <= tol * scale:
            status = CONVERGED
            diag = run
        elif _monotone_blowup(ests[-int(3 * per_dec):][:: max(1, int(per_dec // 2))]):
            status = DIVERGED
        else:
            status = INCONCLUSIVE
        last = CesaroValue(float(L), nn, status, float(diag), int(J + 1))
        if status == CONVERGED:
            return last
    if last is None:
        return CesaroValue(float("nan"), orders[0], INCONCLUSIVE, math.inf, int(J + 1))
    return last


def _divided_difference(x: np.ndarray, y: np.ndarray) -> float:
    d = np.array(y, dtype=float)
    for lvl in range(1, x.size):
        d[lvl:] = (d[lvl:] - d[lvl - 1:-1]) / (x[lvl:] - x[:-lvl])
    return float(d[-1])


def _extrapolate(taus: np.ndarray, ests: np.ndarray, per_dec: float):
    """Fit ests ~ L + c1 tau + c2 tau^2 on the innermost decade; compare with the decade before."""
    w = max(4, int(round(per_dec)))
    if ests.size == 0:
        return float("nan"), float("inf")
    if ests.size < 2 * w:
        return float(ests[-1]), float("inf")

    def fit(lo, hi):
        t = taus[lo:hi] / taus[lo]
        V = np.vander(t, 3, increasing=True)
        coef, *_ = np.linalg.lstsq(V, ests[lo:hi], rcond=None)
        return float(coef[0])

    n = ests.size
    inner = fit(n - w, n)
    outer = fit(n - 2 * w, n - w)
    return inner, abs(inner - outer)


def _monotone_blowup(ests: np.ndarray) -> bool:
    mags = np.abs(ests[-4:])
    return bool(np.all(np.diff(mags) > 0) and mags[-1] > 4 * mags[0] and mags[-1] > 10.0)


# ---------------------------------------------------------------------------
# principal-value and e.v. evaluations


def pv_ev_evaluate(g: Callable, mode: str = "pv", k: Optional[int] = None,
                   ratios: Sequence[float] = (0.5, 1.0, 2.0), X: float = 1e4,
                   tol: float = 1e-3, k_max: int = 6) -> CesaroValue:
    """(C,k) limit of g(x) - g(-x) (pv) or of g(a x) - g(-x) for every a in ratios (ev).

    In ev mode every branch must converge and agree within tolerance,
    otherwise :class:`EvDisagreement` is raised with the per-ratio results.
    """
    if mode == "pv":
        return cesaro_limit_at_infinity(lambda x: g(x) - g(-x), k=k, X=X, tol=tol, k_max=k_max)
    if mode != "ev":
        raise ValueError("mode must be 'pv' or 'ev'")
    if not ratios:
        raise ValueError("ratios must be nonempty")
    results = {}
    for a in ratios:
        results[float(a)] = cesaro_limit_at_infinity(lambda x, a=a: g(a * x) - g(-x), k=k, X=X,
                                                     tol=tol, k_max=k_max)
    vals = [r.value for r in results.values()]
    if any(r.status != CONVERGED for r in results.values()):
        raise EvDisagreement({a: (r.status, r.value) for a, r in results.items()},
                             "an e.v. branch failed to converge")
    ref = vals[0]
    if max(abs(v - ref) for v in vals) > 10 * tol * max(1.0, abs(ref)):
        raise EvDisagreement({a: r.value for a, r in results.items()})
    best = max(results.values(), key=lambda r: r.order_k)
    return CesaroValue(float(np.mean(vals)), best.order_k, CONVERGED,
                       max(r.diagnostics for r in results.values()), best.terms_used)
