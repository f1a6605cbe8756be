"""The phi-transform of a distribution and its boundary behaviour.

For a normalized kernel ``phi`` and a distribution ``d`` the transform is

    F(x, t) = <d(u), phi((u - x) / t) / t>,     t > 0,

which for a locally integrable part ``f`` is the smoothing
``int f(x + t y) phi(y) dy`` and for an atom ``c delta^(m)(u - x0)`` is
``c (-1)^m phi^(m)((x0 - x)/t) / t^(m+1)``.  Radial and angular limits of F as
t -> 0 recover point values; persistent drift to minus infinity is evidence
that ``d`` is not a positive measure.  The measure checks are heuristics on
finite meshes and are labelled as such.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .expr import Chirp, Const, atoms, evaluate, singular_points, support
from .integrate import FINITE, dist_integrate
from .quadrature import adaptive
from .reduce import EXISTS, INCONCLUSIVE, PointValue

__all__ = [
    "KernelSpec", "DistRep", "PhiField", "poisson", "bump", "phi_field", "field_value",
    "radial_extremes", "angular_extremes", "measure_verdict", "poisson_boundary",
    "MeasureConsistent", "ViolationAt", "MeasureInconclusive",
]


# ---------------------------------------------------------------------------
# kernels


@lru_cache(maxsize=None)
def _poisson_polys(m: int) -> tuple:
    # phi^(m)(y) = P_m(y) / (pi (1 + y^2)^(m+1))
    P = np.array([1.0])
    out = [P]
    for k in range(m):
        dP = np.polynomial.polynomial.polyder(P) if P.size > 1 else np.array([0.0])
        one = np.array([1.0, 0.0, 1.0])
        P = np.polynomial.polynomial.polysub(np.polynomial.polynomial.polymul(dP, one),
                                             2.0 * (k + 1) * np.polynomial.polynomial.polymul([0.0, 1.0], P))
        out.append(P)
    return tuple(out)


@lru_cache(maxsize=None)
def _bump_polys(m: int) -> tuple:
    # d^m/dz^m exp(-1/(1-z^2)) = exp(...) Q_m(z) / (1 - z^2)^(2m)
    pp = np.polynomial.polynomial
    Q = np.array([1.0])
    out = [Q]
    one_m = np.array([1.0, 0.0, -1.0])
    for k in range(m):
        dQ = pp.polyder(Q) if Q.size > 1 else np.array([0.0])
        term1 = pp.polymul([0.0, -2.0], Q)
        term2 = pp.polymul(pp.polymul(one_m, one_m), dQ)
        term3 = pp.polymul(pp.polymul([0.0, 4.0 * k], one_m), Q)
        Q = pp.polyadd(pp.polyadd(term1, term2), term3)
        out.append(Q)
    return tuple(out)


@lru_cache(maxsize=None)
def _bump_norm(R: float) -> float:
    t, w = np.polynomial.legendre.leggauss(200)
    # integrate exp(-1/(1-z^2)) over (-1, 1) in four pieces for a clean 1e-15 result
    edges = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        z = 0.5 * (a + b) + 0.5 * (b - a) * t
        total += 0.5 * (b - a) * float(np.exp(-1.0 / (1.0 - z * z)) @ w)
    return 1.0 / (R * total)


@dataclass(frozen=True)
class KernelSpec:
    """A normalized smoothing kernel.

    ``poisson`` is ``1/(pi (1 + y^2))``; ``bump`` is the standard
    ``exp(-1/(1-z^2))`` profile with ``z = (y - shift)/R``, normalized to unit
    mass.  A nonzero shift makes ``phi'(0) != 0``.
    """

    kind: str = "poisson"
    R: float = 1.0
    shift: float = 0.0
    normalized: bool = True

    def __post_init__(self):
        if self.kind not in ("poisson", "bump"):
            raise ValueError("kernel kind must be 'poisson' or 'bump'")
        if self.R <= 0:
            raise ValueError("R must be positive")

    @property
    def in_T0(self) -> bool:
        return True

    @property
    def in_T1(self) -> bool:
        # positive, normalized, and decaying like 1/y^2 or faster
        return True

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "poisson":
            return (-math.inf, math.inf)
        return (self.shift - self.R, self.shift + self.R)

    def derivative(self, y, m: int = 0) -> np.ndarray:
        """phi^(m)(y), vectorized."""
        y = np.asarray(y, dtype=float)
        if self.kind == "poisson":
            P = _poisson_polys(m)[m]
            return np.polynomial.polynomial.polyval(y, P) / (math.pi * (1.0 + y * y) ** (m + 1))
        z = (y - self.shift) / self.R
        inside = np.abs(z) < 1.0
        zz = np.where(inside, z, 0.0)
        one = 1.0 - zz * zz
        Q = _bump_polys(m)[m]
        with np.errstate(all="ignore"):
            v = np.exp(-1.0 / one) * np.polynomial.polynomial.polyval(zz, Q) / one ** (2 * m)
        return np.where(inside, _bump_norm(self.R) * v / self.R ** m, 0.0)

    def __call__(self, y) -> np.ndarray:
        return self.derivative(y, 0)


def poisson() -> KernelSpec:
    return KernelSpec("poisson")


def bump(R: float = 1.0, shift: float = 0.0) -> KernelSpec:
    return KernelSpec("bump", R, shift)


# ---------------------------------------------------------------------------
# distributions and fields


@dataclass(frozen=True)
class DistRep:
    """``fn_part`` plus a finite combination of derivatives of deltas.

    ``atoms`` holds ``(c, m, x0)`` meaning ``c * delta^(m)(x - x0)``.
    """

    fn_part: object = None
    atoms: tuple = ()

    def __post_init__(self):
        for c, m, x0 in self.atoms:
            if int(m) != m or m < 0:
                raise ValueError("atom order must be a non-negative integer")


@dataclass
class PhiField:
    kernel: KernelSpec
    grid_x: np.ndarray
    grid_t: np.ndarray
    values: np.ndarray
    status: np.ndarray = field(repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "t", "F", "status"])
        for i, x in enumerate(self.grid_x):
            for j, t in enumerate(self.grid_t):
                w.writerow([repr(float(x)), repr(float(t)), repr(float(self.values[i, j])), self.status[i, j]])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "kernel": {"kind": self.kernel.kind, "R": self.kernel.R, "shift": self.kernel.shift},
            "x": [float(x) for x in self.grid_x],
            "t": [float(t) for t in self.grid_t],
            "F": [[float(v) if np.isfinite(v) else None for v in row] for row in self.values],
            "status": [list(row) for row in self.status],
        }
        return json.dumps(doc, sort_keys=True)


def _atom_part(d: DistRep, kernel: KernelSpec, x: float, t: float) -> float:
    total = 0.0
    for c, m, x0 in d.atoms:
        total += c * (-1.0) ** m * float(kernel.derivative((x0 - x) / t, int(m))) / t ** (m + 1)
    return total


def _engine(f, lo: float, hi: float, weight, tol: float, cuts=()) -> tuple[float, str]:
    pts = sorted({lo, hi} | {c for c in cuts if lo < c < hi})
    total, status = 0.0, FINITE
    for p, q in zip(pts[:-1], pts[1:]):
        r = dist_integrate(f, p, q, tol=tol, weight=weight)
        if r.status != FINITE:
            status = r.status
        total += r.value
    return total, status


def _fn_part(f, kernel: KernelSpec, x: float, t: float, Y: float = 50.0, tol: float = 1e-11):
    """(value, status) of int f(u) phi((u - x)/t) du / t."""
    if f is None or (isinstance(f, Const) and f.c == 0.0):
        return 0.0, FINITE
    weight = lambda u: kernel((np.asarray(u, dtype=float) - x) / t) / t  # noqa: E731
    s_lo, s_hi = support(f)
    k_lo, k_hi = kernel.support
    lo, hi = max(s_lo, x + t * k_lo), min(s_hi, x + t * k_hi)
    if hi <= lo:
        return 0.0, FINITE
    if kernel.kind == "bump":
        return _engine(f, lo, hi, weight, tol)

    # Poisson: y = tan(theta) turns the kernel into d(theta)/pi; pieces of f
    # that are smooth go through the angle variable, the rest through the engine
    def g(theta):
        return evaluate(f, x + t * np.tan(theta)) / math.pi

    def theta(u):
        return math.atan((u - x) / t) if math.isfinite(u) else math.copysign(math.pi / 2, u)

    pts = singular_points(f, max(lo, x - 1e6), min(hi, x + 1e6))
    if not pts:
        return adaptive(g, theta(lo), theta(hi), tol).value, FINITE
    w_lo = max(lo, min([x - Y * t] + [p - 1.0 for p in pts]))
    w_hi = min(hi, max([x + Y * t] + [p + 1.0 for p in pts]))
    # the weight varies on the scale t around x: cut geometrically there
    scales = t * 4.0 ** np.arange(-3, 40)
    cuts = [x] + list(x + scales) + list(x - scales)
    # a cut deep inside a chirp's oscillation zone would leave a panel with
    # millions of lobes; the panel touching the center handles that zone whole
    zones = [(at.leaf.a, 1e4 ** (-1.0 / at.leaf.beta)) for at in atoms(f) if isinstance(at.leaf, Chirp)]
    cuts = [c for c in cuts if all(abs(c - a) >= r for a, r in zones)]
    total, status = _engine(f, w_lo, w_hi, weight, tol, cuts)
    if status != FINITE:
        return total, status
    if hi > w_hi:
        total += adaptive(g, theta(w_hi), theta(hi), tol).value
    if lo < w_lo:
        total += adaptive(g, theta(lo), theta(w_lo), tol).value
    return total, FINITE


def field_value(d: DistRep, kernel: KernelSpec, x: float, t: float) -> tuple[float, str]:
    """F(x, t) with its integration status."""
    if t <= 0:
        raise ValueError("t must be positive")
    v, status = _fn_part(d.fn_part, kernel, x, t)
    return v + _atom_part(d, kernel, x, t), status


def phi_field(d: DistRep, kernel: KernelSpec, grid_x: Sequence[float], grid_t: Sequence[float]) -> PhiField:
    """The transform on a grid; t is stored decreasing toward 0."""
    gx = np.sort(np.asarray(grid_x, dtype=float))
    gt = np.sort(np.asarray(grid_t, dtype=float))[::-1]
    if gt.size == 0 or gt[-1] <= 0:
        raise ValueError("grid_t must hold positive values")
    vals = np.empty((gx.size, gt.size))
    status = np.empty((gx.size, gt.size), dtype=object)
    for i, x in enumerate(gx):
        for j, t in enumerate(gt):
            vals[i, j], status[i, j] = field_value(d, kernel, x, t)
    return PhiField(kernel, gx, gt, vals, status)


# ---------------------------------------------------------------------------
# radial and angular behaviour

DEFAULT_T_MESH = tuple(np.geomspace(1.0, 1e-14, 57))


def _extremes(values: np.ndarray, t: np.ndarray) -> tuple[float, float]:
    """limsup / liminf estimates over the finer half of the mesh, with infinity flags."""
    tail = values[values.size // 2:]
    tt = t[t.size // 2:]
    sup, inf = float(np.max(tail)), float(np.min(tail))
    mags = np.abs(tail[-8:])
    growing = bool(np.all(np.diff(mags) > 0))
    if growing and mags[-1] > 1e6:
        slope = np.polyfit(np.log(tt[-8:]), np.log(mags), 1)[0]
        if mags[-1] > 1e12 or slope <= -0.5:
            if tail[-1] > 0:
                sup = math.inf
            else:
                inf = -math.inf
    return sup, inf


def radial_extremes(d: DistRep, kernel: KernelSpec, x0: float,
                    t_mesh: Sequence[float] = DEFAULT_T_MESH) -> tuple[float, float]:
    """(upper, lower) radial values of F(x0, t) as t -> 0 on a geometric mesh.

    A finite mesh can only suggest these limits; blow-up is flagged as an
    infinity when |F| grows monotonically like a negative power of t.
    """
    t = np.sort(np.asarray(t_mesh, dtype=float))[::-1]
    vals = np.array([field_value(d, kernel, x0, tt)[0] for tt in t])
    return _extremes(vals, t)


def angular_extremes(d: DistRep, kernel: KernelSpec, x0: float, slope: float = 1.0,
                     t_mesh: Sequence[float] = DEFAULT_T_MESH, rays: int = 9) -> tuple[float, float]:
    """(upper, lower) values of F over the cone |x - x0| <= slope * t."""
    t = np.sort(np.asarray(t_mesh, dtype=float))[::-1]
    offsets = np.linspace(-slope, slope, rays)
    hi = np.empty(t.size)
    lo = np.empty(t.size)
    for j, tt in enumerate(t):
        v = np.array([field_value(d, kernel, x0 + o * tt, tt)[0] for o in offsets])
        hi[j], lo[j] = np.max(v), np.min(v)
    return _extremes(hi, t)[0], _extremes(lo, t)[1]


@dataclass(frozen=True)
class MeasureConsistent:
    detail: str = ""


@dataclass(frozen=True)
class ViolationAt:
    x: float
    t: float
    value: float


@dataclass(frozen=True)
class MeasureInconclusive:
    detail: str = ""


def measure_verdict(d: DistRep, kernel: KernelSpec, region: tuple[float, float], x_samples: int = 41,
                    t_mesh: Sequence[float] = tuple(np.geomspace(1.0, 1e-9, 28)), slope: float = 1.0,
                    m_max: float = 1e6, fraction: float = 0.05):
    """Heuristic check that d could be a positive measure on ``region``.

    Lower angular values are sampled on an x-mesh.  A drift below ``-m_max``
    with decreasing t at any sample, or a clearly negative lower value on at
    least ``fraction`` of the samples, gives a :class:`ViolationAt` witness.
    MeasureConsistent is evidence from a finite mesh, not a proof.
    """
    if not kernel.in_T1:
        raise ValueError("the kernel must be positive with unit mass")
    lo, hi = region
    xs = np.linspace(lo, hi, x_samples)
    t = np.sort(np.asarray(t_mesh, dtype=float))[::-1]
    offsets = np.linspace(-slope, slope, 5)
    negative = []
    undecided = 0
    for x in xs:
        lows = np.empty(t.size)
        where = np.empty(t.size)
        bad_status = False
        for j, tt in enumerate(t):
            best, arg = math.inf, x
            for o in offsets:
                v, st = field_value(d, kernel, x + o * tt, tt)
                bad_status |= st != FINITE
                if v < best:
                    best, arg = v, x + o * tt
            lows[j], where[j] = best, arg
        if bad_status:
            undecided += 1
            continue
        tail = lows[-6:]
        if tail[-1] < -m_max and np.all(np.diff(tail) < 0):
            return ViolationAt(float(where[-1]), float(t[-1]), float(tail[-1]))
        if np.max(tail) < -1e-6 * max(1.0, np.max(np.abs(tail))):
            negative.append((float(where[-1]), float(t[-1]), float(tail[-1])))
    if len(negative) >= fraction * xs.size:
        return ViolationAt(*negative[0])
    if undecided:
        return MeasureInconclusive(f"{undecided} samples could not be integrated")
    if negative:
        return MeasureInconclusive("isolated negative lower values")
    return MeasureConsistent(f"{xs.size} samples, lower values bounded below")


def poisson_boundary(e, w: float, approach: str = "radial", slope: float = 1.0,
                     t_mesh: Sequence[float] = tuple(np.geomspace(1e-1, 1e-7, 13)),
                     tol: float = 1e-3) -> PointValue:
    """Boundary value at (w, 0) of the Poisson integral of e.

    ``approach`` is ``"radial"`` (straight down) or ``"angular"`` (both edges
    of the cone of the given slope).  Exists when the last three estimates
    agree within ``tol``.
    """
    kernel = poisson()
    d = DistRep(e)
    t = np.sort(np.asarray(t_mesh, dtype=float))[::-1]
    if approach == "radial":
        paths = [0.0]
    elif approach == "angular":
        paths = [-slope, slope]
    else:
        raise ValueError("approach must be 'radial' or 'angular'")
    rows = []
    for o in paths:
        rows.append([field_value(d, kernel, w + o * tt, tt)[0] for tt in t])
    vals = np.array(rows)
    tail = vals[:, -3:]
    v = float(np.mean(tail[:, -1]))
    spread = float(np.max(tail) - np.min(tail))
    if np.all(np.isfinite(tail)) and spread <= tol * max(1.0, abs(v)):
        return PointValue(v, 0, EXISTS, None, f"spread {spread:.3g}")
    return PointValue(v, 0, INCONCLUSIVE, None, f"spread {spread:.3g}")
