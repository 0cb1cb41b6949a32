"""Sublinear expectation calculus over a finite ambiguity set.

Upper expectations are maxima of member expectations; lower expectations and
lower capacities are their conjugates. Nested expectations of functions of
several independent coordinates are computed by backward induction, which is
the computational content of sublinear independence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ambiguity import DEFAULT_TOL, AmbiguitySet, Atoms, Distribution
from .functions import TestFunction
from .quadrature import integrate


class GridResolutionError(ArithmeticError):
    def __init__(self, coarse: float, fine: float, tol: float):
        super().__init__(f"nested expectation grid under-resolved: |{fine} - {coarse}| > {tol}")
        self.coarse = coarse
        self.fine = fine
        self.achieved = abs(fine - coarse)


class TailTooHeavyError(ArithmeticError):
    pass


def _negate(f):
    if isinstance(f, TestFunction):
        return f.negate()
    return lambda *xs: -np.asarray(f(*xs), dtype=np.float64)


def upper_expectation(a: AmbiguitySet, f, tol: float = DEFAULT_TOL, points: Sequence[float] = ()) -> float:
    return max(m.expect(f, tol, points) for m in a.members)


def lower_expectation(a: AmbiguitySet, f, tol: float = DEFAULT_TOL, points: Sequence[float] = ()) -> float:
    return -upper_expectation(a, _negate(f), tol, points)


# ---------------------------------------------------------------- events


@dataclass(frozen=True)
class Event:
    """Finite union of disjoint half-open intervals ``[lo, hi)`` of the real line.

    Endpoints may be infinite. Intervals are stored sorted and merged.
    """

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = sorted((float(lo), float(hi)) for lo, hi in self.intervals if lo < hi)
        merged: list[list[float]] = []
        for lo, hi in ivs:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        object.__setattr__(self, "intervals", tuple((lo, hi) for lo, hi in merged))

    @classmethod
    def interval(cls, lo: float, hi: float = math.inf) -> "Event":
        return cls(((lo, hi),))

    @classmethod
    def real_line(cls) -> "Event":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def empty(cls) -> "Event":
        return cls(())

    def complement(self) -> "Event":
        out = []
        prev = -math.inf
        for lo, hi in self.intervals:
            if prev < lo:
                out.append((prev, lo))
            prev = hi
        if prev < math.inf:
            out.append((prev, math.inf))
        return Event(tuple(out))

    def union(self, other: "Event") -> "Event":
        return Event(self.intervals + other.intervals)

    def contains(self, x: float) -> bool:
        return any(lo <= x < hi for lo, hi in self.intervals)

    def prob(self, d: Distribution) -> float:
        if not self.intervals:
            return 0.0
        lo = np.array([iv[0] for iv in self.intervals])
        hi = np.array([iv[1] for iv in self.intervals])
        p = math.fsum(np.atleast_1d(d.interval_prob(lo, hi)).tolist())
        return min(max(p, 0.0), 1.0)


def upper_capacity(a: AmbiguitySet, event: Event) -> float:
    return max(event.prob(m) for m in a.members)


def lower_capacity(a: AmbiguitySet, event: Event) -> float:
    return 1.0 - upper_capacity(a, event.complement())


# ---------------------------------------------------------------- Choquet

LEVEL_GRID = 4096
# grid cells are ~1e-3 of the window wide; 52 halvings reach double resolution
BISECTION_STEPS = 52
# golden-section steps to pin an extremum inside a two-cell bracket
GOLDEN_STEPS = 80


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _refine_extrema(g: TestFunction, xs: np.ndarray, gv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Insert the local extrema of ``g`` between grid nodes.

    A node where the discrete slope changes sign brackets an extremum in the
    two adjacent cells; golden-section search locates it. With the extrema
    inserted, ``g`` is monotone on every cell up to oscillation finer than
    the grid.
    """
    dg = np.sign(np.diff(gv))
    j = np.nonzero(dg[:-1] * dg[1:] < 0)[0] + 1
    if not j.size:
        return xs, gv
    is_max = dg[j - 1] > 0
    a, b = xs[j - 1].copy(), xs[j + 1].copy()
    for _ in range(GOLDEN_STEPS):
        c = b - _INV_PHI * (b - a)
        e = a + _INV_PHI * (b - a)
        gc = np.asarray(g(c), dtype=np.float64)
        ge = np.asarray(g(e), dtype=np.float64)
        keep_left = np.where(is_max, gc >= ge, gc <= ge)
        b = np.where(keep_left, e, b)
        a = np.where(keep_left, a, c)
    ext = 0.5 * (a + b)
    new_x = np.concatenate([xs, ext])
    order = np.argsort(new_x, kind="stable")
    new_g = np.concatenate([gv, np.asarray(g(ext), dtype=np.float64)])
    return new_x[order], new_g[order]


@dataclass(frozen=True)
class _Tabulation:
    """``g`` on a grid over a law's window, refined at local extrema."""

    xs: np.ndarray
    gv: np.ndarray

    @classmethod
    def of(cls, d: Distribution, g: TestFunction, grid: int = LEVEL_GRID) -> "_Tabulation":
        lo, hi = d.window()
        xs = np.linspace(lo, hi, grid + 1)
        return cls(*_refine_extrema(g, xs, np.asarray(g(xs), dtype=np.float64)))

    def extreme_values(self) -> np.ndarray:
        """Values at interior local extrema: the capacity has kinks there."""
        dg = np.sign(np.diff(self.gv))
        return self.gv[1:-1][dg[:-1] * dg[1:] < 0]


def _level_set_prob(d: Distribution, g: TestFunction, t: np.ndarray, grid: int = LEVEL_GRID,
                    tab: _Tabulation | None = None) -> np.ndarray:
    """P_d(g(X) >= t) for each entry of ``t``.

    Atoms are exact. For continuous laws with monotone ``g`` the level set is
    a half-line found by bisection. Otherwise ``g`` is tabulated over the
    law's window with its local extrema inserted, so each cell holds at most
    one crossing of a level; crossings are refined by bisection and the
    resulting interval union is measured through the law's tail function.
    """
    t = np.asarray(t, dtype=np.float64)
    if isinstance(d, Atoms):
        vals = np.asarray(g(np.array(d.points)), dtype=np.float64)
        w = np.array(d.weights)
        p = (vals[None, :] >= t.reshape(-1, 1)) @ w
        return p.reshape(t.shape) if t.ndim else float(p[0])

    lo, hi = d.window()
    flat = t.reshape(-1)

    if g.monotone is not None:
        inc = g.monotone == "increasing"
        a = np.full(flat.shape, lo)
        b = np.full(flat.shape, hi)
        # invariant (increasing): g(a) < t <= g(b); (decreasing): g(a) >= t > g(b)
        for _ in range(64):
            m = 0.5 * (a + b)
            above = np.asarray(g(m), dtype=np.float64) >= flat
            if inc:
                b = np.where(above, m, b)
                a = np.where(above, a, m)
            else:
                a = np.where(above, m, a)
                b = np.where(above, b, m)
        g_lo = float(g(lo))
        g_hi = float(g(hi))
        if inc:
            p = np.where(flat <= g_lo, 1.0, np.where(flat > g_hi, 0.0, np.asarray(d.tail(b))))
        else:
            p = np.where(flat <= g_hi, 1.0, np.where(flat > g_lo, 0.0, 1.0 - np.asarray(d.tail(a))))
        return p.reshape(t.shape) if t.ndim else float(p[0])

    tab = tab or _Tabulation.of(d, g, grid)
    xs, gv = tab.xs, tab.gv
    mask = gv[None, :] >= flat[:, None]
    lev, cell = np.nonzero(mask[:, 1:] != mask[:, :-1])
    # the level set is a union of [start, end) pieces; P = sum tail(start) - sum tail(end)
    out = mask[:, 0].astype(np.float64)
    if lev.size:
        level = flat[lev]
        rising = ~mask[lev, cell]  # g crosses upward inside the cell
        ca, cb = xs[cell], xs[cell + 1]
        for _ in range(BISECTION_STEPS):
            cm = 0.5 * (ca + cb)
            up = np.asarray(g(cm), dtype=np.float64) >= level
            left_side = np.where(rising, ~up, up)
            ca = np.where(left_side, cm, ca)
            cb = np.where(left_side, cb, cm)
        tails = np.asarray(d.tail(0.5 * (ca + cb)), dtype=np.float64)
        out += np.bincount(lev, weights=np.where(rising, tails, -tails), minlength=flat.size)
    out = np.clip(out, 0.0, 1.0)
    return out.reshape(t.shape) if t.ndim else float(out[0])


def _range_on_windows(a: AmbiguitySet, g: TestFunction, tabs: dict) -> tuple[float, float, list[float]]:
    lows, highs, jumps = [], [], []
    for i, m in enumerate(a.members):
        if isinstance(m, Atoms):
            v = np.asarray(g(np.array(m.points)), dtype=np.float64)
            jumps.extend(v.tolist())
        elif i in tabs:
            v = tabs[i].gv
            jumps.extend(tabs[i].extreme_values().tolist())
        else:
            lo, hi = m.window()
            v = np.asarray(g(np.linspace(lo, hi, LEVEL_GRID + 1)), dtype=np.float64)
        lows.append(float(v.min()))
        highs.append(float(v.max()))
    return min(lows), max(highs), jumps


def _choquet(a: AmbiguitySet, g, reduce, tol: float) -> float:
    if not isinstance(g, TestFunction):
        g = TestFunction(1, g)
    tabs = {} if g.monotone is not None else {
        i: _Tabulation.of(m, g) for i, m in enumerate(a.members) if not isinstance(m, Atoms)}
    gmin, gmax, jumps = _range_on_windows(a, g, tabs)

    def capacity(t):
        probs = np.stack([np.asarray(_level_set_prob(m, g, t, tab=tabs.get(i))) for i, m in enumerate(a.members)])
        return reduce(probs, axis=0)

    total = 0.0
    if gmax > 0:
        total += integrate(capacity, 0.0, gmax, tol / 2, points=jumps).value
    if gmin < 0:
        total += integrate(lambda t: capacity(t) - 1.0, gmin, 0.0, tol / 2, points=jumps).value
    return total


def choquet_upper(a: AmbiguitySet, g, tol: float = 1e-8) -> float:
    """Choquet integral of g(X) against the upper capacity."""
    return _choquet(a, g, np.max, tol)


def choquet_lower(a: AmbiguitySet, g, tol: float = 1e-8) -> float:
    """Choquet integral against the lower capacity; v(g(X) >= t) = min over members."""
    return _choquet(a, g, np.min, tol)


# ---------------------------------------------------------------- truncation


def truncate(x, c: float):
    if c < 0:
        raise ValueError(f"truncation level must be nonnegative, got {c}")
    out = np.maximum(-c, np.minimum(x, c))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MeanFunctional:
    mu_lower: float
    mu_upper: float

    def __post_init__(self):
        if not self.mu_lower <= self.mu_upper:
            raise ValueError(f"mu_lower {self.mu_lower} exceeds mu_upper {self.mu_upper}")

    @classmethod
    def of(cls, a: AmbiguitySet) -> "MeanFunctional":
        return cls(*a.mean_interval)

    @property
    def degenerate(self) -> bool:
        return self.mu_lower == self.mu_upper


@dataclass(frozen=True)
class TruncatedMean:
    means: MeanFunctional
    level: float
    tail_bound: float


def abs_tail_capacity(a: AmbiguitySet, x):
    """V(|X| > x) for x >= 0 (as a function of x, equal almost everywhere)."""
    x = np.asarray(x, dtype=np.float64)
    probs = [np.asarray(m.tail(x)) + 1.0 - np.asarray(m.tail(-x)) for m in a.members]
    return np.minimum(np.max(np.stack(probs), axis=0), 1.0)


def tail_bound(a: AmbiguitySet, c: float, tol: float = 1e-12) -> float:
    """Integral of V(|X| > x) over x >= c, restricted to the members' windows."""
    reach = max(max(abs(lo), abs(hi)) for lo, hi in (m.window() for m in a.members))
    if c >= reach:
        return 0.0
    return integrate(lambda x: abs_tail_capacity(a, x), c, reach, tol).value


def truncated_mean_limit(a: AmbiguitySet, threshold: float = 1e-9, max_doublings: int = 62) -> TruncatedMean:
    """Stabilized (lower, upper) means of X truncated at c, with c doubling from 1."""
    c = 1.0
    for _ in range(max_doublings + 1):
        bound = tail_bound(a, c)
        if bound < threshold:
            f = TestFunction(1, lambda x, c=c: np.maximum(-c, np.minimum(x, c)), 1.0, 0, True,
                             "increasing", f"trunc({c})")
            up = upper_expectation(a, f, DEFAULT_TOL / 10, points=(-c, c))
            low = lower_expectation(a, f, DEFAULT_TOL / 10, points=(-c, c))
            return TruncatedMean(MeanFunctional(low, up), c, bound)
        c *= 2.0
    raise TailTooHeavyError(f"tail bound still >= {threshold} at truncation level {c / 2}")


# ---------------------------------------------------------------- nested expectation

MAX_GRID_CELLS = 20_000_000


def _hat_weights(d: Distribution, grid: np.ndarray) -> np.ndarray:
    """Expectations under ``d`` of the piecewise-linear hat functions on ``grid``.

    Integrating a tabulated function against these weights is the exact
    expectation of its linear interpolant. Mass outside the grid goes to the
    end nodes.
    """
    w = np.zeros(grid.size)
    if isinstance(d, Atoms):
        w[np.searchsorted(grid, np.array(d.points))] = d.weights
        return w
    lo, hi = grid[:-1], grid[1:]
    p, m1 = d.cell_moments(lo, hi)
    right = (m1 - lo * p) / (hi - lo)
    w[:-1] += p - right
    w[1:] += right
    w[0] += 1.0 - float(d.tail(grid[0]))
    w[-1] += float(d.tail(grid[-1]))
    return w / math.fsum(w.tolist())


def _axis_grid(a: AmbiguitySet, nodes: int) -> np.ndarray:
    atom_pts = [p for m in a.members if isinstance(m, Atoms) for p in m.points]
    windows = [m.core() for m in a.members if not isinstance(m, Atoms)]
    pts = list(atom_pts)
    if windows:
        lo = min(w[0] for w in windows)
        hi = max(w[1] for w in windows)
        pts.extend(np.linspace(lo, hi, nodes).tolist())
    return np.unique(np.array(pts, dtype=np.float64))


def _backward_induction(f: TestFunction, grid: np.ndarray, weights: np.ndarray) -> float:
    d = f.arity
    s = grid.size
    if s ** d > MAX_GRID_CELLS:
        raise ValueError(f"tensor grid of {s}^{d} cells exceeds {MAX_GRID_CELLS}; lower the node count")
    axes = [grid.reshape((1,) * k + (s,) + (1,) * (d - k - 1)) for k in range(d)]
    g = np.broadcast_to(np.asarray(f(*axes), dtype=np.float64), (s,) * d)
    for _ in range(d):
        g = (g @ weights.T).max(axis=-1)
    return float(g)


def _solve(a: AmbiguitySet, f: TestFunction, nodes: int) -> float:
    grid = _axis_grid(a, nodes)
    weights = np.stack([_hat_weights(m, grid) for m in a.members])
    return _backward_induction(f, grid, weights)


def default_nodes(arity: int, atoms: int = 0) -> int:
    """Largest per-axis node count whose refined grid fits the cell budget."""
    n = int(MAX_GRID_CELLS ** (1.0 / arity)) // 2 - atoms
    return max(n, 8)


@dataclass(frozen=True)
class NestedResult:
    value: float
    error_estimate: float
    nodes: int


def nested_expectation_detail(a: AmbiguitySet, f: TestFunction, nodes: int | None = None,
                              tol: float = 1e-2) -> NestedResult:
    if f.arity == 1:
        return NestedResult(upper_expectation(a, f), 0.0, 0)
    if all(isinstance(m, Atoms) for m in a.members):
        return NestedResult(_solve(a, f, 0), 0.0, 0)
    n_atoms = sum(len(m.points) for m in a.members if isinstance(m, Atoms))
    nodes = nodes or default_nodes(f.arity, n_atoms)
    coarse = _solve(a, f, nodes)
    fine = _solve(a, f, 2 * nodes - 1)
    if abs(fine - coarse) > tol:
        raise GridResolutionError(coarse, fine, tol)
    return NestedResult(fine, abs(fine - coarse), 2 * nodes - 1)


def nested_expectation(a: AmbiguitySet, f: TestFunction, nodes: int | None = None, tol: float = 1e-2) -> float:
    """Upper expectation of f(X_1, ..., X_d) for sublinearly independent copies of X.

    Backward induction: g_d = f, g_{k-1}(x_<k) = max over members of
    E[g_k(x_<k, X)], result g_0. Atom-only families are enumerated exactly on
    the union of their support points. Continuous members share a uniform
    per-axis grid over their windows; each g_k is tabulated there and
    integrated through its linear interpolant. The grid is refined once
    (halving the spacing) and a change above ``tol`` raises
    :class:`GridResolutionError`.
    """
    return nested_expectation_detail(a, f, nodes, tol).value
