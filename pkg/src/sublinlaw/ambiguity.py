"""One-dimensional laws and finite ambiguity sets.

A finite family of distributions induces a sublinear expectation by taking
the maximum of the member expectations. Three parametric kinds are
supported: finitely many atoms, uniform on an interval, and gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .functions import TestFunction
from .quadrature import integrate
from .rng import normal_quantile, open_uniforms

DEFAULT_TOL = 1e-9

# Half-width, in standard deviations, of the integration window for gaussians.
# The discarded mass 2 * Phi(-12) is below 4e-33.
GAUSS_WINDOW = 12.0
# Half-width of the tabulation core used by grid methods; mass outside is < 2e-17.
GAUSS_CORE = 8.5


class Distribution:
    """Base class. Subclasses are immutable and hashable."""

    kind: str

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def tail(self, t):
        """P(X >= t); accepts scalars or arrays."""
        raise NotImplementedError

    def interval_prob(self, lo, hi):
        """P(lo <= X < hi)."""
        return self.tail(lo) - self.tail(hi)

    def expect(self, f, tol: float = DEFAULT_TOL, points: Sequence[float] = ()) -> float:
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(open_uniforms(rng, size))

    def window(self) -> tuple[float, float]:
        """Interval carrying all mass up to a negligible remainder."""
        raise NotImplementedError

    def core(self) -> tuple[float, float]:
        """Narrower interval for tabulation; defaults to the window."""
        return self.window()

    def cell_moments(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """P(lo <= X < hi) and E[X; lo <= X < hi] per cell (continuous kinds)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _as_callable(f):
    if isinstance(f, TestFunction) and f.arity != 1:
        raise ValueError(f"expected a one-argument test function, got arity {f.arity}")
    return f


@dataclass(frozen=True)
class Atoms(Distribution):
    points: tuple[float, ...]
    weights: tuple[float, ...]
    kind = "atoms"

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        wts = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if not pts or len(pts) != len(wts):
            raise ValueError("atoms: points and weights must be nonempty and of equal length")
        if not all(math.isfinite(p) for p in pts):
            raise ValueError("atoms: points must be finite")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("atoms: points must be strictly increasing")
        if any(not (w > 0) for w in wts):
            raise ValueError("atoms: weights must be strictly positive")
        if abs(math.fsum(wts) - 1.0) > 1e-12:
            raise ValueError(f"atoms: weights must sum to 1, got {math.fsum(wts)!r}")

    @property
    def mean(self) -> float:
        return math.fsum(p * w for p, w in zip(self.points, self.weights))

    def tail(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        pts = np.array(self.points)
        w = np.array(self.weights)
        # weights of atoms >= t; suffix sums keep tail(-inf) == sum(w) exactly
        suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        idx = np.searchsorted(pts, t_arr, side="left")
        out = np.minimum(suffix[idx], 1.0)
        out = np.where(idx == 0, 1.0, out)
        return float(out) if out.ndim == 0 else out

    def expect(self, f, tol: float = DEFAULT_TOL, points: Sequence[float] = ()) -> float:
        f = _as_callable(f)
        vals = np.asarray(f(np.array(self.points)), dtype=np.float64)
        return math.fsum((vals * np.array(self.weights)).tolist())

    def quantile(self, u):
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(cum, np.asarray(u, dtype=np.float64), side="left")
        idx = np.minimum(idx, len(self.points) - 1)
        out = np.array(self.points)[idx]
        return float(out) if out.ndim == 0 else out

    def window(self):
        return self.points[0], self.points[-1]

    def to_dict(self):
        return {"kind": "atoms", "points": list(self.points), "weights": list(self.weights)}


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float
    b: float
    kind = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise ValueError(f"uniform: need finite a < b, got a={self.a}, b={self.b}")

    @property
    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def tail(self, t):
        out = np.clip((self.b - np.asarray(t, dtype=np.float64)) / (self.b - self.a), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def expect(self, f, tol: float = DEFAULT_TOL, points: Sequence[float] = ()) -> float:
        f = _as_callable(f)
        scale = 1.0 / (self.b - self.a)
        return integrate(lambda x: scale * np.asarray(f(x), dtype=np.float64), self.a, self.b,
                         tol, points).value

    def quantile(self, u):
        out = self.a + (self.b - self.a) * np.asarray(u, dtype=np.float64)
        return float(out) if out.ndim == 0 else out

    def window(self):
        return self.a, self.b

    def cell_moments(self, lo, hi):
        left = np.clip(lo, self.a, self.b)
        right = np.clip(hi, self.a, self.b)
        p = (right - left) / (self.b - self.a)
        return p, p * 0.5 * (left + right)

    def to_dict(self):
        return {"kind": "uniform", "a": self.a, "b": self.b}


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Gaussian(Distribution):
    mu: float
    sd: float
    kind = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sd", float(self.sd))
        if not math.isfinite(self.mu):
            raise ValueError(f"gaussian: mean must be finite, got {self.mu}")
        if not (math.isfinite(self.sd) and self.sd > 0):
            raise ValueError(f"gaussian: sd must be > 0, got {self.sd}")

    @property
    def mean(self) -> float:
        return self.mu

    def tail(self, t):
        out = ndtr(-(np.asarray(t, dtype=np.float64) - self.mu) / self.sd)
        return float(out) if np.ndim(out) == 0 else out

    def expect(self, f, tol: float = DEFAULT_TOL, points: Sequence[float] = ()) -> float:
        f = _as_callable(f)
        mu, sd = self.mu, self.sd
        zpoints = [(p - mu) / sd for p in points]

        def integrand(z):
            return np.asarray(f(mu + sd * z), dtype=np.float64) * np.exp(-0.5 * z * z) * _INV_SQRT_2PI

        return integrate(integrand, -GAUSS_WINDOW, GAUSS_WINDOW, tol, zpoints).value

    def quantile(self, u):
        out = self.mu + self.sd * np.asarray(normal_quantile(u))
        return float(out) if out.ndim == 0 else out

    def window(self):
        return self.mu - GAUSS_WINDOW * self.sd, self.mu + GAUSS_WINDOW * self.sd

    def core(self):
        return self.mu - GAUSS_CORE * self.sd, self.mu + GAUSS_CORE * self.sd

    def cell_moments(self, lo, hi):
        za = (np.asarray(lo, dtype=np.float64) - self.mu) / self.sd
        zb = (np.asarray(hi, dtype=np.float64) - self.mu) / self.sd
        p = ndtr(zb) - ndtr(za)
        dens = _INV_SQRT_2PI * (np.exp(-0.5 * za * za) - np.exp(-0.5 * zb * zb))
        return p, self.mu * p + self.sd * dens

    def to_dict(self):
        return {"kind": "gaussian", "mean": self.mu, "sd": self.sd}


def distribution_from_dict(spec: dict) -> Distribution:
    kind = spec.get("kind")
    if kind == "atoms":
        return Atoms(tuple(spec["points"]), tuple(spec["weights"]))
    if kind == "uniform":
        return Uniform(spec["a"], spec["b"])
    if kind == "gaussian":
        return Gaussian(spec["mean"], spec["sd"])
    raise ValueError(f"unknown distribution kind {kind!r}")


def point_mass(c: float) -> Atoms:
    return Atoms((c,), (1.0,))


@dataclass(frozen=True)
class AmbiguitySet:
    members: tuple[Distribution, ...]

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("ambiguity set must have at least one member")
        for d in members:
            if not isinstance(d, Distribution):
                raise TypeError(f"member {d!r} is not a Distribution")

    @classmethod
    def from_dicts(cls, specs) -> "AmbiguitySet":
        return cls(tuple(distribution_from_dict(s) for s in specs))

    def to_dicts(self) -> list[dict]:
        return [m.to_dict() for m in self.members]

    @property
    def mean_interval(self) -> tuple[float, float]:
        means = [m.mean for m in self.members]
        return min(means), max(means)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


@dataclass(frozen=True)
class ExtremalPair:
    p_upper: Distribution
    p_lower: Distribution
    upper_index: int
    lower_index: int

    @property
    def mu_upper(self) -> float:
        return self.p_upper.mean

    @property
    def mu_lower(self) -> float:
        return self.p_lower.mean


def dist_expect(d: Distribution, f, tol: float = DEFAULT_TOL, points: Sequence[float] = ()) -> float:
    """E_d[f(X)]: exact for atoms, adaptive quadrature otherwise."""
    return d.expect(f, tol, points)


def extremal_pair(a: AmbiguitySet) -> ExtremalPair:
    """Members attaining the largest and smallest mean; ties go to the lowest index."""
    means = [m.mean for m in a.members]
    hi = max(range(len(means)), key=lambda i: (means[i], -i))
    lo = min(range(len(means)), key=lambda i: (means[i], i))
    return ExtremalPair(a.members[hi], a.members[lo], hi, lo)


def sample(d: Distribution, rng: np.random.Generator, size=None):
    return d.sample(rng, size)
