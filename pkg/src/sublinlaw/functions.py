"""Test functions of the local-Lipschitz class and the named-form registry.

A :class:`TestFunction` wraps a numpy-vectorized callable of ``arity``
positional arguments together with its declared growth constants, i.e. the
claim ``|f(x) - f(y)| <= C (1 + |x|^m + |y|^m) |x - y|``.

Named forms are built from JSON-like specs through :func:`from_spec`; new
forms are added with :func:`register`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np


@dataclass(frozen=True)
class TestFunction:
    __test__ = False  # keep pytest from collecting this class

    arity: int
    fn: Callable[..., Any]
    growth_c: float = 1.0
    growth_m: int = 0
    bounded: bool = False
    monotone: Optional[str] = None  # "increasing" | "decreasing" | None
    name: str = "custom"

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"arity must be a positive integer, got {self.arity}")
        if self.monotone not in (None, "increasing", "decreasing"):
            raise ValueError(f"monotone must be 'increasing', 'decreasing' or None, got {self.monotone!r}")

    def __call__(self, *xs):
        if len(xs) != self.arity:
            raise TypeError(f"{self.name} takes {self.arity} arguments, got {len(xs)}")
        out = self.fn(*xs)
        if np.ndim(out) == 0 and all(np.ndim(x) == 0 for x in xs):
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=np.float64), np.broadcast(*xs).shape)

    def negate(self) -> "TestFunction":
        flip = {"increasing": "decreasing", "decreasing": "increasing"}.get(self.monotone)
        fn = self.fn
        return TestFunction(self.arity, lambda *xs: -fn(*xs), self.growth_c, self.growth_m,
                            self.bounded, flip, f"-{self.name}")

    def scale(self, lam: float) -> "TestFunction":
        fn = self.fn
        mono = self.monotone if lam > 0 else (None if lam == 0 else self.negate().monotone)
        return TestFunction(self.arity, lambda *xs: lam * fn(*xs), abs(lam) * self.growth_c,
                            self.growth_m, self.bounded, mono, f"{lam}*{self.name}")

    def check_growth(self, rng: np.random.Generator, pairs: int = 1000, spread: float = 10.0) -> bool:
        """Spot-check the declared growth bound on random pairs of points."""
        x = rng.uniform(-spread, spread, size=(pairs, self.arity))
        y = rng.uniform(-spread, spread, size=(pairs, self.arity))
        fx = np.asarray(self(*x.T), dtype=float)
        fy = np.asarray(self(*y.T), dtype=float)
        nx = np.linalg.norm(x, axis=1)
        ny = np.linalg.norm(y, axis=1)
        bound = self.growth_c * (1 + nx ** self.growth_m + ny ** self.growth_m) * np.linalg.norm(x - y, axis=1)
        return bool(np.all(np.abs(fx - fy) <= bound * (1 + 1e-12) + 1e-12))


def constant(c: float, arity: int = 1) -> TestFunction:
    c = float(c)
    return TestFunction(arity, lambda *xs: c + 0.0 * sum(xs), 0.0, 0, True, None, f"const({c})")


def identity() -> TestFunction:
    return TestFunction(1, lambda x: x + 0.0, 1.0, 0, False, "increasing", "x")


def projection(index: int, arity: int) -> TestFunction:
    if not 0 <= index < arity:
        raise ValueError(f"projection index {index} outside arity {arity}")
    mono = "increasing" if arity == 1 else None
    return TestFunction(arity, lambda *xs: xs[index] + 0.0, 1.0, 0, False, mono, f"x{index + 1}")


def abs_value() -> TestFunction:
    return TestFunction(1, np.abs, 1.0, 0, False, None, "|x|")


def positive_part() -> TestFunction:
    return TestFunction(1, lambda x: np.maximum(x, 0.0), 1.0, 0, False, None, "max(x,0)")


def polynomial(terms, arity: int) -> TestFunction:
    """Sum of ``coef * prod(x_j ** powers[j])`` over ``terms``.

    ``terms`` is a sequence of ``(coef, powers)`` with ``len(powers) == arity``.
    """
    parsed = []
    for coef, powers in terms:
        powers = tuple(int(p) for p in powers)
        if len(powers) != arity or any(p < 0 for p in powers):
            raise ValueError(f"term powers {powers} do not match arity {arity}")
        parsed.append((float(coef), powers))
    degree = max((sum(p) for _, p in parsed), default=0)

    def fn(*xs):
        total = 0.0
        for coef, powers in parsed:
            term = coef
            for x, p in zip(xs, powers):
                if p:
                    term = term * x ** p
            total = total + term
        return total + 0.0 * sum(xs)

    c = sum(abs(coef) * max(sum(p), 1) for coef, p in parsed) or 1.0
    mono = None
    if arity == 1 and degree <= 1:
        slope = sum(coef for coef, p in parsed if p[0] == 1)
        mono = "increasing" if slope > 0 else ("decreasing" if slope < 0 else None)
    return TestFunction(arity, fn, c, max(degree - 1, 0), degree == 0, mono, "poly")


def tanh_polynomial(terms, arity: int) -> TestFunction:
    inner = polynomial(terms, arity)
    mono = inner.monotone
    return TestFunction(arity, lambda *xs: np.tanh(inner.fn(*xs)), inner.growth_c, inner.growth_m,
                        True, mono, "tanh(poly)")


def ramp(a: float, b: float) -> TestFunction:
    """Piecewise-linear bump: 0 below ``a``, 1 above ``b``."""
    if not a < b:
        raise ValueError("ramp needs a < b")
    return TestFunction(1, lambda x: np.clip((x - a) / (b - a), 0.0, 1.0), 1.0 / (b - a), 0, True,
                        "increasing", f"ramp({a},{b})")


_REGISTRY: dict[str, Callable[..., TestFunction]] = {}


def register(name: str):
    def deco(builder):
        _REGISTRY[name] = builder
        return builder
    return deco


def registered_names() -> list[str]:
    return sorted(_REGISTRY)


def _terms_from_spec(spec: dict):
    return [(t["coef"], t["powers"]) for t in spec["terms"]]


@register("polynomial")
def _build_polynomial(spec):
    return polynomial(_terms_from_spec(spec), int(spec.get("arity", 1)))


@register("tanh_polynomial")
def _build_tanh_polynomial(spec):
    return tanh_polynomial(_terms_from_spec(spec), int(spec.get("arity", 1)))


@register("projection")
def _build_projection(spec):
    return projection(int(spec.get("index", 0)), int(spec.get("arity", 1)))


@register("constant")
def _build_constant(spec):
    return constant(spec["value"], int(spec.get("arity", 1)))


@register("identity")
def _build_identity(spec):
    return identity()


@register("abs")
def _build_abs(spec):
    return abs_value()


@register("positive_part")
def _build_positive_part(spec):
    return positive_part()


@register("ramp")
def _build_ramp(spec):
    return ramp(spec["a"], spec["b"])


def from_spec(spec: dict) -> TestFunction:
    """Build a registered form from ``{"name": ..., <parameters>}``."""
    try:
        builder = _REGISTRY[spec["name"]]
    except KeyError:
        raise ValueError(f"unknown function form {spec.get('name')!r}; known: {registered_names()}") from None
    return builder(spec)
