"""Adapted mixture kernels that steer the running mean.

At step i the next coordinate is drawn from

    alpha * P_upper + (1 - alpha) * P_lower,   alpha = (phi - mu_lower) / (mu_upper - mu_lower),

where phi = phi_{i-1}(x_1, ..., x_{i-1}) is the current target and P_upper,
P_lower are members attaining the upper and lower mean. The conditional mean
of the draw is exactly phi, so S_n / n tracks the Cesaro mean of the targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .ambiguity import AmbiguitySet, ExtremalPair, extremal_pair
from .functions import TestFunction
from .rng import open_uniforms
from .sublinear import MeanFunctional

DEFAULT_MAX_PATH = 10 ** 9


class SteeringContractError(ValueError):
    """A target value left [mu_lower, mu_upper] or target bounds were misordered."""


class ScheduleOverflowError(ValueError):
    def __init__(self, num_blocks: int, max_length: int, max_feasible: int):
        super().__init__(f"oscillation schedule with {num_blocks} blocks needs {math.factorial(num_blocks)} "
                         f"steps > max path length {max_length}; max feasible num_blocks is {max_feasible}")
        self.max_feasible = max_feasible


def clamp_to_interval(y, m: MeanFunctional):
    out = np.maximum(m.mu_lower, np.minimum(y, m.mu_upper))
    return float(out) if np.ndim(out) == 0 else out


def mixture_weight(phi, m: MeanFunctional):
    """Weight on the upper-mean member; 1 when the mean interval is a point."""
    phi_arr = np.asarray(phi, dtype=np.float64)
    if np.any(phi_arr < m.mu_lower) or np.any(phi_arr > m.mu_upper) or np.any(np.isnan(phi_arr)):
        raise SteeringContractError(f"target value outside [{m.mu_lower}, {m.mu_upper}]; clamp first")
    if m.degenerate:
        out = np.ones_like(phi_arr)
    else:
        out = (phi_arr - m.mu_lower) / (m.mu_upper - m.mu_lower)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MixtureKernel:
    pair: ExtremalPair

    @classmethod
    def of(cls, a: AmbiguitySet) -> "MixtureKernel":
        return cls(extremal_pair(a))

    @property
    def means(self) -> MeanFunctional:
        return MeanFunctional(self.pair.mu_lower, self.pair.mu_upper)

    def weight_of(self, phi):
        return mixture_weight(phi, self.means)

    def draw(self, phi, u_mix, u_draw):
        """Kernel draws from explicit uniforms: upper member iff u_mix < alpha."""
        alpha = self.weight_of(phi)
        up = np.asarray(u_mix) < alpha
        hi = self.pair.p_upper.quantile(u_draw)
        lo = self.pair.p_lower.quantile(u_draw)
        out = np.where(up, hi, lo)
        return float(out) if out.ndim == 0 else out


def kernel_sample(k: MixtureKernel, phi: float, rng: np.random.Generator) -> float:
    u = open_uniforms(rng, 2)
    return k.draw(phi, u[0], u[1])


# ---------------------------------------------------------------- oscillation schedule


@dataclass(frozen=True)
class OscillationSchedule:
    """0/1 sequence in blocks: block k has length L_k and value 1 if k is odd.

    L_1 = 1 and L_k = (k - 1) * T_{k-1}, so the block ends are T_k = k!.
    """

    lengths: tuple[int, ...]
    ends: tuple[int, ...]

    @property
    def num_blocks(self) -> int:
        return len(self.lengths)

    @property
    def length(self) -> int:
        return self.ends[-1]

    @staticmethod
    def block_value(k: int) -> int:
        return 1 if k % 2 == 1 else 0

    def eps(self, i: int) -> int:
        """epsilon_i for 1 <= i <= T_K."""
        if not 1 <= i <= self.length:
            raise IndexError(f"schedule index {i} outside 1..{self.length}")
        k = int(np.searchsorted(self.ends, i, side="left")) + 1
        return self.block_value(k)

    def eps_range(self, start: int, stop: int) -> np.ndarray:
        """epsilon_i for start <= i < stop, as int8."""
        if start < 1 or stop - 1 > self.length:
            raise IndexError(f"schedule range [{start}, {stop}) outside 1..{self.length}")
        idx = np.arange(start, stop)
        blocks = np.searchsorted(np.array(self.ends), idx, side="left") + 1
        return (blocks % 2).astype(np.int8)

    def ones_at_block_ends(self) -> list[int]:
        out, total = [], 0
        for k, length in enumerate(self.lengths, start=1):
            total += length * self.block_value(k)
            out.append(total)
        return out

    def block_end_means(self) -> list[Fraction]:
        """Exact running means m_{T_k}."""
        return [Fraction(c, t) for c, t in zip(self.ones_at_block_ends(), self.ends)]

    def check_invariants(self) -> bool:
        for k, m in enumerate(self.block_end_means(), start=1):
            if k % 2 == 1 and m < Fraction(k - 1, k):
                return False
            if k % 2 == 0 and m > Fraction(1, k):
                return False
        return True


def oscillation_schedule(num_blocks: int, max_length: int = DEFAULT_MAX_PATH) -> OscillationSchedule:
    if num_blocks < 1:
        raise ValueError(f"num_blocks must be >= 1, got {num_blocks}")
    if math.factorial(num_blocks) > max_length:
        k = 1
        while math.factorial(k + 1) <= max_length:
            k += 1
        raise ScheduleOverflowError(num_blocks, max_length, k)
    lengths, ends = [1], [1]
    for k in range(2, num_blocks + 1):
        lengths.append((k - 1) * ends[-1])
        ends.append(ends[-1] + lengths[-1])
    return OscillationSchedule(tuple(lengths), tuple(ends))


# ---------------------------------------------------------------- target sequences


@dataclass(frozen=True)
class TargetSequence:
    """Targets phi_i(x_1, ..., x_i), i >= 0, valued in [mu_lower, mu_upper].

    For i < ``depth`` the target is the constant ``prefix``. From ``depth``
    on it depends only on the first ``depth`` coordinates (and, in
    oscillating mode, on the schedule value epsilon_i).
    """

    mode: str
    means: MeanFunctional
    prefix: float
    depth: int
    phi: Optional[TestFunction] = None
    phi_lo: Optional[TestFunction] = None
    phi_hi: Optional[TestFunction] = None
    schedule: Optional[OscillationSchedule] = None
    value: float = math.nan
    meta: dict = field(default_factory=dict, compare=False)

    def _head_values(self, head: Sequence[float]) -> tuple[float, float]:
        """Clamped (low, high) settled values for a given head x_1..x_depth."""
        m = self.means
        if self.mode == "constant":
            return self.value, self.value
        if self.mode == "finite_dim":
            v = clamp_to_interval(self.phi(*head), m)
            return v, v
        lo = clamp_to_interval(self.phi_lo(*head), m)
        hi = clamp_to_interval(self.phi_hi(*head), m)
        if lo > hi:
            raise SteeringContractError(f"phi_lo {lo} exceeds phi_hi {hi} at {tuple(head)}")
        return lo, hi

    def eval(self, i: int, xs: Sequence[float]) -> float:
        if i < self.depth:
            return self.prefix
        if len(xs) < self.depth:
            raise ValueError(f"need at least {self.depth} coordinates, got {len(xs)}")
        lo, hi = self._head_values(xs[:self.depth])
        if self.mode != "oscillating":
            return lo
        return lo + (hi - lo) * self.schedule.eps(i)

    def settled_values(self, head: Sequence[float], start: int, stop: int) -> np.ndarray:
        """phi_i for start <= i < stop, all i >= depth."""
        if start < self.depth:
            raise ValueError("settled values start at the target depth")
        lo, hi = self._head_values(head[:self.depth])
        if self.mode != "oscillating":
            return np.full(stop - start, lo)
        if start == 0:
            # phi_0 never needs epsilon_0; depth 0 is not used for oscillating mode
            raise ValueError("oscillating targets need depth >= 1")
        return lo + (hi - lo) * self.schedule.eps_range(start, stop).astype(np.float64)

    def limit(self, head: Sequence[float]) -> Optional[float]:
        """Almost-sure limit of the Cesaro means, when one exists."""
        if self.mode == "oscillating":
            lo, hi = self._head_values(head[:self.depth])
            return lo if lo == hi else None
        return self._head_values(head[:self.depth])[0]

    def cluster_interval(self, head: Sequence[float]) -> tuple[float, float]:
        return self._head_values(head[:self.depth])


def make_constant_targets(c: float, m: MeanFunctional) -> TargetSequence:
    v = clamp_to_interval(c, m)
    return TargetSequence("constant", m, v, 0, value=v)


def make_finite_dim_targets(phi: TestFunction, m: MeanFunctional, prefix: float = 0.0) -> TargetSequence:
    """Targets equal to the clamped prefix before step d and clamp(phi(x_1..x_d)) after."""
    return TargetSequence("finite_dim", m, clamp_to_interval(prefix, m), phi.arity, phi=phi)


def make_oscillating_targets(phi_lo: TestFunction, phi_hi: TestFunction, s: OscillationSchedule,
                             m: MeanFunctional, prefix: float = 0.0, probes: int = 2000,
                             seed: int = 0) -> TargetSequence:
    """phi_i = lo + (hi - lo) * epsilon_i for i >= d, with lo, hi the clamped bounds."""
    if phi_lo.arity != phi_hi.arity:
        raise ValueError("phi_lo and phi_hi must have the same arity")
    d = phi_lo.arity
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-10.0, 10.0, size=(probes, d))
    lo = clamp_to_interval(np.asarray(phi_lo(*pts.T), dtype=float), m)
    hi = clamp_to_interval(np.asarray(phi_hi(*pts.T), dtype=float), m)
    bad = np.nonzero(lo > hi)[0]
    if bad.size:
        raise SteeringContractError(f"phi_lo > phi_hi at probe point {pts[bad[0]].tolist()}")
    return TargetSequence("oscillating", m, clamp_to_interval(prefix, m), d,
                          phi_lo=phi_lo, phi_hi=phi_hi, schedule=s)
