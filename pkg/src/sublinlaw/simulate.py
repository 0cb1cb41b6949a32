"""Path generation under the steered measure and strong-law diagnostics.

Random stream layout: path ``j`` of a run with master seed ``s`` draws from
``rng.path_generator(s, j)`` one ``(n, 2)`` block of open uniforms. Row
``i - 1`` holds ``(u_mix, u_draw)`` for step ``i``: the mixture coin is
``u_mix < alpha`` and the coordinate is the chosen member's quantile at
``u_draw``. Baseline paths use the same block and ignore ``u_mix``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ambiguity import AmbiguitySet
from .rng import open_uniforms, path_generator
from .steering import MixtureKernel, TargetSequence


@dataclass(frozen=True, eq=False)
class Path:
    seed: int
    path_index: int
    xs: np.ndarray
    targets: np.ndarray  # targets[i - 1] is phi_{i-1}, the value used to draw x_i

    @classmethod
    def from_values(cls, xs: Sequence[float], targets: Optional[Sequence[float]] = None) -> "Path":
        xs = np.asarray(xs, dtype=np.float64)
        tg = np.zeros_like(xs) if targets is None else np.asarray(targets, dtype=np.float64)
        if tg.shape != xs.shape:
            raise ValueError("xs and targets must have equal length")
        return cls(-1, -1, xs, tg)

    @property
    def n(self) -> int:
        return int(self.xs.size)

    @property
    def running_mean(self) -> np.ndarray:
        return np.cumsum(self.xs) / np.arange(1, self.n + 1)

    def target_cesaro(self) -> np.ndarray:
        return np.cumsum(self.targets) / np.arange(1, self.n + 1)


def _uniform_block(seed: int, path_index: int, n: int) -> np.ndarray:
    return open_uniforms(path_generator(seed, path_index), (n, 2))


def simulate_path(a: AmbiguitySet, t: TargetSequence, n: int, seed: int, path_index: int = 0) -> Path:
    """One path of length n under the adapted mixture kernel."""
    if n < 1:
        raise ValueError(f"path length must be >= 1, got {n}")
    kernel = MixtureKernel.of(a)
    u = _uniform_block(seed, path_index, n)
    xs = np.empty(n)
    targets = np.empty(n)
    head = min(t.depth, n)
    for i in range(1, head + 1):
        phi = t.eval(i - 1, xs[:i - 1])
        targets[i - 1] = phi
        xs[i - 1] = kernel.draw(phi, u[i - 1, 0], u[i - 1, 1])
    if n > head:
        phi = t.settled_values(xs[:t.depth], head, n)
        targets[head:] = phi
        xs[head:] = kernel.draw(phi, u[head:, 0], u[head:, 1])
    return Path(seed, path_index, xs, targets)


def baseline_path(a: AmbiguitySet, member_index: int, n: int, seed: int, path_index: int = 0) -> Path:
    """I.i.d. draws from a single member."""
    if not 0 <= member_index < len(a.members):
        raise IndexError(f"member {member_index} not in a family of {len(a.members)}")
    d = a.members[member_index]
    u = _uniform_block(seed, path_index, n)
    xs = np.asarray(d.quantile(u[:, 1]), dtype=np.float64)
    return Path(seed, path_index, xs, np.full(n, d.mean))


def martingale_residuals(p: Path) -> np.ndarray:
    """(1/n) * sum_{i<=n} (x_i - phi_{i-1}) for every n."""
    return np.cumsum(p.xs - p.targets) / np.arange(1, p.n + 1)


def _window_start(n: int, tail_fraction: float) -> int:
    if not 0 < tail_fraction < 1:
        raise ValueError(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
    if tail_fraction * n < 1:
        raise ValueError(f"tail window of {tail_fraction} * {n} holds no steps")
    return max(math.ceil((1.0 - tail_fraction) * n), 1)


def estimate_cluster_set(p: Path, tail_fraction: float) -> tuple[float, float]:
    """Extremes of the running mean over steps ceil((1 - f) n) .. n."""
    window = p.running_mean[_window_start(p.n, tail_fraction) - 1:]
    return float(window.min()), float(window.max())


def tail_deviation(p: Path, limit_value: float, tail_fraction: float) -> float:
    window = p.running_mean[_window_start(p.n, tail_fraction) - 1:]
    return float(np.max(np.abs(window - limit_value)))


def convergence_verdict(p: Path, limit_value: float, tol: float, tail_fraction: float) -> bool:
    return tail_deviation(p, limit_value, tail_fraction) <= tol


def simulate_paths(a: AmbiguitySet, t: TargetSequence, n: int, master_seed: int, num_paths: int,
                   workers: int = 1) -> list[Path]:
    """Paths 0..num_paths-1; results are ordered by path index whatever ``workers`` is."""
    def one(j):
        return simulate_path(a, t, n, master_seed, j)

    if workers <= 1:
        return [one(j) for j in range(num_paths)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(num_paths)))


@dataclass(frozen=True)
class BucketStat:
    lo: float
    hi: float
    count: int
    mean_x: float
    mean_target: float
    std_error: float

    @property
    def z(self) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean_x == self.mean_target else math.inf
        return (self.mean_x - self.mean_target) / self.std_error


def calibration_buckets(paths: Sequence[Path], lo: float, hi: float, buckets: int = 20,
                        min_count: int = 30) -> list[BucketStat]:
    """Group steps by target value and compare mean draw with mean target.

    The standard error uses the sample deviation of x_i - phi_{i-1}, which are
    martingale differences under the steered measure.
    """
    xs = np.concatenate([p.xs for p in paths])
    tg = np.concatenate([p.targets for p in paths])
    edges = np.linspace(lo, hi, buckets + 1)
    idx = np.clip(np.searchsorted(edges, tg, side="right") - 1, 0, buckets - 1)
    out = []
    for b in range(buckets):
        sel = idx == b
        count = int(sel.sum())
        if count < min_count:
            continue
        resid = xs[sel] - tg[sel]
        se = float(resid.std(ddof=1) / math.sqrt(count))
        out.append(BucketStat(float(edges[b]), float(edges[b + 1]), count,
                              float(xs[sel].mean()), float(tg[sel].mean()), se))
    return out
