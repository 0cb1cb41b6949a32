"""Mode runners: turn a validated config into a deterministic payload."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import functions
from .ambiguity import AmbiguitySet, distribution_from_dict
from .config import ConfigError
from .rng import mix_seed
from .simulate import (Path, baseline_path, calibration_buckets, estimate_cluster_set, martingale_residuals,
                       simulate_paths, tail_deviation, _window_start)
from .steering import (DEFAULT_MAX_PATH, SteeringContractError, TargetSequence, make_constant_targets,
                       make_finite_dim_targets, make_oscillating_targets, oscillation_schedule)
from .sublinear import (MeanFunctional, choquet_lower, choquet_upper, lower_expectation,
                        nested_expectation_detail, upper_expectation)

CSV_COLUMNS = ("n", "x", "target", "running_mean", "residual")


@dataclass
class RunResult:
    payload: dict
    passed: bool
    series: dict[int, np.ndarray] = field(default_factory=dict)  # path index -> thinned rows
    timings: dict[str, float] = field(default_factory=dict)  # kept out of the payload digest


def build_family(cfg: dict) -> AmbiguitySet:
    members = []
    for i, spec in enumerate(cfg["ambiguity"]):
        try:
            members.append(distribution_from_dict(spec))
        except ValueError as exc:
            raise ConfigError(f"ambiguity.{i}", str(exc)) from None
    return AmbiguitySet(tuple(members))


def build_function(spec: dict, where: str) -> functions.TestFunction:
    try:
        return functions.from_spec(spec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(where, str(exc)) from None


def _require(target: dict, key: str):
    if key not in target:
        raise ConfigError(f"target.{key}", f"required for target kind {target['kind']!r}")
    return target[key]


def build_targets(cfg: dict, means: MeanFunctional) -> TargetSequence:
    spec = cfg["target"]
    kind = spec["kind"]
    prefix = spec.get("prefix", 0.0)
    if kind == "constant":
        return make_constant_targets(_require(spec, "value"), means)
    if kind == "finite_dim":
        return make_finite_dim_targets(build_function(_require(spec, "phi"), "target.phi"), means, prefix)
    sched = oscillation_schedule(_require(spec, "blocks"), cfg.get("max_path_length", DEFAULT_MAX_PATH))
    lo = build_function(_require(spec, "phi_lo"), "target.phi_lo")
    hi = build_function(_require(spec, "phi_hi"), "target.phi_hi")
    try:
        return make_oscillating_targets(lo, hi, sched, means, prefix)
    except (SteeringContractError, ValueError) as exc:
        raise ConfigError("target", str(exc)) from None


def thinned_rows(p: Path, stride: int) -> np.ndarray:
    """Rows at n = stride, 2*stride, ... and always the final step."""
    idx = np.arange(stride, p.n + 1, stride)
    if idx.size == 0 or idx[-1] != p.n:
        idx = np.append(idx, p.n)
    rm = p.running_mean
    res = martingale_residuals(p)
    k = idx - 1
    return np.column_stack([idx.astype(np.float64), p.xs[k], p.targets[k], rm[k], res[k]])


# ---------------------------------------------------------------- modes


def run_expect(cfg: dict) -> RunResult:
    a = build_family(cfg)
    f = build_function(cfg["function"], "function")
    if f.arity == 1:
        payload = {"arity": 1, "upper": upper_expectation(a, f), "lower": lower_expectation(a, f)}
    else:
        nested = cfg.get("nested", {})
        up = nested_expectation_detail(a, f, nested.get("nodes"), nested.get("tol", 1e-2))
        down = nested_expectation_detail(a, f.negate(), nested.get("nodes"), nested.get("tol", 1e-2))
        payload = {"arity": f.arity, "upper": up.value, "lower": -down.value,
                   "error_estimate": max(up.error_estimate, down.error_estimate)}
    payload["mean_interval"] = list(a.mean_interval)
    return RunResult(payload, True)


def run_choquet(cfg: dict) -> RunResult:
    a = build_family(cfg)
    g = build_function(cfg["function"], "function")
    if g.arity != 1:
        raise ConfigError("function.arity", "Choquet integrals take one-argument functions")
    payload = {
        "choquet_upper": choquet_upper(a, g),
        "choquet_lower": choquet_lower(a, g),
        "upper_expectation": upper_expectation(a, g),
        "lower_expectation": lower_expectation(a, g),
    }
    return RunResult(payload, True)


def _stream_key(seed: int, j: int) -> str:
    k0, k1 = mix_seed(seed, j)
    return f"{k0:016x}{k1:016x}"


def _collect(cfg: dict, paths: list[Path], record: Callable[[Path], dict]) -> RunResult:
    records, series = [], {}
    for p in paths:
        rec = {"path_index": p.path_index, "stream_key": _stream_key(cfg["master_seed"], p.path_index)}
        rec.update(record(p))
        records.append(rec)
        if cfg["emit_csv"]:
            series[p.path_index] = thinned_rows(p, cfg["stride"])
    passes = sum(r["passed"] for r in records)
    rate = passes / len(records)
    payload = {"n": paths[0].n, "num_seeds": len(records), "records": records,
               "pass_count": passes, "pass_rate": rate, "quota": cfg["quota"]}
    return RunResult(payload, rate >= cfg["quota"], series)


def run_simulate(cfg: dict) -> RunResult:
    a = build_family(cfg)
    n, tf, tol = cfg["n"], cfg["tail_fraction"], cfg["tol"]
    try:
        _window_start(n, tf)
    except ValueError as exc:
        raise ConfigError("tail_fraction", str(exc)) from None
    seeds = range(cfg["num_seeds"])

    if "baseline_member" in cfg:
        j = cfg["baseline_member"]
        if j >= len(a.members):
            raise ConfigError("baseline_member", f"family has {len(a.members)} members")
        paths = [baseline_path(a, j, n, cfg["master_seed"], s) for s in seeds]
        limit_of = lambda p: a.members[j].mean  # noqa: E731
        target_desc = {"kind": "baseline", "member": j, "mean": a.members[j].mean}
    else:
        if "target" not in cfg:
            raise ConfigError("target", "simulate mode needs a target or a baseline_member")
        t = build_targets(cfg, MeanFunctional.of(a))
        if t.mode == "oscillating":
            raise ConfigError("target.kind", "oscillating targets have no limit; use the cluster mode")
        paths = simulate_paths(a, t, n, cfg["master_seed"], cfg["num_seeds"], cfg["workers"])
        limit_of = lambda p: t.limit(p.xs)  # noqa: E731
        target_desc = {"kind": t.mode, "depth": t.depth, "prefix": t.prefix}

    start = _window_start(n, tf) - 1

    def record(p: Path) -> dict:
        limit = limit_of(p)
        dev = tail_deviation(p, limit, tf)
        lo, hi = estimate_cluster_set(p, tf)
        res = martingale_residuals(p)
        return {"final_running_mean": float(p.running_mean[-1]), "target_limit": limit,
                "tail_deviation": dev, "sup_residual_tail": float(np.max(np.abs(res[start:]))),
                "cluster_min": lo, "cluster_max": hi, "passed": bool(dev <= tol)}

    result = _collect(cfg, paths, record)
    result.payload["target"] = target_desc
    result.payload["tol"] = tol
    result.payload["tail_fraction"] = tf
    if "baseline_member" not in cfg:
        m = MeanFunctional.of(a)
        buckets = calibration_buckets(paths, m.mu_lower, m.mu_upper, cfg["calibration_buckets"])
        ok = sum(abs(b.z) <= 4.0 for b in buckets)
        result.payload["calibration"] = {
            "buckets": [{"lo": b.lo, "hi": b.hi, "count": b.count, "mean_x": b.mean_x,
                         "mean_target": b.mean_target, "std_error": b.std_error, "z": b.z} for b in buckets],
            "within_4se": ok, "total": len(buckets)}
    return result


def run_cluster(cfg: dict) -> RunResult:
    a = build_family(cfg)
    if cfg["target"]["kind"] != "oscillating":
        raise ConfigError("target.kind", "cluster mode needs an oscillating target")
    t = build_targets(cfg, MeanFunctional.of(a))
    n = cfg.get("n", t.schedule.length)
    if n > t.schedule.length + 1:
        raise ConfigError("n", f"schedule covers at most {t.schedule.length + 1} steps")
    tf, tol = cfg["tail_fraction"], cfg["tol"]
    paths = simulate_paths(a, t, n, cfg["master_seed"], cfg["num_seeds"], cfg["workers"])

    def record(p: Path) -> dict:
        lo, hi = estimate_cluster_set(p, tf)
        want_lo, want_hi = t.cluster_interval(p.xs)
        return {"cluster_min": lo, "cluster_max": hi, "target_lo": want_lo, "target_hi": want_hi,
                "final_running_mean": float(p.running_mean[-1]),
                "passed": bool(lo <= want_lo + tol and hi >= want_hi - tol)}

    result = _collect(cfg, paths, record)
    result.payload.update({"blocks": t.schedule.num_blocks, "tol": tol, "tail_fraction": tf})
    return result


def run_schedule(cfg: dict) -> RunResult:
    blocks = cfg["target"].get("blocks")
    if blocks is None:
        raise ConfigError("target.blocks", "required for schedule mode")
    s = oscillation_schedule(blocks, cfg.get("max_path_length", DEFAULT_MAX_PATH))
    means = s.block_end_means()
    payload = {"blocks": s.num_blocks, "lengths": list(s.lengths), "ends": list(s.ends),
               "ones": s.ones_at_block_ends(),
               "block_end_means": [f"{m.numerator}/{m.denominator}" for m in means],
               "invariants_ok": s.check_invariants()}
    return RunResult(payload, payload["invariants_ok"])


def run_acceptance(cfg: dict) -> RunResult:
    from .acceptance import run_criteria
    results = run_criteria(cfg.get("criteria"))
    payload = {"criteria": [{"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
                            for r in results]}
    timings = {f"criterion_{r.number}": round(r.seconds, 3) for r in results}
    return RunResult(payload, all(r.passed for r in results), timings=timings)


RUNNERS: dict[str, Callable[[dict], RunResult]] = {
    "expect": run_expect,
    "choquet": run_choquet,
    "simulate": run_simulate,
    "cluster": run_cluster,
    "schedule": run_schedule,
    "acceptance": run_acceptance,
}


def execute(cfg: dict) -> RunResult:
    return RUNNERS[cfg["mode"]](cfg)


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
