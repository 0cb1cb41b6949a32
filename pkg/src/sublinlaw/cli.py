"""Command-line runner: config in, report JSON (and optional CSVs) out.

Exit codes: 0 pass, 1 invalid config, 2 verdict failed, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile
import time
from pathlib import Path as FsPath
from typing import Optional, Sequence

from . import __version__
from .config import MODES, SCHEMA_VERSION, ConfigError, apply_overrides, digest, load_config, validate
from .experiments import CSV_COLUMNS, RunResult, execute, jsonable
from .quadrature import QuadratureError
from .steering import ScheduleOverflowError, SteeringContractError
from .sublinear import GridResolutionError, TailTooHeavyError

REPORT_VERSION = "1"
REPORT_NAME = "report.json"
DEFAULT_OUT = "sublinlaw-out"

EXIT_OK, EXIT_CONFIG, EXIT_VERDICT, EXIT_NUMERICAL = 0, 1, 2, 3
NUMERICAL_ERRORS = (QuadratureError, GridResolutionError, TailTooHeavyError, ScheduleOverflowError,
                    OverflowError, FloatingPointError)


def _error_object(exc: BaseException) -> dict:
    if isinstance(exc, ConfigError):
        return exc.to_dict()
    kind = "steering_contract" if isinstance(exc, SteeringContractError) else "numerical"
    return {"type": kind, "error": type(exc).__name__, "message": str(exc)}


def write_atomic(path: FsPath, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_plot_data(report: dict, result: Optional[RunResult], out_dir: FsPath) -> list[str]:
    """Write one thinned CSV per path; a no-op with a warning when there are no paths."""
    payload = report.get("payload") or {}
    if result is None or "records" not in payload or not result.series:
        report["warnings"].append("emit_csv: no simulate or cluster payload, no CSV written")
        return []
    written = []
    for j in sorted(result.series):
        rows = result.series[j]
        path = out_dir / f"path_{j:04d}.csv"
        lines = [",".join(CSV_COLUMNS)]
        for r in rows:
            lines.append(",".join([str(int(r[0]))] + [repr(float(v)) for v in r[1:]]))
        try:
            write_atomic(path, "\n".join(lines) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path.name)
    return written


def build_config(mode: str, config_path: Optional[str], overrides: Sequence[str]) -> tuple[dict, list[str]]:
    """Raw config after file parsing and overrides; the subcommand sets the mode."""
    raw = load_config(config_path) if config_path else {}
    warnings = []
    if raw.get("mode", mode) != mode:
        warnings.append(f"config declares mode {raw['mode']!r}; running {mode!r} as requested")
    raw = apply_overrides(raw, list(overrides))
    raw["mode"] = mode
    return raw, warnings


def run(mode: str, config_path: Optional[str] = None, overrides: Sequence[str] = (),
        out_dir: Optional[str] = None, stream=None) -> int:
    """Execute one mode end to end and return the process exit code."""
    stream = sys.stdout if stream is None else stream
    start = time.perf_counter()
    report = {
        "tool": "sublinlaw",
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "report_version": REPORT_VERSION,
        "mode": mode,
        "timestamp_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "overrides": list(overrides),
        "config": None,
        "config_digest": None,
        "payload": None,
        "payload_digest": None,
        "verdict": None,
        "exit_code": None,
        "errors": [],
        "warnings": [],
        "csv_files": [],
    }
    result: Optional[RunResult] = None
    cfg: dict = {}
    try:
        raw, warnings = build_config(mode, config_path, overrides)
        report["warnings"].extend(warnings)
        report["config"] = raw
        report["config_digest"] = digest(raw)
        cfg = validate(raw)
        report["config"] = cfg
        report["config_digest"] = digest(cfg)
        result = execute(cfg)
        report["payload"] = jsonable(result.payload)
        report["payload_digest"] = digest(report["payload"])
        if result.timings:
            report["timings"] = result.timings
        code = EXIT_OK if result.passed else EXIT_VERDICT
        report["verdict"] = "pass" if result.passed else "fail"
        if not result.passed:
            report["errors"].extend({"type": "verdict", **r} for r in _failures(report["payload"]))
    except (ConfigError, SteeringContractError) as exc:
        code, report["verdict"] = EXIT_CONFIG, "invalid_config"
        report["errors"].append(_error_object(exc))
    except NUMERICAL_ERRORS as exc:
        code, report["verdict"] = EXIT_NUMERICAL, "numerical_failure"
        report["errors"].append(_error_object(exc))

    target = FsPath(out_dir or cfg.get("out") or DEFAULT_OUT)
    if cfg.get("emit_csv") and code in (EXIT_OK, EXIT_VERDICT):
        report["csv_files"] = emit_plot_data(report, result, target)
    report["exit_code"] = code
    report["wall_clock_seconds"] = round(time.perf_counter() - start, 6)
    path = target / REPORT_NAME
    write_atomic(path, json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n")
    print(_verdict_line(report, path), file=stream)
    return code


def _failures(payload: dict) -> list[dict]:
    if "records" in payload:
        return [{"path_index": r["path_index"], **{k: r[k] for k in r if k not in ("path_index", "stream_key")}}
                for r in payload["records"] if not r["passed"]]
    if "criteria" in payload:
        return [c for c in payload["criteria"] if not c["passed"]]
    return [{"message": "verdict failed"}]


def _verdict_line(report: dict, path: FsPath) -> str:
    v = report["verdict"].upper().replace("_", " ")
    bits = [f"{report['mode']}: {v}"]
    p = report["payload"] or {}
    if "pass_count" in p:
        bits.append(f"{p['pass_count']}/{p['num_seeds']} paths passed (quota {p['quota']})")
    if "criteria" in p:
        bits.append(f"{sum(c['passed'] for c in p['criteria'])}/{len(p['criteria'])} criteria passed")
    if report["errors"] and report["verdict"] != "fail":
        e = report["errors"][0]
        bits.append(f"{e.get('field', e.get('error'))}: {e['message']}")
    bits.append(f"report {path}")
    return "; ".join(bits)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sublinlaw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", metavar="PATH", help="JSON config file or the name of a shipped config")
        p.add_argument("--set", dest="overrides", metavar="KEY=VALUE", action="append", default=[],
                       help="override a config key (dotted path; value parsed as JSON); repeatable")
        p.add_argument("--out", metavar="DIR", help="report directory")
        p.add_argument("--seed", metavar="U64", type=int, help="master seed")
        p.add_argument("--paths", metavar="N", type=int, help="number of paths (seeds)")
        p.add_argument("--emit-csv", action="store_true", help="write per-path CSV series")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    if args.paths is not None:
        overrides.append(f"num_seeds={args.paths}")
    if args.emit_csv:
        overrides.append("emit_csv=true")
    try:
        return run(args.mode, args.config, overrides, args.out)
    except OSError as exc:
        print(f"{args.mode}: I/O ERROR; {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
