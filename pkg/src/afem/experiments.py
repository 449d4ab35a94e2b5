"""Benchmark harness: batches of adaptive runs, CSV output, rate fitting.

A benchmark takes a list of run configurations, executes them, and fits
the convergence rate of the estimator against the number of elements and
against the cumulative solver cost.  Results land in three CSV layouts:

  <run_id>.csv         per-step solver log (see driver.RunLog.to_csv)
  <run_id>.levels.csv  one row per mesh level
  runs.csv             one row per run: configuration, outcome, fitted rates

Sweep specification files are plain text, one ``key=value`` line per
configuration field, comma-separated values expanding as a cartesian
product.  Blank-line-separated blocks expand independently, so unrelated
parameter families can share one file; duplicate configurations run once.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
import time
from dataclasses import dataclass, fields
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .driver import AdaptiveConfig, RunLog, run_adaptive

LEVEL_COLUMNS = ("l", "nT", "n_picard", "n_steps", "max_pcg", "eta",
                 "cumcost", "err")
RUNS_COLUMNS = ("run_id", "domain", "theta", "lambda_alg", "lambda_pic",
                "max_elements", "uniform", "n_levels", "n_steps", "nT",
                "eta", "cumcost", "rate_vs_n", "rate_vs_cost",
                "exit_reason", "seconds")

# slope check used by `rates --assert`
RATE_TOLERANCE = 0.08


def fit_rate(xs: Sequence[float], ys: Sequence[float], window: float = 10.0,
             min_points: int = 4) -> float:
    """Least-squares slope of log ys against log xs on the trailing window.

    Only the asymptotic tail is informative, so the fit keeps the points
    with ``x >= max(x) / window`` (one decade by default), widened to the
    last ``min_points`` points when the window is thinner than that.
    Returns NaN when fewer than two usable points remain.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    x, y = x[keep], y[keep]
    if x.size < 2:
        return math.nan
    tail = x >= x.max() / window
    if tail.sum() < min(min_points, x.size):
        tail = np.zeros(x.size, dtype=bool)
        tail[-min(min_points, x.size):] = True
    return float(np.polyfit(np.log(x[tail]), np.log(y[tail]), 1)[0])


def expected_rate(config: AdaptiveConfig) -> float:
    """Reference estimator decay rate versus element count."""
    if config.uniform or config.theta >= 1.0:
        if config.domain == "zshape":
            return -2.0 / 7.0
        if config.domain == "lshape":
            return -1.0 / 3.0
        return -0.5  # smooth solution: uniform refinement is already optimal
    return -0.5


def run_id_for(config: AdaptiveConfig) -> str:
    parts = [config.domain, "t%g" % config.theta, "a%g" % config.lambda_alg,
             "p%g" % config.lambda_pic]
    if config.uniform:
        parts.append("uniform")
    return "_".join(parts)


@dataclass(frozen=True)
class RunResult:
    run_id: str
    config: AdaptiveConfig
    log: RunLog
    rate_vs_n: float
    rate_vs_cost: float
    seconds: float

    def runs_row(self) -> dict:
        final = self.log.final()
        table = self.log.level_table()
        return {
            "run_id": self.run_id, "domain": self.config.domain,
            "theta": self.config.theta, "lambda_alg": self.config.lambda_alg,
            "lambda_pic": self.config.lambda_pic,
            "max_elements": self.config.max_elements,
            "uniform": int(self.config.uniform), "n_levels": len(table),
            "n_steps": len(self.log.records), "nT": final.nT,
            "eta": final.eta, "cumcost": final.cumcost,
            "rate_vs_n": self.rate_vs_n, "rate_vs_cost": self.rate_vs_cost,
            "exit_reason": self.log.exit_reason, "seconds": self.seconds,
        }


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.12g" % value
    return str(value)


def rates_from_log(log: RunLog) -> tuple:
    table = log.level_table()
    ns = [row["nT"] for row in table]
    etas = [row["eta"] for row in table]
    costs = [row["cumcost"] for row in table]
    return fit_rate(ns, etas), fit_rate(costs, etas)


def write_levels_csv(log: RunLog, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEVEL_COLUMNS)
        for row in log.level_table():
            writer.writerow([_format(row.get(c)) for c in LEVEL_COLUMNS])


def read_levels_csv(path: str) -> List[dict]:
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            rows.append({
                "l": int(raw["l"]), "nT": int(raw["nT"]),
                "n_picard": int(raw["n_picard"]),
                "n_steps": int(raw["n_steps"]),
                "max_pcg": int(raw["max_pcg"]), "eta": float(raw["eta"]),
                "cumcost": int(raw["cumcost"]),
                "err": float(raw["err"]) if raw.get("err") else None,
            })
    return rows


def run_benchmark(configs: Iterable[AdaptiveConfig],
                  out_dir: Optional[str] = None,
                  verbose: bool = False,
                  report: Callable[[str], None] = print) -> List[RunResult]:
    """Run each configuration once, optionally writing CSVs to out_dir."""
    results = []
    seen = set()
    for config in configs:
        if config in seen:
            continue
        seen.add(config)
        start = time.perf_counter()
        log = run_adaptive(config)
        seconds = time.perf_counter() - start
        rate_n, rate_cost = rates_from_log(log)
        result = RunResult(run_id_for(config), config, log, rate_n,
                           rate_cost, seconds)
        results.append(result)
        if verbose:
            final = log.final()
            report("%-32s nT=%-8d eta=%-12.4g rate_vs_n=%-8.4f "
                   "rate_vs_cost=%-8.4f %.1fs"
                   % (result.run_id, final.nT, final.eta, rate_n, rate_cost,
                      seconds))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for result in results:
            result.log.to_csv(os.path.join(out_dir, result.run_id + ".csv"))
            write_levels_csv(result.log,
                             os.path.join(out_dir,
                                          result.run_id + ".levels.csv"))
        with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RUNS_COLUMNS)
            for result in results:
                row = result.runs_row()
                writer.writerow([_format(row[c]) for c in RUNS_COLUMNS])
    return results


def robustness_grid(domain: str = "zshape",
                    max_elements: int = 40000) -> List[AdaptiveConfig]:
    """Parameter grid probing insensitivity of the convergence rate.

    Three families around the base point (theta=0.5, lambdas=1e-2): the
    algebraic threshold sweep, the linearization threshold sweep, and the
    bulk parameter sweep.  Overlapping members are deduplicated.
    """
    base = dict(domain=domain, theta=0.5, lambda_alg=1e-2, lambda_pic=1e-2,
                max_elements=max_elements)
    configs = []
    for lam in (1e-1, 1e-2, 1e-3, 1e-4):
        configs.append(AdaptiveConfig(**{**base, "lambda_alg": lam}))
    for lam in (1.0, 1e-1, 1e-2, 1e-3, 1e-4):
        configs.append(AdaptiveConfig(**{**base, "lambda_pic": lam}))
    for theta in (0.1, 0.3, 0.5, 0.7, 0.9):
        configs.append(AdaptiveConfig(**{**base, "theta": theta}))
    unique = []
    for config in configs:
        if config not in unique:
            unique.append(config)
    return unique


_CONFIG_FIELDS = {f.name: f.type for f in fields(AdaptiveConfig)}
_BOOL_FIELDS = {"uniform", "track_error", "diagnostics"}
_INT_FIELDS = {"max_elements", "max_levels", "max_picard_per_level",
               "max_pcg_per_linearization"}
_STR_FIELDS = {"domain", "precond"}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_FIELDS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError("bad boolean for %s: %r" % (key, raw))
    if key in _INT_FIELDS:
        return int(float(raw))
    if key in _STR_FIELDS:
        return raw
    return float(raw)


def parse_sweep_spec(text: str) -> List[AdaptiveConfig]:
    """Expand a sweep specification into configurations, in file order."""
    configs: List[AdaptiveConfig] = []
    for block in text.split("\n\n"):
        grid = {}
        for line in block.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("expected key=value, got %r" % line)
            key, raw = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_FIELDS:
                raise ValueError("unknown configuration key %r" % key)
            grid[key] = [_coerce(key, part) for part in raw.split(",")]
        if not grid:
            continue
        keys = list(grid)
        for combo in itertools.product(*(grid[k] for k in keys)):
            config = AdaptiveConfig(**dict(zip(keys, combo)))
            if config not in configs:
                configs.append(config)
    return configs


def collect_rates(directory: str) -> List[dict]:
    """Summarize a benchmark output directory for reporting.

    Rates are recomputed from the per-level CSVs when present so the
    report reflects the data on disk, not just the stored index.
    """
    index = os.path.join(directory, "runs.csv")
    if not os.path.isfile(index):
        raise FileNotFoundError("no runs.csv in %s" % directory)
    rows = []
    with open(index, newline="") as fh:
        for raw in csv.DictReader(fh):
            config = AdaptiveConfig(
                domain=raw["domain"], theta=float(raw["theta"]),
                lambda_alg=float(raw["lambda_alg"]),
                lambda_pic=float(raw["lambda_pic"]),
                max_elements=int(raw["max_elements"]),
                uniform=bool(int(raw["uniform"])))
            rate_n = float(raw["rate_vs_n"])
            rate_cost = float(raw["rate_vs_cost"])
            levels_path = os.path.join(directory,
                                       raw["run_id"] + ".levels.csv")
            if os.path.isfile(levels_path):
                table = read_levels_csv(levels_path)
                ns = [r["nT"] for r in table]
                etas = [r["eta"] for r in table]
                costs = [r["cumcost"] for r in table]
                rate_n = fit_rate(ns, etas)
                rate_cost = fit_rate(costs, etas)
            expected = expected_rate(config)
            ok = (math.isfinite(rate_n)
                  and abs(rate_n - expected) <= RATE_TOLERANCE)
            rows.append({"run_id": raw["run_id"], "nT": int(raw["nT"]),
                         "eta": float(raw["eta"]),
                         "rate_vs_n": rate_n, "rate_vs_cost": rate_cost,
                         "expected": expected, "ok": ok})
    return rows


def rates_report(rows: List[dict], out=None) -> bool:
    """Print the rate table; True when every run matches its reference."""
    stream = out or io.StringIO()
    stream.write("%-32s %10s %12s %12s %10s %6s\n"
                 % ("run_id", "nT", "rate_vs_n", "rate_vs_cost",
                    "expected", "ok"))
    all_ok = True
    for row in rows:
        all_ok &= row["ok"]
        stream.write("%-32s %10d %12.4f %12.4f %10.4f %6s\n"
                     % (row["run_id"], row["nT"], row["rate_vs_n"],
                        row["rate_vs_cost"], row["expected"],
                        "yes" if row["ok"] else "NO"))
    if out is None:
        print(stream.getvalue(), end="")
    return all_ok
