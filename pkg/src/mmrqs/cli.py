"""Command line: param, solve, simulate, validate and sweep.

Exit status: 0 success, 2 unparsable config, 3 schema violation, 4 missing
file, 5 solver non-convergence (results still written and flagged),
6 validation violations.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, build_model, bundled, load_config, sweep_points
from .errors import DomainError, NonConvergenceError
from .mc_network import network_solve
from .radio.scenario import parameterize
from .rqs_core import baseline_metrics, baseline_stationary
from .rqs_dynamics import solve_signals
from .service_variants import (adaptive_metrics, adaptive_stationary, elastic_metrics, elastic_stationary,
                               solve_priority)
from .sim_oracle.des import METRICS, SimConfig, simulate
from .solvers import solver_settings

WORKERS_ENV = "MMRQS_WORKERS"
EXIT_NONCONVERGENCE, EXIT_VIOLATION = 5, 6
UNITS = ("probabilities are dimensionless; mean_resources and shares in resource units; "
         "drop_rate per second; mean_sojourn in seconds")


def fmt(v) -> str:
    """12 significant digits; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else format(float(v), ".12g")
    return str(v)


@dataclass
class ResultTable:
    axes: list[str]
    rows: list[dict] = field(default_factory=list)

    COLUMNS = ("metric", "analytic", "simulated", "half_width", "std_error", "status")

    def add(self, coords, metric, analytic=None, simulated=None, half_width=None, std_error=None, status="ok"):
        if metric not in METRICS:
            raise DomainError(f"metric {metric!r} is not in the registry")
        self.rows.append({"coords": tuple(coords), "metric": metric, "analytic": analytic,
                          "simulated": simulated, "half_width": half_width, "std_error": std_error,
                          "status": status})

    def header(self) -> list[str]:
        return list(self.axes) + list(self.COLUMNS)

    def lines(self) -> list[list[str]]:
        return [[fmt(c) for c in r["coords"]] + [fmt(r[k]) for k in self.COLUMNS] for r in self.rows]


# ---------------------------------------------------------------------------
# evaluation of one point

def analytic_metrics(cfg: RunConfig, spec) -> dict:
    m = cfg.model
    prm = cfg.typed_params
    if m == "baseline":
        d = baseline_stationary(spec)
        b = baseline_metrics(d, spec)
        return {"blocking": b.blocking, "mean_resources": b.mean_resources, "mean_sessions": d.mean_sessions()}
    if m in ("signals", "reservation"):
        _, r = solve_signals(spec)
        out = {"blocking": r.blocking, "mean_resources": r.mean_resources, "mean_sessions": r.mean_sessions}
        if spec.signal_rate > 0:
            out["drop_rate"] = float(r.drop_rate)
            if r.admitted:
                out["ongoing_drop"] = float(r.ongoing_drop)
        return out
    if m == "network":
        r = network_solve(spec)
        return {"blocking": r.blocking, "secondary_blocking": r.secondary_blocking,
                "ongoing_drop": r.ongoing_drop, "mean_resources": r.mean_resources,
                "mean_sessions": float(sum(n.mean_sessions for n in r.nodes))}
    if m == "priority":
        r = solve_priority(spec, prm.method)
        return {"high_blocking": r.high_blocking, "low_blocking": r.low_blocking,
                "interruption": r.interruption, "mean_resources": r.mean_resources}
    if m == "adaptive":
        r = adaptive_metrics(spec, adaptive_stationary(spec))
        out = {"blocking": r.blocking, "offloaded_blocking": r.offloaded_blocking, "drop_rate": r.drop_rate,
               "mean_resources": r.mean_resources, "mean_share_native": r.mean_share_native,
               "mean_share_offloaded": r.mean_share_offloaded}
        if spec.mmwave_arrival_rate > 0:
            out["ongoing_drop"] = r.ongoing_drop
        return out
    r = elastic_metrics(spec, elastic_stationary(spec, prm.release))
    out = {"blocking": r.blocking, "mean_sessions": r.mean_sessions}
    if r.mean_sojourn is not None:
        out["mean_sojourn"] = r.mean_sojourn
    return out


def sim_config(cfg: RunConfig) -> SimConfig:
    s = cfg.simulation
    return SimConfig(seed=s.seed, measured_events=s.measured_events, warmup_events=s.warmup_events,
                     batch_count=s.batch_count)


def evaluate_point(task) -> dict:
    """Analytic and/or simulated metrics of one sweep point (runs in worker processes)."""
    coords, cfg, pmf, alpha, do_analytic, do_sim = task
    result = {"coords": coords, "analytic": {}, "sim": None, "status": "ok", "message": ""}
    spec = build_model(cfg, pmf, alpha)
    if do_analytic:
        n = cfg.numerics
        try:
            with solver_settings(tol=n.solver_tol, max_sweeps=n.max_sweeps, method=n.solver_method):
                result["analytic"] = analytic_metrics(cfg, spec)
        except NonConvergenceError as exc:
            result["status"] = "nonconverged"
            result["message"] = str(exc)
    if do_sim:
        result["sim"] = simulate(spec, sim_config(cfg))
    return result


def _scenario_inputs(points) -> list:
    """Parameterize each distinct scenario once, in sweep order."""
    cache: dict = {}
    out = []
    for _, cfg in points:
        if cfg.scenario is None:
            out.append((None, None))
            continue
        key = json.dumps(cfg.scenario.model_dump(mode="json"), sort_keys=True)
        if key not in cache:
            p = parameterize(cfg.scenario.build())
            cache[key] = (p.demand, p.signal_rate)
        out.append(cache[key])
    return out


def worker_count(flag: int | None) -> int:
    if flag is not None:
        n = flag
    else:
        env = os.environ.get(WORKERS_ENV)
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError(ConfigError.SCHEMA, f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(ConfigError.SCHEMA, "worker count must be at least 1")
    return n


def run(cfg: RunConfig, verb: str, workers: int = 1) -> tuple[ResultTable, list[str], int]:
    """Evaluate ``cfg`` for ``verb``; returns (table, violations, exit status)."""
    points = sweep_points(cfg) if verb in ("sweep", "validate") else [((), cfg)]
    do_analytic = verb in ("solve", "sweep", "validate")
    do_sim = verb in ("simulate", "validate") or (verb == "sweep" and cfg.simulation.enabled)
    inputs = _scenario_inputs(points)
    tasks = [(coords, c, pmf, alpha, do_analytic, do_sim) for (coords, c), (pmf, alpha) in zip(points, inputs)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(evaluate_point, tasks))
    else:
        results = [evaluate_point(t) for t in tasks]
    axes = [a.path for a in cfg.sweep] if verb in ("sweep", "validate") else []
    table = ResultTable(axes)
    violations = []
    status = 0
    sigmas = cfg.simulation.sigmas
    for res in results:
        coords = res["coords"] if axes else ()
        sim = res["sim"]
        names = set(res["analytic"]) | (set(sim.metrics) if sim else set())
        for name in METRICS:
            if name not in names:
                continue
            a = res["analytic"].get(name)
            e = sim.metrics.get(name) if sim else None
            row_status = res["status"]
            if do_analytic and do_sim and a is not None and e is not None:
                ok = abs(a - e.value) <= sigmas * e.std_error + 1e-12
                row_status = "ok" if ok else "violation"
                if not ok:
                    where = ", ".join(f"{p}={fmt(v)}" for p, v in zip(axes, coords))
                    violations.append(f"{name}{' at ' + where if where else ''}: analytic {fmt(a)} vs "
                                      f"simulated {fmt(e.value)} +- {fmt(sigmas * e.std_error)} ({fmt(sigmas)} sigma)")
            table.add(coords, name, a, e.value if e else None, e.half_width if e else None,
                      e.std_error if e else None, row_status)
        if res["status"] == "nonconverged":
            status = EXIT_NONCONVERGENCE
            if not names:
                table.add(coords, "blocking", math.nan, None, None, None, "nonconverged")
    if status == 0 and violations:
        status = EXIT_VIOLATION
    return table, violations, status


# ---------------------------------------------------------------------------
# output

def _header(verb: str, cfg: RunConfig) -> list[str]:
    return [f"# mmrqs {__version__} {verb}",
            f"# config_sha256: {cfg.fingerprint()}",
            f"# model: {cfg.model}",
            f"# units: {UNITS}",
            "# config: " + json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))]


def _write_csv(path: Path, header: list[str], columns: list[str], rows: list[list[str]]) -> None:
    text = "\n".join(header + [",".join(columns)] + [",".join(r) for r in rows]) + "\n"
    path.write_text(text)


def _write_records(path: Path, cfg: RunConfig, verb: str, records: list[dict]) -> None:
    head = {"record": "header", "verb": verb, "config_sha256": cfg.fingerprint(), "model": cfg.model}
    lines = [json.dumps(head, sort_keys=True)] + [json.dumps(r, sort_keys=True) for r in records]
    path.write_text("\n".join(lines) + "\n")


def write_table(out: Path, verb: str, cfg: RunConfig, table: ResultTable) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.output.prefix}{verb}"
    csv_path = out / f"{stem}.csv"
    _write_csv(csv_path, _header(verb, cfg), table.header(), table.lines())
    records = [{"record": "result", **{k: (list(v) if k == "coords" else v) for k, v in r.items()}}
               for r in table.rows]
    _write_records(out / f"{stem}.jsonl", cfg, verb, json.loads(json.dumps(records, default=float)))
    return csv_path


def write_param(out: Path, cfg: RunConfig) -> Path:
    if cfg.scenario is None:
        raise ConfigError(ConfigError.SCHEMA, "scenario: the param verb needs a scenario section")
    p = parameterize(cfg.scenario.build())
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.output.prefix}param"
    rows = [["demand", str(j), fmt(v)] for j, v in enumerate(p.demand.probs) if v > 0]
    rows.append(["outage", "", fmt(p.demand.outage)])
    rows.append(["signal_rate", "", fmt(p.signal_rate)])
    rows += [[k, "", fmt(v)] for k, v in p.diagnostics.items()]
    header = _header("param", cfg)
    _write_csv(out / f"{stem}.csv", header, ["quantity", "units", "value"], rows)
    _write_csv(out / f"{stem}_sinr_cdf.csv", header, ["sinr_db", "cdf"],
               [[fmt(g), fmt(v)] for g, v in p.cdf.to_csv_rows()])
    records = [{"record": "param", "quantity": r[0], "units": r[1], "value": float(r[2])} for r in rows]
    _write_records(out / f"{stem}.jsonl", cfg, "param", records)
    return out / f"{stem}.csv"


# ---------------------------------------------------------------------------

def _resolve(path: str) -> Path:
    return bundled(path.split(":", 1)[1]) if path.startswith("bundled:") else Path(path)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmrqs", description="Resource queuing models of mmWave access.")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, text in (("param", "radio scenario to demand pmf, signal rate and diagnostics"),
                       ("solve", "analytic metrics of the configured point"),
                       ("simulate", "simulated metrics of the configured point"),
                       ("validate", "analytic against simulation over the sweep grid"),
                       ("sweep", "analytic metrics over the sweep grid")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config", required=True, help="YAML config path, or bundled:<name>")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--workers", type=int, default=None, help=f"parallel sweep points (env {WORKERS_ENV})")
        p.add_argument("--seed", type=int, default=None, help="simulation seed (64-bit)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(_resolve(args.config))
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError(ConfigError.SCHEMA, "--seed must be a 64-bit unsigned integer")
            cfg = cfg.model_copy(update={"simulation": cfg.simulation.model_copy(update={"seed": args.seed})})
        out = Path(args.out if args.out is not None else cfg.output.dir)
        workers = worker_count(args.workers)
        if args.verb == "param":
            path = write_param(out, cfg)
            print(path)
            return 0
        table, violations, status = run(cfg, args.verb, workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.SCHEMA
    path = write_table(out, args.verb, cfg, table)
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    if status == EXIT_NONCONVERGENCE:
        print("error: solver did not converge; affected rows are flagged", file=sys.stderr)
    print(path)
    return status


if __name__ == "__main__":
    sys.exit(main())
