"""
Command line entry point: ``etef {generate, evaluate, scenario-grid, edp-study}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ModelConfig, RunConfig, bundled, load_model_config, load_run_config
from .pso import cca_multiplier
from .signal import read_accelerogram, write_accelerogram
from .synthesis import generate_etef
from .validation import extract_edps, mdof_simulate, natural_periods, scale_to_intensity, write_edp_csv

log = logging.getLogger("etef")

FIG_TIMES = (5.0, 10.0, 15.0, 20.0)
FIG_PERIODS = (0.05, 0.8, 2.0, 3.0)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def generate(cfg: RunConfig, out: Path | None = None) -> dict:
    """Run the full pipeline and write the run directory.  Returns the summary."""
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    problem = cfg.problem()
    seeding = cfg.seeding(problem)
    result = generate_etef(problem, cfg.swarm, seeding)
    wall = time.perf_counter() - t0

    write_accelerogram(out / "etef.csv", result.series)
    problem.spectrum(result.series).to_csv(out / "spectrum.csv")
    problem.target.to_csv(out / "target.csv")
    result.log.to_jsonl(out / "convergence.jsonl")
    summary = {
        "final_objective": result.objective,
        "zero_signal_objective": problem.zero_objective(),
        "initial_best_objective": result.log[0].gbest_value,
        "evaluations": result.log[-1].evaluations,
        "iterations": len(result.log) - 1,
        "wall_time_s": wall,
        "seed": cfg.seed,
        "n_vars": problem.n_vars,
        "config": cfg.to_dict(),
    }
    _write_json(out / "summary.json", summary)
    log.info("objective %.6g after %d evaluations (%.1f s)", result.objective, summary["evaluations"], wall)
    return summary


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def evaluate(
    etef_path,
    cfg: RunConfig,
    out: Path | None = None,
    slice_times=FIG_TIMES,
    slice_periods=FIG_PERIODS,
) -> dict:
    """Score an accelerogram against the configured target and write plot data."""
    out = Path(out or cfg.output_dir)
    series = read_accelerogram(etef_path)
    if series.length != cfg.layout.signal_length or abs(series.dt - cfg.dt) > 1e-9:
        raise ConfigError(
            f"{etef_path}: {series.length} samples at dt={series.dt} do not match the configured "
            f"{cfg.layout.signal_length} samples at dt={cfg.dt}"
        )
    out.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem()
    grid = problem.spectrum(series)
    target = problem.target
    value = float(np.sum((grid.values - target.values) ** 2))
    grid.to_csv(out / "spectrum.csv")
    target.to_csv(out / "target.csv")

    diff = grid.values - target.values
    with open(out / "mismatch.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["period_s", "rms_mismatch_g", "final_spectrum_g", "final_target_g", "sum_sq"])
        for i, T in enumerate(grid.periods.periods):
            w.writerow([repr(float(T)), repr(float(np.sqrt(np.mean(diff[i] ** 2)))),
                        repr(float(grid.values[i, -1])), repr(float(target.values[i, -1])),
                        repr(float(np.sum(diff[i] ** 2)))])

    duration = series.duration
    times = [t for t in slice_times if 0 <= t < duration]
    with open(out / "slices_time.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["period_s"]
        for t in times:
            header += [f"Sa_t{t:g}", f"target_t{t:g}"]
        w.writerow(header)
        cols = [(grid.at_time(t), target.at_time(t)) for t in times]
        for i, T in enumerate(grid.periods.periods):
            row = [repr(float(T))]
            for s, tg in cols:
                row += [repr(float(s[i])), repr(float(tg[i]))]
            w.writerow(row)
    with open(out / "slices_period.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["time_s"]
        for T in slice_periods:
            header += [f"Sa_T{T:g}", f"target_T{T:g}"]
        w.writerow(header)
        rows = [(grid.at_period(T), target.at_period(T)) for T in slice_periods]
        for j, t in enumerate(grid.times.times):
            row = [repr(float(t))]
            for s, tg in rows:
                row += [repr(float(s[j])), repr(float(tg[j]))]
            w.writerow(row)

    report = {
        "etef": str(etef_path),
        "objective": value,
        "zero_signal_objective": problem.zero_objective(),
        "relative_objective": value / problem.zero_objective() if problem.zero_objective() else None,
        "final_rms_mismatch_g": float(np.sqrt(np.mean(diff[:, -1] ** 2))),
    }
    _write_json(out / "evaluation.json", report)
    return report


# ---------------------------------------------------------------------------
# scenario grid
# ---------------------------------------------------------------------------

GRID_FIELDS = ("scenario_id", "n_pop", "mode", "omega", "xi", "c1", "c2")


def _parse_scenario(row: dict, base):
    mode = (row.get("mode") or "plain").strip().lower()
    if mode in ("cca", "constriction"):
        mode = "constriction"
    omega_raw = (row.get("omega") or "").strip()
    kw = dict(
        n_pop=int(row["n_pop"]),
        mode=mode,
        xi=float(row["xi"]),
        c1=float(row["c1"]),
        c2=float(row["c2"]),
    )
    if mode == "plain":
        kw["omega"] = float(omega_raw)
    return replace(base, **kw)


def scenario_grid(grid_path, cfg: RunConfig, out: Path | None = None) -> list[dict]:
    """Run every scenario row at the configured scale; write results.csv and summary.json."""
    out = Path(out or cfg.output_dir)
    with open(grid_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem()
    seeding = cfg.seeding(problem)
    results = []
    for idx, row in enumerate(rows, start=1):
        sid = (row.get("scenario_id") or f"row{idx}").strip()
        rec = {k: (row.get(k) or "").strip() for k in GRID_FIELDS}
        rec["scenario_id"] = sid
        try:
            swarm = _parse_scenario(row, cfg.swarm)
            swarm.validate()
        except (KeyError, TypeError, ValueError) as exc:
            msg = f"skipped: {exc}"
            warnings.warn(f"scenario {sid} {msg}", stacklevel=2)
            rec.update(K="", min_objective="", evaluations="", wall_time_s="", status=msg)
            results.append(rec)
            continue
        t0 = time.perf_counter()
        res = generate_etef(problem, swarm, seeding)
        rec.update(
            mode=swarm.mode,
            K=repr(cca_multiplier(swarm.c1, swarm.c2)) if swarm.mode == "constriction" else "",
            min_objective=repr(res.objective),
            evaluations=res.log[-1].evaluations,
            wall_time_s=repr(time.perf_counter() - t0),
            status="ok",
        )
        if "reported_min_objective" in row:
            rec["reported_min_objective"] = row["reported_min_objective"]
        results.append(rec)
        log.info("%s: %.6g", sid, res.objective)

    fields = list(GRID_FIELDS) + ["K", "min_objective", "evaluations", "wall_time_s", "status"]
    if any("reported_min_objective" in r for r in results):
        fields.append("reported_min_objective")
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(results)
    vals = np.array([float(r["min_objective"]) for r in results if r["status"] == "ok"])
    stats = {"scenarios": len(results), "completed": int(vals.size)}
    if vals.size:
        mean, std = float(vals.mean()), float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        stats.update(mean=mean, std=std, cov=std / mean if mean else None)
    _write_json(out / "summary.json", stats)
    return results


# ---------------------------------------------------------------------------
# EDP study
# ---------------------------------------------------------------------------


def _collect_inputs(inputs_dir: Path):
    records_dir, etef_dir = inputs_dir / "records", inputs_dir / "etefs"
    if records_dir.is_dir() or etef_dir.is_dir():
        recs = sorted(records_dir.glob("*.csv")) if records_dir.is_dir() else []
        etefs = sorted(etef_dir.glob("*.csv")) if etef_dir.is_dir() else []
    else:
        recs, etefs = sorted(inputs_dir.glob("*.csv")), []
    return [("record", p) for p in recs] + [("etef", p) for p in etefs]


def edp_study(model_cfg: ModelConfig, inputs_dir, out: Path, threads: int = 1) -> dict:
    """Scale each input at the first-mode period, simulate and tabulate EDPs.

    Inputs are read from ``inputs_dir/records`` and ``inputs_dir/etefs``
    (or, without those subdirectories, every CSV is a record).  Writes
    ``edps.csv`` (one row per input), ``edp_errors.csv`` (median of records
    and signed percentage error of each ETEF) and ``skipped.json``.
    """
    inputs_dir, out = Path(inputs_dir), Path(out)
    items = _collect_inputs(inputs_dir)
    if not items:
        raise ConfigError(f"no .csv inputs found under {inputs_dir}")
    out.mkdir(parents=True, exist_ok=True)
    model = model_cfg.model
    T1 = model_cfg.period or float(natural_periods(model)[0][0])

    def one(item):
        kind, path = item
        series = read_accelerogram(path, fit=True)
        try:
            scaled, factor = scale_to_intensity(series, T1, model_cfg.target_sa, model_cfg.damping_ratio)
        except ValueError as exc:
            return kind, path, None, str(exc)
        resp = mdof_simulate(model, scaled, input_id=path.stem)
        rep = extract_edps(resp, model.heights)
        row = {"input": path.stem, "kind": kind, "scale_factor": factor}
        row.update({k: v for k, v in rep.as_row().items() if k != "input"})
        return kind, path, row, None

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            done = list(pool.map(one, items))
    else:
        done = [one(it) for it in items]

    rows = [r for _, _, r, _ in done if r is not None]
    skipped = [{"input": str(p), "reason": why} for _, p, r, why in done if r is None]
    for s in skipped:
        warnings.warn(f"skipped {s['input']}: {s['reason']}", stacklevel=2)
    _write_json(out / "skipped.json", skipped)
    if not rows:
        raise ConfigError("no input could be scaled")
    write_edp_csv(out / "edps.csv", rows)

    edp_keys = [k for k in rows[0] if k.startswith("drift_") or k.startswith("roof_")]
    rec_rows = [r for r in rows if r["kind"] == "record"]
    table = []
    if rec_rows:
        median = {k: float(np.median([r[k] for r in rec_rows])) for k in edp_keys}
        table.append({"input": "median_records", **median})
        for r in rows:
            if r["kind"] != "etef":
                continue
            err = {f"{k}_error_pct": 100.0 * (r[k] - median[k]) / median[k] if median[k] else float("nan")
                   for k in edp_keys}
            table.append({"input": r["input"], **{k: r[k] for k in edp_keys}, **err})
        write_edp_csv(out / "edp_errors.csv", table)
    return {"T1": T1, "rows": rows, "errors": table, "skipped": skipped}


# ---------------------------------------------------------------------------
# argparse plumbing
# ---------------------------------------------------------------------------


def _floats(text: str):
    return tuple(float(x) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etef", description="Endurance time excitation synthesis by PSO")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_opts(p):
        p.add_argument("--config", help="run configuration (INI)")
        p.add_argument("--scale", choices=("desk", "paper"), help="bundled base configuration")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="objective evaluation threads")

    g = sub.add_parser("generate", help="synthesize an ETEF")
    run_opts(g)

    e = sub.add_parser("evaluate", help="score an accelerogram against the configured target")
    e.add_argument("etef", help="accelerogram CSV (time_s, accel_g)")
    run_opts(e)
    e.add_argument("--slice-times", type=_floats, default=FIG_TIMES)
    e.add_argument("--slice-periods", type=_floats, default=FIG_PERIODS)

    s = sub.add_parser("scenario-grid", help="run a table of PSO parameter scenarios")
    s.add_argument("grid", nargs="?", help="scenario CSV (default: the bundled 28-row table)")
    run_opts(s)

    d = sub.add_parser("edp-study", help="compare EDPs of ETEFs and records on a Bouc-Wen building")
    d.add_argument("inputs", help="directory with records/ and etefs/ subdirectories")
    d.add_argument("--config", dest="model", help="model configuration (default: bundled three-story)")
    d.add_argument("--out", default="edp_study")
    d.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "edp-study":
            mcfg = load_model_config(args.model or bundled("three_story.ini"))
            edp_study(mcfg, args.inputs, Path(args.out), args.threads)
            return 0
        cfg = load_run_config(args.config, scale=args.scale, seed=args.seed,
                              output_dir=args.out, threads=args.threads)
        if args.command == "generate":
            summary = generate(cfg)
            print(json.dumps({k: summary[k] for k in ("final_objective", "evaluations", "wall_time_s", "seed")}))
        elif args.command == "evaluate":
            report = evaluate(args.etef, cfg, None, args.slice_times, args.slice_periods)
            print(json.dumps(report))
        elif args.command == "scenario-grid":
            scenario_grid(args.grid or bundled("table1_scenarios.csv"), cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # malformed input files surface as ValueError from the readers
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
