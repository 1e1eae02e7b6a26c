"""Config-driven experiment runner.

Verbs::

    dpgm solve CONFIG      one grid cell (every listed seed)
    dpgm sweep CONFIG      cross product of the grid axes
    dpgm dump-grid RECORD  sample a solved run on a uniform grid

A config is a YAML (or JSON) mapping.  Grid axes (``h``, ``dof``, ``depth``,
``nv``, ``form``) may be scalars or lists and may sit at the top level or
under ``grid``; numbers may be written as expressions such as ``2^-5``::

    problem: example1          # preset name, or a mapping for a custom problem
    grid:
      h: [2^-2, 2^-3, 2^-4, 2^-5]
      dof: [50, 100, 200]
    zip: false                 # true pairs h[i] with dof[i] instead of crossing
    seeds: [0, 1, 2, 3, 4]
    settings:                  # any field of dpgm.solver.Settings
      rcond: 1.0e-12
    output_dir: out/table1

Outputs in the output directory: ``runs.csv`` (one row per seed),
``summary.csv`` and ``table_e_L2.csv``/``table_e_H1.csv`` (medians over
seeds, sweep only) and one JSON record per run under ``records/``.  The CSV
files carry no wall times so identical configs give identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .expr import parse_expression
from .metrics import field_functions
from .problems import PRESETS, custom_problem, preset
from .solver import Settings, StageError, make_bases, solve

log = logging.getLogger("dpgm")

SCHEMA_VERSION = 1
GRID_AXES = ("h", "dof", "depth", "nv", "form")
RUN_COLUMNS = [
    "fingerprint", "problem", "kind", "form", "h", "dof", "depth", "nv", "seed",
    "rows", "cols", "rank", "condition", "residual", "e_L2", "e_H1", "relative", "status",
]
SUMMARY_COLUMNS = [
    "fingerprint", "problem", "kind", "form", "h", "dof", "depth", "nv",
    "n_seeds", "n_ok", "median_e_L2", "median_e_H1",
]
_SETTINGS_FIELDS = {f.name for f in dataclasses.fields(Settings)}
_TOP_KEYS = {"problem", "grid", "zip", "seeds", "settings", "output_dir"} | set(GRID_AXES)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config


def _number(value, key):
    if value is None or isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, str):
        try:
            return float(parse_expression(value, ())(np.zeros((1, 0)))[0])
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot read {value!r} as a number ({exc})") from None
    raise ConfigError(f"{key}: expected a number, got {value!r}")


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def load_config(path) -> dict:
    """Read a YAML/JSON config file into a mapping."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return data


def resolve_config(config: dict, seed=None, rcond=None, fd_step=None, out_dir=None) -> dict:
    """Normalise a raw config and apply command-line overrides.

    Returns a mapping with keys ``problem``, ``grid`` (every axis a non-empty
    list), ``zip``, ``seeds``, ``settings`` and ``output_dir``.
    """
    unknown = set(config) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    problem = config.get("problem", "example1")
    if isinstance(problem, str):
        if problem not in PRESETS:
            raise ConfigError(f"unknown preset {problem!r}; choose from {sorted(PRESETS)}")
    elif not isinstance(problem, dict):
        raise ConfigError("problem must be a preset name or a mapping")

    raw_grid = dict(config.get("grid") or {})
    for axis in GRID_AXES:
        if axis in config:
            if axis in raw_grid:
                raise ConfigError(f"grid axis {axis!r} given twice")
            raw_grid[axis] = config[axis]
    extra = set(raw_grid) - set(GRID_AXES)
    if extra:
        raise ConfigError(f"unknown grid axes: {sorted(extra)}")
    defaults = Settings()
    grid = {}
    for axis in GRID_AXES:
        if axis in raw_grid:
            values = _as_list(raw_grid[axis])
        elif axis == "form":
            values = [None]
        else:
            values = [getattr(defaults, axis)]
        if not values:
            raise ConfigError(f"grid axis {axis!r} is empty")
        values = [_number(v, axis) for v in values]
        if axis in ("dof", "depth", "nv", "form"):
            for v in values:
                if v is not None and (float(v) != int(v) or int(v) <= 0):
                    raise ConfigError(f"{axis} values must be positive integers, got {v!r}")
            values = [None if v is None else int(v) for v in values]
        elif any(v is None or v <= 0 for v in values):
            raise ConfigError(f"h values must be positive, got {values}")
        grid[axis] = values

    settings = dict(config.get("settings") or {})
    bad = set(settings) - _SETTINGS_FIELDS
    bad |= set(settings) & set(GRID_AXES)
    if bad:
        raise ConfigError(f"unknown or misplaced settings: {sorted(bad)} (grid axes go under 'grid')")
    for key, value in list(settings.items()):
        if key in ("rcond", "fd_step", "eval_h", "radius", "boundary_weight"):
            settings[key] = float(_number(value, key))
    if rcond is not None:
        settings["rcond"] = float(rcond)
    if fd_step is not None:
        settings["fd_step"] = float(fd_step)

    seeds = [int(s) for s in _as_list(config.get("seeds", [0]))] if seed is None else [int(seed)]
    if not seeds:
        raise ConfigError("seeds list is empty")

    zipped = bool(config.get("zip", False))
    if zipped and len(grid["h"]) != len(grid["dof"]):
        raise ConfigError(f"zip needs equally long h and dof lists, got {len(grid['h'])} and {len(grid['dof'])}")
    return {
        "problem": problem,
        "grid": grid,
        "zip": zipped,
        "seeds": seeds,
        "settings": settings,
        "output_dir": str(out_dir or config.get("output_dir") or "dpgm-out"),
    }


def expand_grid(resolved: dict) -> list[dict]:
    """Grid cells in a fixed order (h slowest unless zipped)."""
    g = resolved["grid"]
    if resolved["zip"]:
        hd = list(zip(g["h"], g["dof"]))
    else:
        hd = list(itertools.product(g["h"], g["dof"]))
    cells = []
    for (h, dof), depth, nv, form in itertools.product(hd, g["depth"], g["nv"], g["form"]):
        cells.append({"h": h, "dof": dof, "depth": depth, "nv": nv, "form": form})
    return cells


def cell_config(resolved: dict, cell: dict) -> dict:
    """Fully resolved, seed-free description of one grid cell."""
    settings = dataclasses.asdict(
        Settings(**resolved["settings"]).replace(
            h=float(cell["h"]), dof=int(cell["dof"]), depth=int(cell["depth"]), nv=cell["nv"]
        )
    )
    return {"problem": resolved["problem"], "form": cell["form"], "settings": settings}


def fingerprint(cfg: dict) -> str:
    """Stable short hash of a resolved cell config."""
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def build_problem(cfg: dict):
    spec = cfg["problem"]
    problem = preset(spec) if isinstance(spec, str) else custom_problem(spec)
    if cfg.get("form") is not None:
        problem = problem.with_form(cfg["form"])
    return problem


def _problem_name(cfg):
    spec = cfg["problem"]
    return spec if isinstance(spec, str) else spec.get("name", "custom")


# ---------------------------------------------------------------------------
# running


def run_single(cfg: dict, seed: int) -> dict:
    """Execute the full pipeline for one cell and seed; returns a run record."""
    try:
        problem = build_problem(cfg)
        settings = Settings(**cfg["settings"])
    except Exception as exc:
        raise StageError("config", exc) from exc
    sol = solve(problem, settings, seed)
    errs = sol.errors.as_dict() if sol.errors is not None else None
    return {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "fingerprint": fingerprint(cfg),
        "seed": int(seed),
        "config": cfg,
        "kind": problem.kind,
        "shape": list(sol.shape),
        "block_rows": sol.block_rows,
        "lstsq": sol.lstsq.summary(),
        "errors": errs,
        "timings": {**sol.timings, "solve_wall": sol.timings["solve"]},
        "notes": sol.notes,
        "coeffs": sol.coeffs.tolist(),
        "status": "ok",
    }


def _failed_record(cfg, seed, exc):
    stage = getattr(exc, "stage", "unknown")
    return {
        "schema": SCHEMA_VERSION,
        "fingerprint": fingerprint(cfg),
        "seed": int(seed),
        "config": cfg,
        "status": f"failed:{stage}",
        "error": str(exc),
    }


def _task(args):
    cfg, seed = args
    try:
        return run_single(cfg, seed)
    except Exception as exc:  # recorded per cell; the sweep carries on
        return _failed_record(cfg, seed, exc)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "nan" if math.isnan(value) else format(value, ".8e")
    return str(value)


def _run_row(rec):
    cfg = rec["config"]
    s = cfg["settings"]
    row = {
        "fingerprint": rec["fingerprint"],
        "problem": _problem_name(cfg),
        "kind": rec.get("kind", ""),
        "form": cfg.get("form"),
        "h": repr(float(s["h"])),
        "dof": s["dof"],
        "depth": s["depth"],
        "nv": s["nv"],
        "seed": rec["seed"],
        "status": rec["status"],
    }
    if rec["status"] == "ok":
        ls, er = rec["lstsq"], rec["errors"] or {}
        row.update(
            rows=rec["shape"][0], cols=rec["shape"][1], rank=ls["rank"], condition=float(ls["condition"]),
            residual=float(ls["total_residual"]), e_L2=er.get("e_L2"), e_H1=er.get("e_H1"),
            relative=er.get("relative"),
        )
    return row


def _csv_text(columns, rows):
    buf = io.StringIO()
    buf.write(f"# dpgm schema={SCHEMA_VERSION}\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in columns})
    return buf.getvalue()


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _execute(tasks, threads):
    if threads and threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_task, tasks))
    out = []
    for cfg, seed in tasks:
        log.info("running %s seed=%d h=%g dof=%d", _problem_name(cfg), seed, cfg["settings"]["h"],
                 cfg["settings"]["dof"])
        out.append(_task((cfg, seed)))
    return out


def _save_records(records, out_dir: Path):
    for rec in records:
        name = f"{rec['fingerprint']}_seed{rec['seed']}.json"
        _write_atomic(out_dir / "records" / name, json.dumps(rec, indent=1, sort_keys=True))


def _median(values):
    vals = [v for v in values if v is not None and not math.isnan(v)]
    return float(np.median(vals)) if vals else float("nan")


def summarize(records, cells_cfg):
    """Median-over-seeds rows, one per grid cell, in grid order."""
    by_fp = {}
    for rec in records:
        by_fp.setdefault(rec["fingerprint"], []).append(rec)
    rows = []
    for cfg in cells_cfg:
        fp = fingerprint(cfg)
        recs = by_fp.get(fp, [])
        ok = [r for r in recs if r["status"] == "ok" and r.get("errors")]
        s = cfg["settings"]
        rows.append({
            "fingerprint": fp, "problem": _problem_name(cfg),
            "kind": next((r.get("kind") for r in recs if r.get("kind")), ""),
            "form": cfg.get("form"), "h": repr(float(s["h"])), "dof": s["dof"], "depth": s["depth"],
            "nv": s["nv"], "n_seeds": len(recs), "n_ok": len(ok),
            "median_e_L2": _median([r["errors"]["e_L2"] for r in ok]),
            "median_e_H1": _median([r["errors"]["e_H1"] for r in ok]),
        })
    return rows


def pivot(summary_rows, metric="median_e_L2", varying=("h", "nv", "depth", "form")):
    """Results table: one row per combination of the varying axes, one column per dof."""
    dofs = sorted({r["dof"] for r in summary_rows})
    keys = [a for a in varying if len({str(r[a]) for r in summary_rows}) > 1] or ["h"]
    order, table = [], {}
    for r in summary_rows:
        label = ";".join(f"{a}={_fmt(r[a]) if a != 'h' else r[a]}" for a in keys)
        if label not in table:
            order.append(label)
            table[label] = {}
        table[label][r["dof"]] = r[metric]
    buf = io.StringIO()
    buf.write(f"# dpgm schema={SCHEMA_VERSION} metric={metric}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row"] + [f"dof={d}" for d in dofs])
    for label in order:
        w.writerow([label] + [_fmt(table[label].get(d, float("nan"))) for d in dofs])
    return buf.getvalue()


def run_sweep(resolved: dict, threads: int = 1) -> dict:
    """Run every cell x seed, write CSVs and records, return the written paths."""
    out_dir = Path(resolved["output_dir"])
    cells = [cell_config(resolved, c) for c in expand_grid(resolved)]
    tasks = [(cfg, seed) for cfg in cells for seed in resolved["seeds"]]
    records = _execute(tasks, threads)
    _save_records(records, out_dir)
    paths = {"runs": out_dir / "runs.csv", "summary": out_dir / "summary.csv",
             "table_e_L2": out_dir / "table_e_L2.csv", "table_e_H1": out_dir / "table_e_H1.csv"}
    _write_atomic(paths["runs"], _csv_text(RUN_COLUMNS, [_run_row(r) for r in records]))
    summary = summarize(records, cells)
    _write_atomic(paths["summary"], _csv_text(SUMMARY_COLUMNS, summary))
    _write_atomic(paths["table_e_L2"], pivot(summary, "median_e_L2"))
    _write_atomic(paths["table_e_H1"], pivot(summary, "median_e_H1"))
    return {"paths": paths, "records": records, "summary": summary}


def run_solve(resolved: dict, threads: int = 1) -> dict:
    cells = expand_grid(resolved)
    if len(cells) != 1:
        raise ConfigError(f"solve needs exactly one grid cell, config gives {len(cells)}; use sweep")
    cfg = cell_config(resolved, cells[0])
    out_dir = Path(resolved["output_dir"])
    records = _execute([(cfg, s) for s in resolved["seeds"]], threads)
    _save_records(records, out_dir)
    path = out_dir / "runs.csv"
    _write_atomic(path, _csv_text(RUN_COLUMNS, [_run_row(r) for r in records]))
    return {"paths": {"runs": path}, "records": records}


# ---------------------------------------------------------------------------
# grid dump


def grid_table(value_fn, exact_fn, box, resolution=101, T=None) -> np.ndarray:
    """Rows ``(x, y, ..., u_rho, u, |u - u_rho|)`` on a uniform grid of ``box``.

    With ``T`` the fields are space-time callables evaluated at ``t = T``.
    """
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    res = _as_list(resolution)
    if len(res) == 1:
        res = res * len(box)
    if len(res) != len(box) or any(int(r) < 2 for r in res):
        raise ValueError(f"resolution must be >= 2 per axis, got {resolution}")
    axes = [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(box, res)]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    inp = pts if T is None else np.hstack([pts, np.full((len(pts), 1), float(T))])
    num = np.asarray(value_fn(inp), dtype=float).reshape(-1)
    ex = np.asarray(exact_fn(inp), dtype=float).reshape(-1)
    return np.column_stack([pts, num, ex, np.abs(num - ex)])


def dump_solution_grid(record: dict, resolution=101, path=None) -> tuple[Path, np.ndarray]:
    """Rebuild a recorded solution and write its grid CSV next to the record (or to ``path``)."""
    if record.get("status") != "ok":
        raise ValueError(f"record is not a successful run (status {record.get('status')!r})")
    cfg = record["config"]
    problem = build_problem(cfg)
    if problem.u_exact is None:
        raise ValueError("problem has no exact solution to compare against")
    settings = Settings(**cfg["settings"])
    bases = make_bases(problem, settings, record["seed"])
    coeffs = np.asarray(record["coeffs"], dtype=float)
    if problem.kind == "mixed":
        coeffs = coeffs[problem.dim * bases["p"].n_features:]
    value, _ = field_functions(bases["u"], coeffs, 0, settings.fd_step)
    T = problem.time[1] if problem.time_dependent else None
    table = grid_table(value, problem.u_exact, problem.box, resolution, T)
    names = ["x", "y", "z"][: problem.dim] + ["u_rho", "u", "abs_diff"]
    buf = io.StringIO()
    buf.write(f"# dpgm grid schema={SCHEMA_VERSION} fingerprint={record['fingerprint']} seed={record['seed']}"
              + (f" t={T!r}" if T is not None else "") + "\n")
    buf.write(",".join(names) + "\n")
    for row in table:
        buf.write(",".join(format(v, ".10e") for v in row) + "\n")
    path = Path(path) if path else Path(f"{record['fingerprint']}_seed{record['seed']}_grid.csv")
    _write_atomic(path, buf.getvalue())
    return path, table


# ---------------------------------------------------------------------------
# entry point


def _parser():
    p = argparse.ArgumentParser(prog="dpgm", description="Deep Petrov-Galerkin experiment runner")
    p.add_argument("--version", action="version", version=f"dpgm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, helptext in (("solve", "solve one grid cell"), ("sweep", "run a parameter grid")):
        sp = sub.add_parser(verb, help=helptext)
        sp.add_argument("config", help="YAML/JSON experiment config")
        sp.add_argument("--seed", type=int, help="override the config's seed list with one seed")
        sp.add_argument("--threads", type=int, default=1, help="worker processes (1 = in-process)")
        sp.add_argument("--out-dir", help="output directory (overrides output_dir)")
        sp.add_argument("--rcond", type=float, help="relative singular-value cutoff")
        sp.add_argument("--fd-step", type=float, help="finite-difference step")
    dp = sub.add_parser("dump-grid", help="sample a recorded solution on a uniform grid")
    dp.add_argument("record", help="run record JSON written by solve/sweep")
    dp.add_argument("--resolution", type=int, default=101, help="grid points per axis")
    dp.add_argument("--out", help="output CSV path")
    dp.add_argument("--out-dir", help="directory for the output CSV")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "dump-grid":
            try:
                with open(args.record) as fh:
                    record = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read record {args.record}: {exc}") from None
            out = args.out
            if out is None:
                name = f"{record.get('fingerprint', 'run')}_seed{record.get('seed', 0)}_grid.csv"
                out = Path(args.out_dir or Path(args.record).parent) / name
            path, table = dump_solution_grid(record, args.resolution, out)
            print(f"wrote {path} ({len(table)} rows, max |diff| {table[:, -1].max():.3e})")
            return 0
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        resolved = resolve_config(load_config(args.config), args.seed, args.rcond, args.fd_step, args.out_dir)
        runner = run_solve if args.verb == "solve" else run_sweep
        result = runner(resolved, args.threads)
    except ConfigError as exc:
        print(f"dpgm: [config] {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"dpgm: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"dpgm: [{args.verb}] {exc}", file=sys.stderr)
        return 2
    failed = [r for r in result["records"] if r["status"] != "ok"]
    for r in result["records"]:
        if r["status"] == "ok":
            e = r["errors"] or {}
            print(f"{r['fingerprint']} seed={r['seed']} shape={tuple(r['shape'])} "
                  f"e_L2={_fmt(e.get('e_L2'))} e_H1={_fmt(e.get('e_H1'))}")
        else:
            print(f"dpgm: {r['fingerprint']} seed={r['seed']} {r['error']}", file=sys.stderr)
    for name, path in result["paths"].items():
        print(f"{name}: {path}")
    return 1 if failed else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
