"""Command-line front end.

Subcommands: validate, solve, reference, compare, sweep.  Configuration is
a single JSON document; curves and fields go to CSV, reports to JSON, and
every output file is written atomically (temp file + rename) so
interrupted runs never leave half-written artifacts.  Exit codes are a
stable contract: 0 success, 2 validation failure, 3 numerical failure,
4 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from shockasym import engine, hugoniot, model, reference
from shockasym.characteristics import dump_fan_csv
from shockasym.corrections import dump_correction_csv
from shockasym.errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 4

_N_OUTPUT_TIMES = 5


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _atomic(path: Path, write_fn: Callable) -> None:
    """Run a path-consuming writer against a sibling temp file, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _atomic(path, lambda tmp: Path(tmp).write_text(text))


def _load(config_path: str, overrides: Optional[dict] = None) -> model.ProblemSpec:
    try:
        text = Path(config_path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read config: {err}") from err
    try:
        config = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON: {err}") from err
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key in ("dt", "fv_cells"):
                config.setdefault("numerics", {})[key] = value
            else:
                config[key] = value
    return model.load_spec(config)


def _output_times(spec: model.ProblemSpec) -> list[float]:
    T = spec.horizon
    return [T * (i + 1) / _N_OUTPUT_TIMES for i in range(_N_OUTPUT_TIMES)]


# ---------------------------------------------------------------------------
# operations (importable; the subcommands are thin wrappers)

def run_compare(spec: model.ProblemSpec, eps: float, outdir: Optional[Path] = None,
                cells: Optional[int] = None,
                solution: Optional[engine.AsymptoticSolution] = None,
                grid_check: bool = True) -> dict:
    """Asymptotic march vs finite-volume reference at one epsilon.

    Returns a report with per-shock maximum discrepancies over the output
    times and a grid-error estimate from a half-resolution companion run.
    """
    if solution is None:
        solution = engine.solve_asymptotics(spec)
    times = _output_times(spec)
    cells = spec.numerics.fv_cells if cells is None else cells

    sol = reference.run_reference(spec, times, eps=eps, cells=cells)
    rows = []
    e_minus = 0.0
    e_plus = 0.0
    for t in times:
        xm, xp = reference.extract_shocks(sol, t)
        sm = float(solution.shock_position("minus", t, eps))
        sp = float(solution.shock_position("plus", t, eps))
        e_minus = max(e_minus, abs(xm - sm))
        e_plus = max(e_plus, abs(xp - sp))
        rows.append((t, xm, xp, sm, sp))

    grid_error = None
    if grid_check:
        coarse = reference.run_reference(spec, times, eps=eps, cells=cells // 2)
        grid_error = 0.0
        for t, xm, xp, _, _ in rows:
            cxm, cxp = reference.extract_shocks(coarse, t)
            grid_error = max(grid_error, abs(cxm - xm), abs(cxp - xp))

    report = {
        "epsilon": eps,
        "cells": cells,
        "e_minus": e_minus,
        "e_plus": e_plus,
        "grid_error_estimate": grid_error,
        "times": [r[0] for r in rows],
        "x_minus_reference": [r[1] for r in rows],
        "x_plus_reference": [r[2] for r in rows],
        "x_minus_asymptotic": [r[3] for r in rows],
        "x_plus_asymptotic": [r[4] for r in rows],
        "status": "ok",
    }
    if outdir is not None:
        outdir = Path(outdir)
        _write_json(outdir / f"compare_eps{eps:g}.json", report)
        lines = ["t,x_minus,x_plus\n"]
        for t, xm, xp, _, _ in rows:
            lines.append(f"{t:.17g},{xm:.17g},{xp:.17g}\n")
        text = "".join(lines)
        _atomic(outdir / f"shock_positions_eps{eps:g}.csv",
                lambda tmp: Path(tmp).write_text(text))
    return report


def _sweep_worker(args):
    config_text, eps, cells, times = args
    spec = model.load_spec(config_text)
    sol = reference.run_reference(spec, times, eps=eps, cells=cells)
    out = []
    for t in times:
        xm, xp = reference.extract_shocks(sol, float(t))
        out.append((float(t), xm, xp))
    return eps, out


def sweep_epsilon(spec: model.ProblemSpec, config_text: str, eps_list: Sequence[float],
                  workers: int = 1, outdir: Optional[Path] = None,
                  cells: Optional[int] = None) -> dict:
    """Reference runs across epsilons against one shared asymptotic solve;
    fits the log-log slope of the maximum discrepancy.  Failed members are
    reported without discarding the rest."""
    if len(eps_list) < 3:
        raise UsageError("sweep requires at least 3 decreasing epsilon values")
    eps_arr = list(eps_list)
    if any(b >= a for a, b in zip(eps_arr, eps_arr[1:])):
        raise UsageError("sweep epsilons must be strictly decreasing")

    solution = engine.solve_asymptotics(spec)
    times = _output_times(spec)
    cells = spec.numerics.fv_cells if cells is None else cells
    jobs = [(config_text, eps, cells, times) for eps in eps_arr]

    results = {}
    errors = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_sweep_worker, job): job[1] for job in jobs}
            for fut, eps in futures.items():
                try:
                    results[eps] = fut.result()[1]
                except Exception as err:  # noqa: BLE001 - keep partial results
                    errors[eps] = str(err)
    else:
        for job in jobs:
            try:
                results[job[1]] = _sweep_worker(job)[1]
            except Exception as err:  # noqa: BLE001
                errors[job[1]] = str(err)

    table = []
    for eps in eps_arr:
        if eps not in results:
            continue
        e_minus = 0.0
        e_plus = 0.0
        for t, xm, xp in results[eps]:
            e_minus = max(e_minus, abs(xm - float(solution.shock_position("minus", t, eps))))
            e_plus = max(e_plus, abs(xp - float(solution.shock_position("plus", t, eps))))
        table.append({"epsilon": eps, "e_minus": e_minus, "e_plus": e_plus,
                      "e": max(e_minus, e_plus)})

    slope = None
    if len(table) >= 2:
        xs = np.log([row["epsilon"] for row in table])
        ys = np.log([max(row["e"], 1e-300) for row in table])
        slope = float(np.polyfit(xs, ys, 1)[0])

    report = {
        "epsilons": eps_arr,
        "table": table,
        "slope": slope,
        "errors": errors,
        "status": "ok" if not errors else "partial",
    }
    if outdir is not None:
        _write_json(Path(outdir) / "sweep.json", report)
    return report


# ---------------------------------------------------------------------------
# subcommands

def _cmd_validate(args) -> int:
    spec = _load(args.config)
    report = model.validate(spec)
    print(report.summary())
    if args.out:
        _write_json(Path(args.out) / "validation.json", report.to_dict())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _require_valid(spec: model.ProblemSpec) -> Optional[str]:
    report = model.validate(spec)
    if not report.passed:
        return ", ".join(report.failed_names())
    return None


def _cmd_solve(args) -> int:
    spec = _load(args.config, {"epsilon": args.eps, "dt": args.dt})
    failed = _require_valid(spec)
    if failed:
        print(f"validation failed: {failed}", file=sys.stderr)
        return EXIT_VALIDATION
    solution = engine.solve_asymptotics(spec)
    outdir = Path(args.out)
    minus, plus = solution.shock_minus, solution.shock_plus
    _atomic(outdir / "shock_curves.csv",
            lambda tmp: hugoniot.write_shock_csv(minus, plus, tmp))
    if args.dump_fans:
        _atomic(outdir / "fan_left.csv",
                lambda tmp: dump_fan_csv(solution.fields.fan_left, tmp))
        _atomic(outdir / "fan_right.csv",
                lambda tmp: dump_fan_csv(solution.fields.fan_right, tmp))
        for name, corr in solution.corr.items():
            _atomic(outdir / f"{name}.csv",
                    lambda tmp, c=corr: dump_correction_csv(c, tmp))
    print(f"s-(T)={minus.position(spec.horizon, spec.epsilon):.9g}  "
          f"s+(T)={plus.position(spec.horizon, spec.epsilon):.9g}")
    print(f"wrote {outdir / 'shock_curves.csv'}")
    return EXIT_OK


def _cmd_reference(args) -> int:
    spec = _load(args.config, {"epsilon": args.eps})
    failed = _require_valid(spec)
    if failed:
        print(f"validation failed: {failed}", file=sys.stderr)
        return EXIT_VALIDATION
    times = _output_times(spec)
    sol = reference.run_reference(spec, times, cells=args.cells)
    outdir = Path(args.out)
    for i, t in enumerate(times):
        _atomic(outdir / f"snapshot_{i:02d}_t{t:g}.csv",
                lambda tmp, tt=t: reference.write_snapshot_csv(sol, tt, tmp))
    _atomic(outdir / "shock_positions.csv",
            lambda tmp: reference.write_extraction_csv(sol, tmp))
    print(f"wrote {outdir / 'shock_positions.csv'} ({sol.steps} steps)")
    return EXIT_OK


def _cmd_compare(args) -> int:
    spec = _load(args.config, {"dt": args.dt})
    failed = _require_valid(spec)
    if failed:
        print(f"validation failed: {failed}", file=sys.stderr)
        return EXIT_VALIDATION
    report = run_compare(spec, args.eps, outdir=Path(args.out), cells=args.cells)
    print(f"e_minus={report['e_minus']:.6g}  e_plus={report['e_plus']:.6g}  "
          f"grid_error={report['grid_error_estimate']:.6g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        eps_list = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    except ValueError:
        print("error: --eps must be a comma-separated list of numbers", file=sys.stderr)
        return EXIT_USAGE
    spec = _load(args.config, {"dt": args.dt})
    failed = _require_valid(spec)
    if failed:
        print(f"validation failed: {failed}", file=sys.stderr)
        return EXIT_VALIDATION
    config_text = Path(args.config).read_text()
    report = sweep_epsilon(spec, config_text, eps_list, workers=args.workers,
                           outdir=Path(args.out), cells=args.cells)
    for row in report["table"]:
        print(f"eps={row['epsilon']:<10g} e_minus={row['e_minus']:.6g} "
              f"e_plus={row['e_plus']:.6g}")
    if report["slope"] is not None:
        print(f"log-log slope: {report['slope']:.3f}")
    if report["errors"]:
        print(f"failed members: {report['errors']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _Parser(prog="shockasym",
                     description="first-order shock asymptotics and a "
                                 "finite-volume cross-check")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a problem configuration")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("solve", help="run the asymptotic engine")
    p.add_argument("config")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--dump-fans", action="store_true")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("reference", help="run the finite-volume solver")
    p.add_argument("config")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=_cmd_reference)

    p = sub.add_parser("compare", help="asymptotics vs reference at one epsilon")
    p.add_argument("config")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("sweep", help="epsilon sweep with slope fit")
    p.add_argument("config")
    p.add_argument("--eps", required=True, help="comma-separated decreasing list")
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=_cmd_sweep)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    started = time.time()
    manifest = {
        "subcommand": args.command,
        "config": getattr(args, "config", None),
        "out": getattr(args, "out", None),
    }
    try:
        code = args.fn(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        code = EXIT_USAGE
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        code = EXIT_VALIDATION
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        code = EXIT_NUMERICAL
    manifest["exit_status"] = code
    manifest["seconds"] = round(time.time() - started, 3)
    out = getattr(args, "out", None)
    if out:
        try:
            _write_json(Path(out) / "run_manifest.json", manifest)
        except OSError:
            pass
    return code


if __name__ == "__main__":
    raise SystemExit(main())
