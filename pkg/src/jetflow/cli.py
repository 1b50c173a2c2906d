"""Command-line interface.

    jetflow verify   scenario.json [--output report.json]
    jetflow geodesic scenario.json [--output report.json] [--csv path.csv]
    jetflow harmonic scenario.json [--output report.json] [--csv grid.csv]
    jetflow prolong  scenario.json [--output report.json]

Reports are JSON with sorted keys and no timestamps, so a fixed scenario
and seed produce byte-identical output.  The JETFLOW_SEED environment
variable overrides the scenario seed.  Exit status: 0 when every check
passes (or the solver converges), 1 on check failure or non-convergence,
2 on scenario or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .maps import SmoothMap, solve_affine_ode, solve_harmonic_grid
from .scenario import Scenario, ScenarioError, load_scenario
from .sprays import canonical_pair
from .verify import run_suite, run_verify

__all__ = ["main"]


def _emit(report: dict, output: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=",")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def _cmd_verify(sc: Scenario, args) -> int:
    report = run_verify(sc)
    _emit(report, args.output)
    return 0 if report["all_pass"] else 1


def _cmd_geodesic(sc: Scenario, args) -> int:
    section = sc.section("geodesic")
    n = sc.n
    x0 = np.asarray(section["x0"], dtype=float)
    v0 = np.asarray(section["v0"], dtype=float)
    if len(x0) != n or len(v0) != n:
        raise ScenarioError(f"x0 and v0 must have length n={n}")
    if sc.p != 1:
        raise ScenarioError("geodesic integration needs a scenario with p=1")
    pair = canonical_pair(sc.temporal_metric, sc.spatial_metric)
    sol = solve_affine_ode(pair, x0, v0, tuple(section["t_span"]), section["steps"])

    phi = sc.spatial_metric
    g = phi.components_batch(sol.xs)
    energies = np.einsum("kij,ki,kj->k", g, sol.vs, sol.vs)
    report = {
        "command": "geodesic",
        "metrics": {"temporal": sc.temporal_metric.name, "spatial": phi.name},
        "steps": int(section["steps"]),
        "t_span": [float(section["t_span"][0]), float(section["t_span"][1])],
        "final": {"t": float(sol.ts[-1]),
                  "x": [float(v) for v in sol.xs[-1]],
                  "v": [float(v) for v in sol.vs[-1]]},
        "energy": {"initial": float(energies[0]),
                   "final": float(energies[-1]),
                   "max_drift": float(np.max(np.abs(energies - energies[0])))},
    }
    _emit(report, args.output)
    if args.csv:
        header = (["t"] + [f"x{i + 1}" for i in range(n)]
                  + [f"v{i + 1}" for i in range(n)])
        rows = np.column_stack([sol.ts, sol.xs, sol.vs])
        _write_csv(args.csv, header, rows)
    return 0


def _cmd_harmonic(sc: Scenario, args) -> int:
    section = sc.section("harmonic")
    if sc.p != 2:
        raise ScenarioError("harmonic grid relaxation needs a scenario with p=2")
    if len(section["boundary"]) != sc.n:
        raise ScenarioError(f"boundary needs n={sc.n} component expressions")
    boundary = SmoothMap(2, section["boundary"], name="boundary")
    pair = canonical_pair(sc.temporal_metric, sc.spatial_metric)
    sol = solve_harmonic_grid(
        pair, sc.temporal_metric, boundary,
        m=section.get("grid", 33),
        tol=section.get("tolerance", 1e-9),
        max_iters=section.get("max_iters", 20000),
        damping=section.get("damping", 0.8),
        domain=section.get("domain"))
    report = {
        "command": "harmonic",
        "metrics": {"temporal": sc.temporal_metric.name,
                    "spatial": sc.spatial_metric.name},
        "grid": int(section.get("grid", 33)),
        "status": sol.status,
        "iterations": int(sol.iterations),
        "max_residual": float(sol.max_residual),
    }
    _emit(report, args.output)
    if args.csv:
        header = ["t1", "t2"] + [f"x{i + 1}" for i in range(sc.n)]
        rows = []
        for i, a in enumerate(sol.t1):
            for j, b in enumerate(sol.t2):
                rows.append([a, b] + list(sol.values[i, j]))
        _write_csv(args.csv, header, rows)
    return 0 if sol.converged else 1


def _cmd_prolong(sc: Scenario, args) -> int:
    suite = run_suite("prolong", sc,
                      tol=sc.raw.get("verify", {}).get("tolerance", 1e-8))
    report = {
        "command": "prolong",
        "seed": sc.seed,
        "dimensions": {"p": sc.p, "n": sc.n},
        "suites": [suite],
        "all_pass": suite["pass"],
    }
    _emit(report, args.output)
    return 0 if suite["pass"] else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jetflow",
        description="Randomized verification and solvers for first-jet geometry.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str, with_csv: bool):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("scenario", help="path to a scenario JSON file")
        sp.add_argument("--output", help="write the JSON report here instead of stdout")
        if with_csv:
            sp.add_argument("--csv", help="also write the solution as CSV")
        return sp

    add("verify", "run the transformation-law verification suites", False)
    add("geodesic", "integrate the p=1 affine equation (RK4)", True)
    add("harmonic", "relax the p=2 harmonic map equation on a grid", True)
    add("prolong", "run the prolongation flow checks", False)
    return parser


_COMMANDS = {
    "verify": _cmd_verify,
    "geodesic": _cmd_geodesic,
    "harmonic": _cmd_harmonic,
    "prolong": _cmd_prolong,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        return _COMMANDS[args.command](sc, args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
