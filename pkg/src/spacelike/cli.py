"""Batch command-line front end.

    spacelike <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]

Subcommands: classify, identities, graph, solve, initial-data, symmetry,
suite.  Every run writes a canonical JSON report (report.json in the output
directory) and optional CSV field dumps.  Exit codes: 0 verdict reached,
2 hypotheses violated (non-spacelike input, bad signature, domain errors),
3 solver did not converge, 4 configuration error.  The default thread
count comes from SPACELIKE_THREADS; reports are byte-identical across
thread counts.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from .elliptic import inequality_solution_check, solve
from .errors import ConfigError, ExprSyntaxError, SpacelikeError
from .identities import div_S, divergence_residual, verify_integral_formula
from .initialdata import (
    GriddedInitialData,
    constraint_residuals,
    constraint_residuals_gridded,
    definiteness_report,
    normal_flow_margin,
    stationarity_obstruction,
)
from .immersion import ImmersedSubmanifold
from .report import write_fields_csv, write_report
from .spacetime import EPS_CAUSAL
from .staticgraph import (
    GraphFunction,
    graph_mean_curvature,
    hyperbolic_angle,
    spacelike_check,
)
from .suite import run_suite
from .symmetry import analyze_vector_field, theorem_applicability

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_NONCONVERGENT = 3
EXIT_CONFIG = 4


def _field_stats(f):
    f = np.asarray(f)
    return {
        "min": float(np.min(f)),
        "max": float(np.max(f)),
        "sup": float(np.max(np.abs(f))),
        "mean": float(np.mean(f)),
    }


def cmd_classify(raw, out_dir, seed, threads):
    model = cfg.build_model(cfg._require(raw, "model"))
    imm = cfg.build_immersion(raw, model)
    tol = raw.get("tolerances", {}).get("classify", EPS_CAUSAL)
    report = imm.mean_curvature_report(tol=tol)
    payload = {"subcommand": "classify", "report": report.to_dict()}
    if raw.get("output", {}).get("csv"):
        cols = {f"H_{c}": report.H[..., i] for i, c in enumerate(model.coords)}
        cols["causal_class"] = np.array(
            [c.value for c in report.classes.ravel()], dtype=object
        ).reshape(report.classes.shape)
        write_fields_csv(out_dir / raw["output"]["csv"], imm.mesh, cols)
    return payload, EXIT_OK


def cmd_identities(raw, out_dir, seed, threads):
    model = cfg.build_model(cfg._require(raw, "model"))
    imm = cfg.build_immersion(raw, model)
    X = cfg.build_field(raw, model)
    payload = {"subcommand": "identities", "div_S": _field_stats(div_S(imm, X))}
    payload["pointwise_residual"] = _field_stats(divergence_residual(imm, X))
    if imm.mesh.closed:
        payload["integral_report"] = verify_integral_formula(imm, X).to_dict()
    return payload, EXIT_OK


def cmd_graph(raw, out_dir, seed, threads):
    model = cfg.build_static_model(raw)
    graph = cfg.build_graph_function(raw, model)
    ok, margin = spacelike_check(graph)
    payload = {"subcommand": "graph", "spacelike": ok, "min_margin": margin}
    if ok:
        angle = hyperbolic_angle(graph)
        H = graph_mean_curvature(graph)
        payload["hyperbolic_angle"] = {"min": float(np.min(angle)), "max": float(np.max(angle))}
        payload["mean_curvature"] = _field_stats(H)
        if raw.get("output", {}).get("csv"):
            write_fields_csv(
                out_dir / raw["output"]["csv"], model.mesh,
                {"u": graph.u, "H": H, "cosh_angle": angle, "margin": graph.margin},
            )
    return payload, EXIT_OK


def cmd_solve(raw, out_dir, seed, threads):
    model = cfg.build_static_model(raw)
    spec = cfg.build_problem(raw, model, seed=seed)
    body = raw.get("problem", {})
    if "u_check" in body:
        candidate = GraphFunction.from_expr(model, body["u_check"]).u
        payload = {
            "subcommand": "solve",
            "inequality_check": inequality_solution_check(spec, candidate),
        }
        return payload, EXIT_OK
    result = solve(spec)
    payload = {"subcommand": "solve", "result": result.to_dict()}
    if raw.get("output", {}).get("csv"):
        write_fields_csv(out_dir / raw["output"]["csv"], model.mesh, {"u": result.u})
    code = EXIT_OK if result.verdict != "nonconvergent" else EXIT_NONCONVERGENT
    return payload, code


def cmd_initial_data(raw, out_dir, seed, threads):
    data = cfg.build_initial_data(raw)
    if isinstance(data, GriddedInitialData):
        r1, r2 = constraint_residuals_gridded(data)
        payload = {
            "subcommand": "initial-data",
            "gridded": True,
            "constraints": {
                "hamiltonian_residual": _field_stats(r1),
                "momentum_residual": _field_stats(r2),
                "expected_order": 2,
            },
            "definiteness": definiteness_report(data),
        }
        return payload, EXIT_OK
    r1, r2 = constraint_residuals(data)
    payload = {
        "subcommand": "initial-data",
        "constraints": {
            "hamiltonian_residual": _field_stats(r1),
            "momentum_residual": _field_stats(r2),
        },
        "definiteness": definiteness_report(data),
    }
    development = (
        cfg.build_model(raw["development"]) if "development" in raw else None
    )
    if "submanifold" in raw:
        sub = dict(raw["submanifold"])
        P = cfg.build_immersion({"immersion": sub}, data.space, data.mesh)
        payload["obstruction"] = stationarity_obstruction(data, P, development).to_dict()
    if development is not None and "normal_flow" in raw:
        nf = raw["normal_flow"]
        slice_map = ("0",) + data.coords
        slice_imm = ImmersedSubmanifold.from_exprs(data.mesh, development, slice_map)
        payload["normal_flow"] = normal_flow_margin(
            data, development, slice_imm,
            t_range=tuple(nf.get("t_range", (1.0, 1.0))),
            steps=int(nf.get("steps", 64)),
            max_samples=int(nf.get("max_samples", 8)),
        )
    return payload, EXIT_OK


def cmd_symmetry(raw, out_dir, seed, threads):
    model = cfg.build_model(cfg._require(raw, "model"))
    X = cfg.build_field(raw, model)
    region = cfg._require(raw, "region")
    bounds = region.get("bounds")
    if not isinstance(bounds, dict):
        raise ConfigError("[region] needs a 'bounds' table of coordinate ranges")
    report = analyze_vector_field(
        model, X, bounds,
        n_points=int(region.get("n_points", 128)),
        n_random_vectors=int(region.get("n_random_vectors", 200)),
        seed=seed,
    )
    payload = {
        "subcommand": "symmetry",
        "report": report.to_dict(),
        "applicability": theorem_applicability(report),
    }
    return payload, EXIT_OK


def cmd_suite(raw, out_dir, seed, threads):
    results = run_suite(seed=seed, threads=threads, echo=lambda line: print(line))
    payload = {"subcommand": "suite", **results}
    return payload, EXIT_OK if results["all_passed"] else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="spacelike",
        description="numerical laboratory for spacelike submanifolds",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    commands = {
        "classify": cmd_classify,
        "identities": cmd_identities,
        "graph": cmd_graph,
        "solve": cmd_solve,
        "initial-data": cmd_initial_data,
        "symmetry": cmd_symmetry,
        "suite": cmd_suite,
    }
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "suite"), default=None)
        p.add_argument("--out", default=".")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--threads", type=int,
            default=int(os.environ.get("SPACELIKE_THREADS", "1")),
        )
    args = parser.parse_args(argv)
    out_dir = Path(args.out)
    try:
        raw = cfg.load_config(args.config) if args.config else {}
        seed = int(raw.get("seed", args.seed))
        threads = int(raw.get("threads", args.threads))
        payload, code = commands[args.subcommand](raw, out_dir, seed, threads)
    except (ConfigError, ExprSyntaxError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpacelikeError as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    json_name = raw.get("output", {}).get("json", "report.json") if args.config else "report.json"
    write_report(out_dir / json_name, payload)
    return code


if __name__ == "__main__":
    sys.exit(main())
