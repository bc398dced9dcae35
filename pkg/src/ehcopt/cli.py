"""Command-line interface.

Subcommands mirror the pipeline stages: ``transform`` (expand a task
graph), ``solve`` (optimal allocation), ``baseline`` (extreme cases vs.
optimum report), ``generate`` (random benchmark), ``export`` (MPS/LP
files), and ``stats`` (model size report).

Exit codes: 0 success, 2 validation/input error, 3 proven infeasible,
4 time limit reached (incumbent with gap reported).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, presets
from .etfg import save_etfg, transform
from .generator import (
    GenSpec,
    ParamSpec,
    default_param_spec,
    generate_tfg,
    structure_stats,
    synthesize_params,
)
from .milp import Objective, build_model, model_stats
from .model import (
    GraphValidationError,
    SystemModelError,
    load_system_model,
    load_task_graph,
    save_task_graph,
    validate_task_graph,
)
from .mps import model_to_lp, model_to_mps
from .solver import SolveConfig, SolveStatus, solve
from .units import UnitError, parse_quantity

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_TIME_LIMIT = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _load_system(config: str, profile: str | None):
    if config in presets.CONFIGURATIONS:
        return presets.system_model(config, profile or "run1")
    system = load_system_model(config)
    if profile is not None:
        from .model import make_system_model

        system = make_system_model(list(system.devices.values()), presets.channels(profile))
    return system


def _load_graph(path: str):
    graph = load_task_graph(path)
    report = validate_task_graph(graph)
    if not report.ok:
        raise CliError(f"invalid task graph: {report}", EXIT_VALIDATION)
    return graph


def _threshold(args, objective: Objective) -> Fraction | None:
    if getattr(args, "lthr", None) is not None:
        return parse_quantity(args.lthr, "time")
    if objective is Objective.ENERGY:
        return presets.DEFAULT_LATENCY_THRESHOLD
    return None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_transform(args) -> int:
    graph = _load_graph(args.tfg)
    system = _load_system(args.config, args.channel_profile)
    etfg = transform(graph, system)
    out = _out_dir(args)
    save_etfg(etfg, out / "etfg.json", out / "etfg.dot")
    print(f"expanded {len(graph.tasks)} tasks / {len(graph.arcs)} arcs "
          f"-> {etfg.node_count} candidate nodes / {etfg.arc_count} arcs")
    print(f"wrote {out / 'etfg.json'} and {out / 'etfg.dot'}")
    return EXIT_OK


def cmd_solve(args) -> int:
    graph = _load_graph(args.tfg)
    system = _load_system(args.config, args.channel_profile)
    etfg = transform(graph, system)
    objective = Objective(args.objective)
    threshold = _threshold(args, objective)
    config = SolveConfig(time_limit=args.time_limit, threads=args.threads)
    allocation = solve(etfg, objective, threshold, config, method=args.solver)
    out = _out_dir(args)
    (out / "allocation.json").write_text(
        json.dumps(allocation.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    (out / "solver_stats.json").write_text(
        json.dumps(allocation.stats, indent=2, sort_keys=True, default=str) + "\n"
    )
    print(f"status: {allocation.status.value}")
    if allocation.objective_value is not None:
        print(f"{objective.value}: {float(allocation.objective_value):.6g}")
    if allocation.gap is not None:
        print(f"gap: {allocation.gap:.4f}")
    print(f"wrote {out / 'allocation.json'}")
    if allocation.status is SolveStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    if allocation.status is SolveStatus.FEASIBLE:
        return EXIT_TIME_LIMIT
    return EXIT_OK


def cmd_baseline(args) -> int:
    graph = _load_graph(args.tfg)
    system = _load_system(args.config, args.channel_profile)
    etfg = transform(graph, system)
    objective = Objective(args.objective)
    threshold = _threshold(args, Objective.ENERGY)
    config = SolveConfig(time_limit=args.time_limit, threads=args.threads)
    cases = analysis.run_baselines(etfg, objective, threshold, config)
    out = _out_dir(args)
    (out / "baseline.csv").write_text(analysis.cases_to_csv(cases))
    (out / "baseline.json").write_text(analysis.cases_to_json(cases))
    for case in cases:
        value = "-" if case.objective_value is None else f"{float(case.objective_value):.6g}"
        flag = "feasible" if case.feasible else f"INFEASIBLE ({case.detail})"
        print(f"{case.kind:>4}: {value:>12}  {flag}")
    print(f"wrote {out / 'baseline.csv'} and {out / 'baseline.json'}")
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = GenSpec(
        structure=args.structure,
        node_count=args.nodes,
        max_in_degree=args.max_in_degree,
        max_out_degree=args.max_out_degree,
        fixed_edge_fraction=Fraction(args.fixed_edge).limit_denominator(10**6),
        fixed_hub_fraction=Fraction(args.fixed_hub).limit_denominator(10**6),
        seed=args.seed,
    )
    system = _load_system(args.config, args.channel_profile)
    if args.params is not None:
        pspec = ParamSpec.from_dict(json.loads(Path(args.params).read_text()))
    else:
        config_name = args.config if args.config in presets.CONFIGURATIONS else "C1"
        pspec = default_param_spec(config_name)
    structure = generate_tfg(spec)
    graph = synthesize_params(structure, pspec, system, spec.seed)
    out = _out_dir(args)
    save_task_graph(graph, out / "tfg.json")
    meta = {
        "schema": 1,
        "genspec": spec.to_dict(),
        "paramspec": pspec.to_dict(),
        "statistics": structure_stats(graph),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    stats = meta["statistics"]
    print(f"generated {stats['nodes']} tasks / {stats['arcs']} arcs "
          f"(depth {stats['depth']}, max width {stats['max_width']})")
    print(f"wrote {out / 'tfg.json'} and {out / 'meta.json'}")
    return EXIT_OK


def cmd_export(args) -> int:
    graph = _load_graph(args.tfg)
    system = _load_system(args.config, args.channel_profile)
    etfg = transform(graph, system)
    objective = Objective(args.objective)
    model = build_model(etfg, objective, _threshold(args, objective))
    out = _out_dir(args)
    written = []
    if args.format in ("mps", "both"):
        path = out / "model.mps"
        path.write_text(model_to_mps(model))
        written.append(path)
    if args.format in ("lp", "both"):
        path = out / "model.lp"
        path.write_text(model_to_lp(model))
        written.append(path)
    print(f"{model.num_variables} variables, {len(model.rows)} rows")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_stats(args) -> int:
    graph = _load_graph(args.tfg)
    system = _load_system(args.config, args.channel_profile)
    etfg = transform(graph, system)
    objective = Objective(args.objective)
    model = build_model(etfg, objective, _threshold(args, objective))
    stats = model_stats(model)
    text = json.dumps(stats, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        out = _out_dir(args)
        (out / "model_stats.json").write_text(text)
        print(f"wrote {out / 'model_stats.json'}")
    sys.stdout.write(text)
    return EXIT_OK


def _add_common(parser, tfg=True):
    if tfg:
        parser.add_argument("tfg", help="task graph JSON file")
    parser.add_argument(
        "--config",
        default="C1",
        help="device configuration: C1, C2, C3, or a system-model JSON path",
    )
    parser.add_argument(
        "--channel-profile",
        choices=sorted(presets.CHANNEL_PROFILES),
        default=None,
        help="override channel parameters with a named profile",
    )


def _add_solver_flags(parser):
    parser.add_argument("--objective", choices=["latency", "energy"], default="latency")
    parser.add_argument("--lthr", default=None, help="latency threshold, e.g. 8000ms (energy objective)")
    parser.add_argument("--time-limit", type=float, default=None, help="solver wall-time limit in seconds")
    parser.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehcopt",
        description="Design-time task allocation for edge/hub/cloud applications",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="expand a task graph over its candidate devices")
    _add_common(p)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("solve", help="compute an optimal allocation")
    _add_common(p)
    _add_solver_flags(p)
    p.add_argument("--solver", choices=["auto", "bruteforce", "tree-dp", "bnb"], default="auto")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("baseline", help="extreme allocations vs. optimum report")
    _add_common(p)
    _add_solver_flags(p)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("generate", help="generate a random benchmark task graph")
    _add_common(p, tfg=False)
    p.add_argument("--structure", choices=["parallel", "serial", "mixed"], required=True)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--max-in-degree", type=int, default=3)
    p.add_argument("--max-out-degree", type=int, default=3)
    p.add_argument("--fixed-edge", type=float, default=0.0, help="fraction of tasks pinned to the edge device")
    p.add_argument("--fixed-hub", type=float, default=0.0, help="fraction of tasks pinned to the hub device")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", default=None, help="parameter-synthesis ranges JSON")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("export", help="write the allocation model as MPS/LP")
    _add_common(p)
    p.add_argument("--objective", choices=["latency", "energy"], default="latency")
    p.add_argument("--lthr", default=None)
    p.add_argument("--format", choices=["mps", "lp", "both"], default="both")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", help="model size statistics")
    _add_common(p)
    p.add_argument("--objective", choices=["latency", "energy"], default="latency")
    p.add_argument("--lthr", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (GraphValidationError, SystemModelError, UnitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
