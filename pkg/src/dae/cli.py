"""Command line front end.

Four subcommands: `solve` runs the exact sub-planner on a whole task,
`evolve` runs the experiment harness with either engine, `pareto` is
`evolve` pinned to the multi-objective engine, and `oracle` prints the
exhaustive small-depth front. Every flag can also come from a
`--config key=value` file; explicit flags win. With no --domain the
bundled calibration task is used.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .costs import parse_cost
from .errors import DaeError
from .grounding import ground
from .harness import (
    ExperimentConfig,
    brute_force_pareto,
    build_mini_zeno,
    fraction_str,
    mini_zeno_cost,
    run_experiment,
)
from .invariants import parse_invariants
from .pddl import parse_domain, parse_problem
from .planner import SearchLimits, SubProblem, solve


def _parse_config_file(path: str) -> dict[str, str]:
    out = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DaeError(f"{path}:{ln}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _pick(args, config: dict, key: str, default, cast):
    given = getattr(args, key, None)
    if given is not None:
        return given
    if key in config:
        try:
            return cast(config[key])
        except (TypeError, ValueError) as exc:
            raise DaeError(f"config key '{key}': {exc}") from exc
    return default


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", help="domain file (default: bundled task)")
    p.add_argument("--problem", help="problem file")
    p.add_argument("--invariants", help="station predicate declarations")
    p.add_argument("--cost", help="cost table file")
    p.add_argument("--config", help="key=value file; explicit flags win")


def _load_task(args, config):
    domain = _pick(args, config, "domain", None, str)
    problem = _pick(args, config, "problem", None, str)
    if domain is None:
        task, inv = build_mini_zeno()
        return task
    if problem is None:
        raise DaeError("--problem is required with --domain")
    dom = parse_domain(Path(domain).read_text(encoding="utf-8"))
    prob = parse_problem(Path(problem).read_text(encoding="utf-8"), dom)
    return ground(dom, prob)


def _load_cost(args, config, task, *, required: bool):
    path = _pick(args, config, "cost", None, str)
    if path is not None:
        return parse_cost(Path(path).read_text(encoding="utf-8"), known_objects={o for o, _ in task.objects})
    if _pick(args, config, "domain", None, str) is None:
        return mini_zeno_cost("additive")
    if required:
        raise DaeError("--cost is required with a custom domain here")
    return None


def _cmd_solve(args) -> int:
    config = _parse_config_file(args.config) if args.config else {}
    task = _load_task(args, config)
    limits = SearchLimits(
        max_backtracks=_pick(args, config, "max_backtracks", 10_000, int),
        max_sequence_length=_pick(args, config, "max_length", 14, int),
        max_makespan_bound=_pick(args, config, "max_makespan", None, int),
    )
    res = solve(SubProblem(task.init, task.goal, task), limits)
    print(f"outcome: {res.outcome.value}")
    if res.schedule is not None:
        from .schedule import plan_text

        text = plan_text(res.schedule)
        print(f"makespan: {res.makespan}")
        print(f"actions: {len(res.sequence)}")
        print(f"optimal: {res.optimal}")
        sys.stdout.write(text)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
    print(f"backtracks: {res.backtracks_used}  nodes: {res.nodes_expanded}")
    return 0 if res.outcome.value == "Solved" else 1


def _experiment_config(args, config, *, engine_forced: str | None = None) -> ExperimentConfig:
    engine = engine_forced or _pick(args, config, "engine", "es", str)
    return ExperimentConfig(
        out_dir=_pick(args, config, "out", "dae_out", str),
        engine=engine,
        runs=_pick(args, config, "runs", 1, int),
        seed=_pick(args, config, "seed", 1, int),
        mu=_pick(args, config, "mu", 10, int),
        lambda_=_pick(args, config, "lambda_", 70, int),
        pop=_pick(args, config, "pop", 100, int),
        gens=_pick(args, config, "gens", 30, int),
        max_backtracks=_pick(args, config, "max_backtracks", 2_000, int),
        max_sequence_length=_pick(args, config, "max_length", 14, int),
        domain_path=_pick(args, config, "domain", None, str),
        problem_path=_pick(args, config, "problem", None, str),
        invariants_path=_pick(args, config, "invariants", None, str),
        cost_path=_pick(args, config, "cost", None, str),
        cost_mode=_pick(args, config, "cost_mode", None, str),
        parallel=_pick(args, config, "parallel", 1, int),
        d_max=_pick(args, config, "d_max", 3, int),
    )


def _cmd_evolve(args, *, engine_forced: str | None = None) -> int:
    config = _parse_config_file(args.config) if args.config else {}
    cfg = _experiment_config(args, config, engine_forced=engine_forced)
    summary = run_experiment(cfg)
    for run in summary["runs"]:
        best = run["best"]
        mark = (
            f"makespan {best['makespan']} cost {best['cost']}"
            if best["feasible"]
            else "no feasible plan"
        )
        print(f"run {run['run']} (seed {run['seed']}): best fitness {best['fitness']}, {mark}")
    if cfg.engine == "nsga2":
        union = sorted({(mk, c) for run in summary["runs"] for mk, c in run["front"]})
        print("front points across runs:")
        for mk, c in union:
            print(f"  {mk},{c}")
    print(f"summary: {Path(cfg.out_dir) / 'summary.json'}")
    return 0


def _cmd_pareto(args) -> int:
    return _cmd_evolve(args, engine_forced="nsga2")


def _cmd_oracle(args) -> int:
    config = _parse_config_file(args.config) if args.config else {}
    task = _load_task(args, config)
    cost = _load_cost(args, config, task, required=True)
    front = brute_force_pareto(
        task,
        cost,
        max_depth=_pick(args, config, "depth", 8, int),
        node_cap=_pick(args, config, "node_cap", 5_000_000, int),
    )
    print("makespan,cost")
    for mk, c in front.points():
        print(f"{mk},{fraction_str(c)}")
    if args.out:
        lines = ["makespan,cost"] + [f"{mk},{fraction_str(c)}" for mk, c in front.points()]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dae", description="evolution-guided temporal planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the exact sub-planner on the whole task")
    _add_input_flags(p_solve)
    p_solve.add_argument("--max-backtracks", dest="max_backtracks", type=int)
    p_solve.add_argument("--max-length", dest="max_length", type=int)
    p_solve.add_argument("--max-makespan", dest="max_makespan", type=int)
    p_solve.add_argument("--out", help="write the plan here")
    p_solve.set_defaults(fn=_cmd_solve)

    for name, help_text, fn in (
        ("evolve", "run the evolutionary experiment harness", _cmd_evolve),
        ("pareto", "multi-objective runs (engine pinned to nsga2)", _cmd_pareto),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_input_flags(p)
        if name == "evolve":
            p.add_argument("--engine", choices=["es", "nsga2"])
        p.add_argument("--mu", type=int)
        p.add_argument("--lambda", dest="lambda_", type=int)
        p.add_argument("--pop", type=int)
        p.add_argument("--gens", type=int)
        p.add_argument("--runs", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--max-backtracks", dest="max_backtracks", type=int)
        p.add_argument("--max-length", dest="max_length", type=int)
        p.add_argument("--cost-mode", dest="cost_mode", choices=["additive", "max"])
        p.add_argument("--parallel", type=int)
        p.add_argument("--d-max", dest="d_max", type=int)
        p.add_argument("--out")
        p.set_defaults(fn=fn)

    p_oracle = sub.add_parser("oracle", help="exhaustive small-depth front")
    _add_input_flags(p_oracle)
    p_oracle.add_argument("--depth", type=int)
    p_oracle.add_argument("--node-cap", dest="node_cap", type=int)
    p_oracle.add_argument("--out", help="write the front as CSV here")
    p_oracle.set_defaults(fn=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DaeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
