# cli.py

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from bench_manager import BenchManager, parse_seed_range
from coarsening import RULES
from config import logger, Config
from errors import (
    GraphFormatError,
    InfeasibleProblemError,
    InvalidSeparatorError,
    PreconditionError,
)
from file_manager import FileManager, solve_report
from models import SeparatorProblem, SolveOptions, WeightedGraph
from multilevel import derive_bounds, solve
from oracle import exact_vsp
from parser_graph import load_graph
from parser_partition import parse_partition, read_text as read_partition_text
from qp_engine import partition_from_labels, validate_labels

RULE_ALIASES = {"he": "heavy_edge", "rm": "random", "heavy_edge": "heavy_edge", "random": "random"}

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, type=Path, help="Graph file (METIS or edge list)")
    p.add_argument("--format", choices=["metis", "edgelist"], default=None,
                   help="Input format (default: inferred from the extension)")
    p.add_argument("--balance", type=float, default=Config.DEFAULT_BALANCE,
                   help="Shore bound fraction: u_a = u_b = floor(balance * W(V))")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=None, help="Penalty weight (default: max vertex cost)")
    p.add_argument("--epsilon", type=float, default=Config.EPSILON, help="c-perturbation size")
    p.add_argument("--eta", type=float, default=Config.ETA, help="Joint-step margin in MCA")
    p.add_argument("--refine-stride", type=float, default=None,
                   help="Refine intermediate levels only after the vertex count grows by this factor")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vsep", description="Multilevel vertex separator solver")
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="Solve one graph with one seed")
    _add_graph_args(p_solve)
    _add_solver_args(p_solve)
    p_solve.add_argument("--rule", choices=sorted(RULE_ALIASES), default="he")
    p_solve.add_argument("--seed", type=int, default=1)
    p_solve.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH",
                         help="Write a JSON report (stdout when PATH is omitted)")
    p_solve.add_argument("--partition-out", type=Path, default=None,
                         help="Write labels (0 = A, 1 = B, 2 = S), one per line")
    p_solve.add_argument("--copy", action="store_true", help="Copy the summary to the clipboard")

    p_bench = sub.add_parser("bench", help="Run graph x seed x rule trials")
    p_bench.add_argument("--graphs", required=True, type=Path, help="File listing one graph path per line")
    p_bench.add_argument("--format", choices=["metis", "edgelist"], default=None)
    p_bench.add_argument("--balance", type=float, default=Config.DEFAULT_BALANCE)
    _add_solver_args(p_bench)
    p_bench.add_argument("--rule", choices=sorted(RULE_ALIASES) + ["all"], default="he")
    p_bench.add_argument("--seeds", default="1..10", help="Seeds, e.g. 1..100 or 1,5,9")
    p_bench.add_argument("--jobs", type=int, default=1, help="Worker processes")
    p_bench.add_argument("--csv", type=Path, default=None, help="CSV output (stdout when omitted)")

    p_oracle = sub.add_parser("oracle", help="Exact separator by enumeration (n <= 14)")
    _add_graph_args(p_oracle)
    p_oracle.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH")

    p_check = sub.add_parser("check", help="Validate a partition file against a graph")
    _add_graph_args(p_check)
    p_check.add_argument("--partition", required=True, type=Path)
    return ap


def _options(args: argparse.Namespace, rule: str, seed: int) -> SolveOptions:
    return SolveOptions(
        balance=args.balance,
        rule=rule,
        seed=seed,
        gamma=args.gamma,
        epsilon=args.epsilon,
        eta=args.eta,
        refine_stride=args.refine_stride,
    )


def _emit_json(target: str, payload: dict, files: FileManager) -> None:
    if target == "-":
        print(json.dumps(payload, indent=2, default=float))
    else:
        files.write_json(Path(target), payload)


def _plain_problem(g: WeightedGraph, balance: float) -> SeparatorProblem:
    la, ua, lb, ub = derive_bounds(g, balance)
    return SeparatorProblem(graph=g, la=la, ua=ua, lb=lb, ub=ub, gamma=1.0, cost=g.vertex_cost)


def cmd_solve(args: argparse.Namespace, files: FileManager) -> int:
    graph = load_graph(args.graph, args.format)
    partition, stats = solve(graph, _options(args, RULE_ALIASES[args.rule], args.seed))

    lines = [f"graph={args.graph.name} n={graph.n} m={graph.m}"]
    lines += partition.format_summary()
    lines.append(f"levels={stats.depth}")
    for level in stats.levels:
        lines.append(
            f"  level {level.level}: n={level.n} cost {level.cost_initial:g} -> "
            f"{level.cost_final:g} improvement={level.improvement:.2f}%"
        )
    lines.append(f"time_ms={stats.solve_ms:.3f} (coarsen {stats.coarsen_ms:.3f})")
    if args.json != "-":
        print("\n".join(lines))

    if args.json is not None:
        _emit_json(args.json, solve_report(args.graph.name, partition, stats), files)
    if args.partition_out is not None:
        files.write_partition(args.partition_out, partition)
    if args.copy and not files.copy_to_clipboard(lines):
        print("Clipboard unavailable", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, files: FileManager) -> int:
    seeds = parse_seed_range(args.seeds)
    rules = list(RULES) if args.rule == "all" else [RULE_ALIASES[args.rule]]
    bench = BenchManager(_options(args, rules[0], seeds[0]), jobs=args.jobs)
    graphs = bench.load(files.read_graph_list(args.graphs), args.format)
    bench.run(graphs, seeds, rules)
    rows = bench.rows()

    if args.csv is not None:
        files.write_csv(args.csv, rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(Config.CSV_COLUMNS)
        writer.writerows(rows)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, files: FileManager) -> int:
    graph = load_graph(args.graph, args.format)
    bounds = derive_bounds(graph, args.balance)
    found = exact_vsp(graph, bounds)
    if found is None:
        print(f"infeasible: no separator within bounds {bounds}")
        return EXIT_INFEASIBLE
    best, partition = found
    if args.json != "-":
        print(f"optimum={best:g}")
        print("\n".join(partition.format_summary()))
        print("S=" + " ".join(str(i + 1) for i in partition.S))
    if args.json is not None:
        payload = {
            "graph": args.graph.name,
            "optimum": best,
            "labels": partition.labels.tolist(),
            "separator": (partition.S + 1).tolist(),
        }
        _emit_json(args.json, payload, files)
    return EXIT_OK


def cmd_check(args: argparse.Namespace, files: FileManager) -> int:
    graph = load_graph(args.graph, args.format)
    labels = parse_partition(read_partition_text(args.partition), graph.n)
    problem = _plain_problem(graph, args.balance)
    problems = validate_labels(problem, labels)
    if problems:
        print("invalid")
        for problem_text in problems:
            print(f"  {problem_text}")
        return 1
    print("valid")
    print("\n".join(partition_from_labels(problem, labels).format_summary()))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "bench": cmd_bench,
    "oracle": cmd_oracle,
    "check": cmd_check,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one subcommand and map failures to exit codes."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    files = FileManager()
    try:
        return COMMANDS[args.command](args, files)
    except GraphFormatError as e:
        code, message = EXIT_IO, f"format error: {e}"
    except InfeasibleProblemError as e:
        code, message = EXIT_INFEASIBLE, f"infeasible: {e}"
    except (PreconditionError, InvalidSeparatorError) as e:
        code, message = EXIT_INTERNAL, f"internal error: {e}"
    except OSError as e:
        code, message = EXIT_IO, f"I/O error: {e}"
    except ValueError as e:
        code, message = EXIT_USAGE, f"usage error: {e}"
    logger.error(message)
    print(message, file=sys.stderr)
    return code
