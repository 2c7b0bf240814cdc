# bench_manager.py

import time
from dataclasses import replace
from multiprocessing import Pool
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from config import logger
from errors import InfeasibleProblemError
from models import RunStats, SolveOptions, TrialResult, WeightedGraph
from multilevel import empty_partition, solve
from parser_graph import load_graph

# Trial arguments: (graph name, graph, seed, rule, options)
Trial = tuple[str, WeightedGraph, int, str, SolveOptions]

STATISTICS = ("avg", "min", "max")


def parse_seed_range(text: str) -> list[int]:
    """'7' -> [7]; '1..100' -> [1, ..., 100]; '1,5,9' -> [1, 5, 9]."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            first, last = int(lo), int(hi)
            if last < first:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(first, last + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {text!r}")
    return seeds


def run_trial(trial: Trial) -> TrialResult:
    """One (graph, seed, rule) solve; an infeasible instance yields a row with feasible=0."""
    name, graph, seed, rule, opts = trial
    started = time.perf_counter()
    try:
        partition, stats = solve(graph, replace(opts, seed=seed, rule=rule))
    except InfeasibleProblemError as e:
        logger.warning("%s seed %d: %s", name, seed, e)
        partition, stats = empty_partition(graph), RunStats()
        stats.solve_ms = (time.perf_counter() - started) * 1000.0
    return TrialResult(
        graph=name,
        seed=seed,
        rule=rule,
        n=graph.n,
        m=graph.m,
        cost_S=partition.cost_S,
        weight_A=partition.weight_A,
        weight_B=partition.weight_B,
        levels=stats.depth,
        time_ms=stats.solve_ms,
        feasible=partition.feasible,
    )


class BenchManager:
    """Runs graph x seed x rule trials and collects rows in deterministic order."""

    def __init__(self, opts: Optional[SolveOptions] = None, jobs: int = 1):
        self.opts = opts or SolveOptions()
        self.jobs = max(1, int(jobs))
        self.results: list[TrialResult] = []

    def load(self, paths: Sequence[Path], fmt: Optional[str] = None) -> list[tuple[str, WeightedGraph]]:
        return [(Path(path).name, load_graph(Path(path), fmt)) for path in paths]

    def trials(
        self, graphs: Sequence[tuple[str, WeightedGraph]], seeds: Sequence[int], rules: Sequence[str]
    ) -> list[Trial]:
        return [
            (name, graph, seed, rule, self.opts)
            for name, graph in graphs
            for seed in seeds
            for rule in rules
        ]

    def run(
        self, graphs: Sequence[tuple[str, WeightedGraph]], seeds: Sequence[int], rules: Sequence[str]
    ) -> list[TrialResult]:
        trials = self.trials(graphs, seeds, rules)
        logger.info("Running %d trials on %d worker(s)", len(trials), self.jobs)
        if self.jobs > 1 and len(trials) > 1:
            # map keeps submission order
            with Pool(min(self.jobs, len(trials))) as pool:
                self.results = pool.map(run_trial, trials)
        else:
            self.results = [run_trial(trial) for trial in trials]
        return self.results

    def summary(self) -> list[TrialResult]:
        """avg/min/max cost_S rows per (graph, rule), over feasible trials."""
        groups: dict[tuple[str, str], list[TrialResult]] = {}
        for result in self.results:
            groups.setdefault((result.graph, result.rule), []).append(result)

        rows = []
        for (name, rule), results in groups.items():
            feasible = [r for r in results if r.feasible]
            if not feasible:
                logger.warning("%s (%s): no feasible trial to summarize", name, rule)
                continue
            costs = np.array([r.cost_S for r in feasible])
            weight_a = np.array([r.weight_A for r in feasible])
            weight_b = np.array([r.weight_B for r in feasible])
            times = np.array([r.time_ms for r in feasible])
            levels = np.array([r.levels for r in feasible])
            for stat, reduce in zip(STATISTICS, (np.mean, np.min, np.max)):
                rows.append(
                    TrialResult(
                        graph=name,
                        seed=stat,
                        rule=rule,
                        n=feasible[0].n,
                        m=feasible[0].m,
                        cost_S=float(reduce(costs)),
                        weight_A=float(reduce(weight_a)),
                        weight_B=float(reduce(weight_b)),
                        levels=float(reduce(levels)),
                        time_ms=float(reduce(times)),
                        feasible=len(feasible) == len(results),
                    )
                )
        return rows

    def rows(self) -> list[list[object]]:
        return [r.as_row() for r in self.results] + [r.as_row() for r in self.summary()]
