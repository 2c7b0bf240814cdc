# multilevel.py

import math
import time
from typing import Optional

import numpy as np

from coarsening import build_hierarchy, prolong
from config import logger, Config
from errors import InfeasibleProblemError, PreconditionError
from models import (
    ContinuousPoint,
    LevelStats,
    Partition,
    RunStats,
    SeparatorProblem,
    SolveOptions,
    WeightedGraph,
)
from perturbation import mca_gr
from qp_engine import (
    binarize,
    extract_partition,
    initial_point,
    make_separator,
    push_fractional,
    rescore,
    round_mostly_binary,
)


def derive_bounds(
    g: WeightedGraph,
    balance: float = Config.DEFAULT_BALANCE,
    la: float = Config.DEFAULT_LOWER_BOUND,
    lb: float = Config.DEFAULT_LOWER_BOUND,
) -> tuple[float, float, float, float]:
    """(la, ua, lb, ub) with ua = ub = floor(balance * W(V))."""
    if not 0 < balance <= 1:
        raise ValueError(f"balance must be in (0, 1], got {balance}")
    upper = float(math.floor(balance * g.total_weight + Config.FEAS_TOL))
    if upper < la or upper < lb:
        raise InfeasibleProblemError(
            f"upper bound {upper:g} below lower bounds ({la:g}, {lb:g})"
        )
    return float(la), upper, float(lb), upper


def induced_cost(p: SeparatorProblem, pt: ContinuousPoint) -> float:
    """Cost of the vertices that are in neither shore (or in both)."""
    tol = Config.BINARY_TOL
    in_a = pt.x >= 1.0 - tol
    in_b = pt.y >= 1.0 - tol
    return float(p.graph.vertex_cost[in_a == in_b].sum())


def _should_refine(level: int, depth: int, n: int, last_n: Optional[int], stride: Optional[float]) -> bool:
    if stride is None or last_n is None or level == 0 or level == depth - 1:
        return True
    return n >= stride * last_n


def solve(g: WeightedGraph, opts: Optional[SolveOptions] = None) -> tuple[Partition, RunStats]:
    """Coarsen, solve at the coarsest level, then prolong and refine level by level."""
    opts = opts or SolveOptions()
    la, ua, lb, ub = derive_bounds(g, opts.balance, opts.la, opts.lb)
    SeparatorProblem.create(g, la, ua, lb, ub, gamma=opts.gamma, eta=opts.eta)

    stats = RunStats()
    started = time.perf_counter()
    hierarchy = build_hierarchy(g, opts.rule, opts.seed)
    stats.coarsen_ms = (time.perf_counter() - started) * 1000.0

    started = time.perf_counter()
    point: Optional[ContinuousPoint] = None
    partition: Optional[Partition] = None
    last_refined_n: Optional[int] = None
    depth = hierarchy.depth
    for level in reversed(range(depth)):
        graph = hierarchy.levels[level]
        problem = SeparatorProblem(
            graph=graph,
            la=la,
            ua=ua,
            lb=lb,
            ub=ub,
            gamma=float(opts.gamma if opts.gamma is not None else graph.vertex_cost.max()),
            cost=graph.vertex_cost,
            eta=opts.eta,
        )
        if point is None:
            start = initial_point(problem)
        else:
            start = prolong(point, hierarchy.matchings[level], problem)
        cost_initial = induced_cost(problem, start)

        level_started = time.perf_counter()
        refine = _should_refine(level, depth, graph.n, last_refined_n, opts.refine_stride)
        if refine:
            if opts.fm_first and opts.fm_refiner is not None:
                start = rescore(problem, opts.fm_refiner(problem, start))
            refined = mca_gr(problem, start, opts.epsilon)
            last_refined_n = graph.n
        else:
            refined = start
        f_start = start.f

        rounded = push_fractional(problem, round_mostly_binary(problem, refined))
        binary = binarize(problem, rounded)
        try:
            point = make_separator(problem, binary)
        except PreconditionError:
            if level == 0:
                raise
            logger.warning("Level %d: could not clear the penalty, prolonging as is", level)
            point = binary

        if level == 0:
            partition = extract_partition(problem, point)
            cost_final = partition.cost_S
        else:
            cost_final = induced_cost(problem, point)

        level_stats = LevelStats(
            level=level,
            n=graph.n,
            m=graph.m,
            f_start=f_start,
            f_refined=refined.f,
            cost_initial=cost_initial,
            cost_final=cost_final,
            total_cost=graph.total_cost,
            refined=refine,
            refine_ms=(time.perf_counter() - level_started) * 1000.0,
        )
        stats.levels.append(level_stats)
        logger.info(
            "Level %d: n=%d, f %.6g -> %.6g, separator cost %g -> %g (%.2f%%)",
            level,
            graph.n,
            f_start,
            refined.f,
            cost_initial,
            cost_final,
            level_stats.improvement,
        )

    stats.solve_ms = (time.perf_counter() - started) * 1000.0
    assert partition is not None
    return partition, stats


def empty_partition(g: WeightedGraph) -> Partition:
    return Partition(
        labels=np.full(g.n, Partition.LABEL_S, dtype=np.int8),
        cost_S=g.total_cost,
        weight_A=0.0,
        weight_B=0.0,
        feasible=False,
    )
