# coarsening.py

from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse

from config import logger, Config
from errors import PreconditionError
from models import ContinuousPoint, Hierarchy, Matching, SeparatorProblem, WeightedGraph
from qp_engine import evaluate

RULES = ("heavy_edge", "random")
Seed = Union[int, Sequence[int]]


def coarsen(
    g: WeightedGraph,
    rule: str = "heavy_edge",
    rng_seed: Seed = 0,
    visit_order: Optional[Sequence[int]] = None,
) -> tuple[WeightedGraph, Matching]:
    """
    Contract one matching of g.

    Vertices are visited in a seeded random order (or visit_order when
    given); each unmatched vertex is merged with an unmatched neighbor,
    the heaviest edge winning under heavy_edge (smallest index on ties)
    and a uniform choice under random.
    """
    if rule not in RULES:
        raise ValueError(f"unknown matching rule {rule!r}")
    n = g.n
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(n) if visit_order is None else np.asarray(visit_order)

    indptr = g.adjacency.indptr.tolist()
    indices = g.adjacency.indices.tolist()
    data = g.adjacency.data.tolist()

    mate = [-1] * n
    contracted = 0.0
    for v in order.tolist():
        if mate[v] != -1:
            continue
        start, end = indptr[v], indptr[v + 1]
        best = -1
        best_w = 0.0
        if rule == "heavy_edge":
            for k in range(start, end):
                j = indices[k]
                if mate[j] == -1 and data[k] > best_w:
                    best, best_w = j, data[k]
        else:
            free = [k for k in range(start, end) if mate[indices[k]] == -1]
            if free:
                k = free[int(rng.integers(len(free)))]
                best, best_w = indices[k], data[k]
        if best >= 0:
            mate[v] = best
            mate[best] = v
            contracted += best_w
        else:
            mate[v] = v

    mate_arr = np.asarray(mate, dtype=np.int64)
    representative = np.minimum(np.arange(n, dtype=np.int64), mate_arr)
    _, fine_to_coarse = np.unique(representative, return_inverse=True)
    fine_to_coarse = fine_to_coarse.astype(np.int64).reshape(-1)
    n_coarse = int(fine_to_coarse.max()) + 1 if n else 0
    matching = Matching(fine_to_coarse, n_coarse, contracted)

    if n_coarse == n:
        logger.debug("Coarsening made no progress on %d vertices", n)
        return g, matching

    coo = g.adjacency.tocoo()
    rows = fine_to_coarse[coo.row]
    cols = fine_to_coarse[coo.col]
    keep = rows != cols
    adjacency = sparse.coo_array(
        (coo.data[keep], (rows[keep], cols[keep])), shape=(n_coarse, n_coarse)
    ).tocsr()
    adjacency.sum_duplicates()
    adjacency.sort_indices()

    coarse = WeightedGraph(
        adjacency=adjacency,
        vertex_cost=np.bincount(fine_to_coarse, weights=g.vertex_cost, minlength=n_coarse),
        vertex_weight=np.bincount(
            fine_to_coarse, weights=g.vertex_weight, minlength=n_coarse
        ),
    )
    logger.debug(
        "Coarsened %d -> %d vertices (%s), %d -> %d edges",
        n,
        n_coarse,
        rule,
        g.m,
        coarse.m,
    )
    return coarse, matching


def _small_enough(g: WeightedGraph) -> bool:
    return g.n < Config.MIN_COARSE_VERTICES or g.m < Config.MIN_COARSE_EDGES


def build_hierarchy(g: WeightedGraph, rule: str = "heavy_edge", rng_seed: int = 0) -> Hierarchy:
    """Coarsen until fewer than 75 vertices or 10 edges, or no shrinkage."""
    levels = [g]
    matchings: list[Matching] = []
    while not _small_enough(levels[-1]):
        fine = levels[-1]
        coarse, matching = coarsen(fine, rule, [rng_seed, len(levels)])
        if coarse.n == fine.n:
            break
        levels.append(coarse)
        matchings.append(matching)

    logger.info(
        "Hierarchy: %d levels, vertices %s",
        len(levels),
        " -> ".join(str(level.n) for level in levels),
    )
    return Hierarchy(levels=levels, matchings=matchings)


def prolong(
    coarse_point: ContinuousPoint, matching: Matching, problem: SeparatorProblem
) -> ContinuousPoint:
    """Copy each coarse (x_i, y_i) to the fine vertices matched into i."""
    if len(coarse_point.x) != matching.n_coarse:
        raise PreconditionError(
            f"point has {len(coarse_point.x)} entries, matching has {matching.n_coarse}"
        )
    if problem.graph.n != matching.n_fine:
        raise PreconditionError(
            f"fine problem has {problem.graph.n} vertices, matching has {matching.n_fine}"
        )
    cmap = matching.fine_to_coarse
    return evaluate(problem, coarse_point.x[cmap], coarse_point.y[cmap])
