# oracle.py

from typing import Optional

import numpy as np

from config import logger, Config
from errors import InfeasibleProblemError, PreconditionError
from models import FloatArray, Partition, SeparatorProblem, WeightedGraph
from qp_engine import partition_from_labels

_CHUNK = 1 << 17


def exact_vsp(
    g: WeightedGraph, bounds: tuple[float, float, float, float]
) -> Optional[tuple[float, Partition]]:
    """
    Minimum-cost separator by enumerating all 3^n labelings.

    Returns None when no labeling has both shores within bounds and no
    A-B edge. Among optimal labelings the one with the lexicographically
    smallest S (then A) is returned.
    """
    n = g.n
    if n > Config.ORACLE_MAX_VERTICES:
        raise PreconditionError(
            f"exact_vsp is limited to {Config.ORACLE_MAX_VERTICES} vertices, got {n}"
        )
    la, ua, lb, ub = bounds
    tol = Config.FEAS_TOL
    w = g.vertex_weight
    c = g.vertex_cost
    upper = g.adjacency.tocoo()
    keep = upper.row < upper.col
    rows, cols = upper.row[keep], upper.col[keep]
    powers = 3 ** np.arange(n, dtype=np.int64)

    best = np.inf
    candidates: list[np.ndarray] = []
    for start in range(0, 3**n, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, 3**n), dtype=np.int64)
        labels = ((codes[:, None] // powers[None, :]) % 3).astype(np.int8)
        in_a = labels == Partition.LABEL_A
        in_b = labels == Partition.LABEL_B
        cut = ((in_a[:, rows] & in_b[:, cols]) | (in_b[:, rows] & in_a[:, cols])).any(axis=1)
        weight_a = in_a @ w
        weight_b = in_b @ w
        ok = (
            ~cut
            & (weight_a >= la - tol)
            & (weight_a <= ua + tol)
            & (weight_b >= lb - tol)
            & (weight_b <= ub + tol)
        )
        if not ok.any():
            continue
        cost = (labels == Partition.LABEL_S) @ c
        chunk_best = float(cost[ok].min())
        if chunk_best < best - tol:
            best = chunk_best
            candidates = []
        if chunk_best <= best + tol:
            candidates.append(labels[ok & (cost <= best + tol)])

    if not candidates:
        logger.info("exact_vsp: infeasible instance (n=%d)", n)
        return None

    def key(lab: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (
            tuple(np.flatnonzero(lab == Partition.LABEL_S).tolist()),
            tuple(np.flatnonzero(lab == Partition.LABEL_A).tolist()),
        )

    chosen = min((lab for block in candidates for lab in block), key=key)
    problem = SeparatorProblem(
        graph=g, la=la, ua=ua, lb=lb, ub=ub, gamma=1.0, cost=g.vertex_cost
    )
    partition = partition_from_labels(problem, chosen)
    logger.info("exact_vsp: optimum %g over n=%d", best, n)
    return best, partition


def exact_lp(gradient: FloatArray, w: FloatArray, lo: float, hi: float) -> float:
    """
    max gradient'z over {0 <= z <= 1, lo <= w'z <= hi} by enumerating
    every vertex candidate: a 0/1 set, optionally completed by one
    fractional component that makes w'z hit lo or hi exactly.
    """
    gradient = np.asarray(gradient, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n = len(gradient)
    if n > Config.ORACLE_MAX_LP:
        raise PreconditionError(f"exact_lp is limited to {Config.ORACLE_MAX_LP} variables")
    tol = Config.FEAS_TOL
    if lo > hi + tol or lo > w.sum() + tol:
        raise InfeasibleProblemError(f"LP bounds infeasible: l={lo}, u={hi}, sum(w)={w.sum()}")

    masks = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    weight = masks @ w
    value = masks @ gradient

    best = -np.inf
    whole = (weight >= lo - tol) & (weight <= hi + tol)
    if whole.any():
        best = float(value[whole].max())
    for k in range(n):
        free = masks[:, k] == 0
        for target in (lo, hi):
            t = (target - weight) / w[k]
            ok = free & (t >= -tol) & (t <= 1.0 + tol)
            if ok.any():
                best = max(best, float((value[ok] + np.clip(t[ok], 0.0, 1.0) * gradient[k]).max()))
    return best
