# qp_engine.py

from typing import Optional

import numpy as np

from config import logger, Config
from errors import InfeasibleProblemError, InvalidSeparatorError, PreconditionError
from models import ContinuousPoint, FloatArray, IntArray, Partition, SeparatorProblem


def _score(p: SeparatorProblem, x: FloatArray, y: FloatArray, hy: FloatArray) -> float:
    return float(p.cost @ x + p.cost @ y - p.gamma * (x @ hy))


def evaluate(
    p: SeparatorProblem,
    x: FloatArray,
    y: FloatArray,
    hx: Optional[FloatArray] = None,
    hy: Optional[FloatArray] = None,
) -> ContinuousPoint:
    """Build a point with coherent H-products and objective."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if hx is None:
        hx = p.graph.hmul(x)
    if hy is None:
        hy = p.graph.hmul(y)
    return ContinuousPoint(x, y, hx, hy, _score(p, x, y, hy))


def rescore(p: SeparatorProblem, pt: ContinuousPoint) -> ContinuousPoint:
    """Same (x, y) scored under another cost vector or gamma."""
    return ContinuousPoint(pt.x, pt.y, pt.hx, pt.hy, _score(p, pt.x, pt.y, pt.hy))


def initial_point(p: SeparatorProblem) -> ContinuousPoint:
    """x_i = ua / W(V), y_i = ub / W(V)."""
    n = p.graph.n
    total = p.graph.total_weight
    return evaluate(p, np.full(n, p.ua / total), np.full(n, p.ub / total))


def objective(p: SeparatorProblem, pt: ContinuousPoint) -> float:
    return _score(p, pt.x, pt.y, pt.hy)


def penalty(pt: ContinuousPoint) -> float:
    return pt.penalty


def gradient_x(p: SeparatorProblem, pt: ContinuousPoint) -> FloatArray:
    return p.cost - p.gamma * pt.hy


def gradient_y(p: SeparatorProblem, pt: ContinuousPoint) -> FloatArray:
    return p.cost - p.gamma * pt.hx


def fractional_indices(z: FloatArray, tol: float = Config.BINARY_TOL) -> IntArray:
    return np.flatnonzero((z > tol) & (z < 1.0 - tol))


def is_feasible(p: SeparatorProblem, pt: ContinuousPoint, tol: float = Config.FEAS_TOL) -> bool:
    w = p.weight
    for z, (lo, hi) in ((pt.x, p.bounds("a")), (pt.y, p.bounds("b"))):
        if np.any(z < -tol) or np.any(z > 1.0 + tol):
            return False
        s = float(w @ z)
        if s < lo - tol or s > hi + tol:
            return False
    return True


def knapsack_lp(gradient: FloatArray, w: FloatArray, lo: float, hi: float) -> FloatArray:
    """
    argmax gradient'z over the box-and-knapsack polytope.

    Components are sorted by gradient_i / w_i (descending, index on ties)
    and pushed to 1 while the ratio is positive and w'z < hi, the last one
    fractionally. If w'z is still below lo the walk continues into the
    zero and negative ratios until w'z = lo.
    """
    gradient = np.asarray(gradient, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n = len(gradient)
    total = float(w.sum())
    if lo > hi + Config.FEAS_TOL or lo > total + Config.FEAS_TOL:
        raise InfeasibleProblemError(f"LP bounds infeasible: l={lo}, u={hi}, sum(w)={total}")

    ratio = gradient / w
    order = np.lexsort((np.arange(n), -ratio))
    ws = w[order]
    cw = np.cumsum(ws)
    z = np.zeros(n, dtype=np.float64)

    k = int(np.count_nonzero(ratio > 0))
    j = int(np.searchsorted(cw[:k], hi, side="right"))
    z[order[:j]] = 1.0
    filled = float(cw[j - 1]) if j else 0.0
    pos = j
    if j < k and filled < hi:
        z[order[j]] = (hi - filled) / ws[j]
        filled = hi
        pos = j + 1

    if filled < lo:
        need = lo - filled
        base = float(cw[pos - 1]) if pos else 0.0
        rest = cw[pos:] - base
        q = int(np.searchsorted(rest, need, side="left"))
        if q >= len(rest):
            z[order[pos:]] = 1.0
        else:
            z[order[pos : pos + q]] = 1.0
            got = float(rest[q - 1]) if q else 0.0
            z[order[pos + q]] = min(1.0, (need - got) / ws[pos + q])
    return z


def greedy_lp(p: SeparatorProblem, gradient: FloatArray, side: str) -> FloatArray:
    lo, hi = p.bounds(side)
    return knapsack_lp(gradient, p.weight, lo, hi)


def mca(
    p: SeparatorProblem, pt: ContinuousPoint, trace: Optional[list[float]] = None
) -> ContinuousPoint:
    """
    Alternating maximization in x and y.

    The joint step (x^, y^) is taken only when it beats both single steps
    by more than eta; after a single step only the other LP is re-solved.
    Stops when the best available step gains no more than the tolerance.
    """
    cur = rescore(p, pt)
    if trace is not None:
        trace.append(cur.f)
    last: Optional[str] = None
    cand_x = cand_y = cur
    for iteration in range(Config.MCA_MAX_ITER):
        tol = p.tolerance(cur.f)
        if last != "x":
            x_hat = greedy_lp(p, p.cost - p.gamma * cur.hy, "a")
            cand_x = evaluate(p, x_hat, cur.y, hy=cur.hy)
        if last != "y":
            y_hat = greedy_lp(p, p.cost - p.gamma * cur.hx, "b")
            cand_y = evaluate(p, cur.x, y_hat, hx=cur.hx)

        if last is None:
            joint = evaluate(p, cand_x.x, cand_y.y, hx=cand_x.hx, hy=cand_y.hy)
            if joint.f > max(cand_x.f, cand_y.f) + p.eta:
                nxt, step = joint, None
            elif cand_x.f > cand_y.f:
                nxt, step = cand_x, "x"
            else:
                nxt, step = cand_y, "y"
        elif last == "x":
            nxt, step = cand_y, "y"
        else:
            nxt, step = cand_x, "x"

        if not nxt.f > cur.f + tol:
            logger.debug("MCA stationary after %d iterations, f=%.12g", iteration, cur.f)
            break
        cur, last = nxt, step
        if trace is not None:
            trace.append(cur.f)
    else:
        logger.warning("MCA hit the iteration cap (%d), f=%.12g", Config.MCA_MAX_ITER, cur.f)
    return cur


def _pair_round(z: FloatArray, g: FloatArray, w: FloatArray) -> FloatArray:
    """Move pairs along e_i/w_i - e_j/w_j until one hits a bound; w'z is kept."""
    tol = Config.BINARY_TOL
    frac = fractional_indices(z).tolist()
    if len(frac) < 2:
        return z
    i: Optional[int] = frac[0]
    for j in frac[1:]:
        if i is None:
            i = j
            continue
        wi, wj = w[i], w[j]
        d = g[i] / wi - g[j] / wj
        if d >= 0:
            room_i, room_j = wi * (1.0 - z[i]), wj * z[j]
            t = min(room_i, room_j)
            z[i] = 1.0 if room_i <= room_j else z[i] + t / wi
            z[j] = 0.0 if room_j <= room_i else z[j] - t / wj
        else:
            room_i, room_j = wi * z[i], wj * (1.0 - z[j])
            t = min(room_i, room_j)
            z[i] = 0.0 if room_i <= room_j else z[i] - t / wi
            z[j] = 1.0 if room_j <= room_i else z[j] + t / wj
        survivors = [k for k in (i, j) if tol < z[k] < 1.0 - tol]
        i = survivors[0] if survivors else None
    return z


def round_mostly_binary(p: SeparatorProblem, pt: ContinuousPoint) -> ContinuousPoint:
    """Leave at most one fractional component in each of x and y, f not decreased."""
    w = p.weight
    x = _pair_round(pt.x.copy(), p.cost - p.gamma * pt.hy, w)
    hx = p.graph.hmul(x)
    y = _pair_round(pt.y.copy(), p.cost - p.gamma * hx, w)
    return evaluate(p, x, y, hx=hx)


def _push(z: FloatArray, g: FloatArray, w: FloatArray, lo: float, hi: float) -> FloatArray:
    tol = Config.FEAS_TOL
    for i in fractional_indices(z).tolist():
        s = float(w @ z)
        up_ok = s + w[i] * (1.0 - z[i]) <= hi + tol
        down_ok = s - w[i] * z[i] >= lo - tol
        if up_ok and down_ok:
            # includes lo + w_i <= w'z <= hi - w_i
            z[i] = 1.0 if g[i] > 0 else 0.0
        elif up_ok and g[i] >= 0:
            z[i] = 1.0
        elif down_ok and g[i] <= 0:
            z[i] = 0.0
        else:
            logger.debug("Component %d stays fractional (%.6g)", i, z[i])
    return z


def push_fractional(p: SeparatorProblem, pt: ContinuousPoint) -> ContinuousPoint:
    """Push the lone fractional components of a mostly binary point to 0 or 1."""
    w = p.weight
    x = _push(pt.x.copy(), p.cost - p.gamma * pt.hy, w, p.la, p.ua)
    hx = p.graph.hmul(x)
    y = _push(pt.y.copy(), p.cost - p.gamma * hx, w, p.lb, p.ub)
    return evaluate(p, x, y, hx=hx)


def binarize(p: SeparatorProblem, pt: ContinuousPoint) -> ContinuousPoint:
    """Snap near-binary components; residual fractional ones go to 0 (S)."""
    tol = Config.BINARY_TOL
    x = np.where(pt.x >= 1.0 - tol, 1.0, 0.0)
    y = np.where(pt.y >= 1.0 - tol, 1.0, 0.0)
    if np.array_equal(x, pt.x) and np.array_equal(y, pt.y):
        return pt
    return evaluate(p, x, y)


def _zero_conflicts(
    z: FloatArray,
    hz: FloatArray,
    h_other: FloatArray,
    p: SeparatorProblem,
    lo: float,
) -> int:
    """Zero z_i = 1 with H_i(other) > 0, best gain first, keeping w'z >= lo."""
    w = p.weight
    cand = np.flatnonzero((z == 1.0) & (h_other > 0))
    if not len(cand):
        return 0
    gain = p.gamma * h_other[cand] - p.cost[cand]
    cand = cand[np.lexsort((cand, -gain))]
    budget = float(w @ z) - lo
    adj = p.graph.pattern
    zeroed = 0
    for i in cand.tolist():
        if w[i] > budget + Config.FEAS_TOL:
            continue
        if p.gamma * h_other[i] < p.cost[i]:
            logger.debug("Zeroing %d lowers f (gamma*H_i < c_i)", i)
        z[i] = 0.0
        budget -= w[i]
        hz[i] -= 1.0
        hz[adj.indices[adj.indptr[i] : adj.indptr[i + 1]]] -= 1.0
        zeroed += 1
    return zeroed


def make_separator(p: SeparatorProblem, pt: ContinuousPoint) -> ContinuousPoint:
    """
    Turn a binary feasible point into one with x'Hy = 0.

    Vertices of A that touch B (or lie in it) are dropped into S while
    w'x stays >= la; otherwise the same is done on the B side.
    """
    x = pt.x.copy()
    y = pt.y.copy()
    if len(fractional_indices(x)) or len(fractional_indices(y)):
        raise PreconditionError("make_separator needs a binary point")
    x = np.round(x)
    y = np.round(y)
    hx = p.graph.hmul(x)
    hy = p.graph.hmul(y)
    while float(x @ hy) > 0:
        if _zero_conflicts(x, hx, hy, p, p.la):
            continue
        if _zero_conflicts(y, hy, hx, p, p.lb):
            continue
        raise PreconditionError(
            f"cannot remove penalty {float(x @ hy):g}: both shores at their lower bounds"
        )
    return evaluate(p, x, y, hx=hx, hy=hy)


def _labels(pt: ContinuousPoint) -> np.ndarray:
    tol = Config.BINARY_TOL
    in_a = pt.x >= 1.0 - tol
    in_b = pt.y >= 1.0 - tol
    if np.any(in_a & in_b):
        raise InvalidSeparatorError(
            f"vertices in both shores: {(np.flatnonzero(in_a & in_b) + 1).tolist()[:10]}"
        )
    labels = np.full(len(pt.x), Partition.LABEL_S, dtype=np.int8)
    labels[in_a] = Partition.LABEL_A
    labels[in_b] = Partition.LABEL_B
    return labels


def ab_edges(p: SeparatorProblem, labels: np.ndarray) -> int:
    """Number of undirected edges joining A and B."""
    in_a = (labels == Partition.LABEL_A).astype(np.float64)
    in_b = (labels == Partition.LABEL_B).astype(np.float64)
    return int(round(float(in_a @ (p.graph.pattern @ in_b))))


def partition_from_labels(p: SeparatorProblem, labels: np.ndarray) -> Partition:
    labels = np.asarray(labels, dtype=np.int8)
    c = p.graph.vertex_cost
    w = p.graph.vertex_weight
    weight_a = float(w[labels == Partition.LABEL_A].sum())
    weight_b = float(w[labels == Partition.LABEL_B].sum())
    tol = Config.FEAS_TOL
    feasible = (
        p.la - tol <= weight_a <= p.ua + tol
        and p.lb - tol <= weight_b <= p.ub + tol
        and ab_edges(p, labels) == 0
    )
    return Partition(
        labels=labels,
        cost_S=float(c[labels == Partition.LABEL_S].sum()),
        weight_A=weight_a,
        weight_B=weight_b,
        feasible=feasible,
    )


def validate_labels(p: SeparatorProblem, labels: np.ndarray) -> list[str]:
    """Human-readable list of violations; empty when the labeling is valid."""
    problems = []
    labels = np.asarray(labels)
    if labels.shape != (p.graph.n,):
        return [f"expected {p.graph.n} labels, got {labels.size}"]
    bad = np.flatnonzero(~np.isin(labels, (0, 1, 2)))
    if len(bad):
        return [f"vertex {bad[0] + 1} has label {labels[bad[0]]}, expected 0, 1 or 2"]
    cut = ab_edges(p, labels)
    if cut:
        problems.append(f"{cut} edges join A and B")
    part = partition_from_labels(p, labels)
    if not p.la - Config.FEAS_TOL <= part.weight_A <= p.ua + Config.FEAS_TOL:
        problems.append(f"weight_A={part.weight_A:g} outside [{p.la:g}, {p.ua:g}]")
    if not p.lb - Config.FEAS_TOL <= part.weight_B <= p.ub + Config.FEAS_TOL:
        problems.append(f"weight_B={part.weight_B:g} outside [{p.lb:g}, {p.ub:g}]")
    return problems


def extract_partition(p: SeparatorProblem, pt: ContinuousPoint) -> Partition:
    """A = {x_i = 1}, B = {y_i = 1}, S = the rest."""
    labels = _labels(pt)
    cut = ab_edges(p, labels)
    if cut:
        raise InvalidSeparatorError(f"{cut} edges join A and B")
    part = partition_from_labels(p, labels)
    if not part.feasible:
        logger.warning(
            "Extracted partition violates bounds: weight_A=%g, weight_B=%g",
            part.weight_A,
            part.weight_B,
        )
    return part
