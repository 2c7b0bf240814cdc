# perturbation.py

from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from config import logger, Config
from errors import PreconditionError
from models import ContinuousPoint, FloatArray, KktCertificate, SeparatorProblem
from qp_engine import mca


def _side(p: SeparatorProblem, pt: ContinuousPoint, side: str):
    """(z, H*other, gradient, lo, hi) for the x side ('a') or the y side ('b')."""
    lo, hi = p.bounds(side)
    if side == "a":
        return pt.x, pt.hy, p.cost - p.gamma * pt.hy, lo, hi
    return pt.y, pt.hx, p.cost - p.gamma * pt.hx, lo, hi


def _active(z: FloatArray, w: FloatArray, lo: float, hi: float) -> tuple[bool, bool]:
    s = float(w @ z)
    return s <= lo + Config.FEAS_TOL, s >= hi - Config.FEAS_TOL


def _side_multipliers(
    g: FloatArray, z: FloatArray, w: FloatArray, lo: float, hi: float
) -> tuple[FloatArray, float, float]:
    tol = Config.BINARY_TOL
    at1 = z >= 1.0 - tol
    at0 = z <= tol
    interior = ~(at0 | at1)
    at_lo, at_hi = _active(z, w, lo, hi)

    # lambda range allowed by the sign of the knapsack multiplier
    if at_lo and at_hi:
        sign_lo, sign_hi = -np.inf, np.inf
    elif at_hi:
        sign_lo, sign_hi = -np.inf, 0.0
    elif at_lo:
        sign_lo, sign_hi = 0.0, np.inf
    else:
        sign_lo, sign_hi = 0.0, 0.0

    # mu = -g - lambda w must be <= 0 at ones, >= 0 at zeros, 0 inside
    r = -g / w
    upper_side = at1 | interior
    lower_side = at0 | interior
    lam_lo = float(r[upper_side].max()) if upper_side.any() else -np.inf
    lam_hi = float(r[lower_side].min()) if lower_side.any() else np.inf

    a, b = max(lam_lo, sign_lo), min(lam_hi, sign_hi)
    lam = min(max(0.0, a), b) if a <= b else 0.0

    mu = -g - lam * w
    violation = np.where(at0, np.maximum(0.0, -mu), np.where(at1, np.maximum(0.0, mu), np.abs(mu)))
    residual = float(violation.max()) if len(violation) else 0.0
    return mu, lam, residual


def kkt_multipliers(p: SeparatorProblem, pt: ContinuousPoint) -> KktCertificate:
    w = p.weight
    z, _, g, lo, hi = _side(p, pt, "a")
    mu_a, lam_a, res_a = _side_multipliers(g, z, w, lo, hi)
    z, _, g, lo, hi = _side(p, pt, "b")
    mu_b, lam_b, res_b = _side_multipliers(g, z, w, lo, hi)
    return KktCertificate(mu_a, mu_b, lam_a, lam_b, max(res_a, res_b))


def _side_first_order(
    g: FloatArray, z: FloatArray, w: FloatArray, lo: float, hi: float, tol: float
) -> bool:
    btol = Config.BINARY_TOL
    can_up = z < 1.0 - btol
    can_down = z > btol
    at_lo, at_hi = _active(z, w, lo, hi)

    # e_i and -e_i
    if not at_hi and np.any(g[can_up] > tol):
        return False
    if not at_lo and np.any(-g[can_down] > tol):
        return False

    # w_j e_i - w_i e_j, i != j
    up = np.flatnonzero(can_up)
    down = np.flatnonzero(can_down)
    if not len(up) or not len(down) or (len(up) == 1 and len(down) == 1 and up[0] == down[0]):
        return True
    r = g / w
    up_sorted = up[np.argsort(-r[up], kind="stable")]
    down_sorted = down[np.argsort(r[down], kind="stable")]
    i1, j1 = up_sorted[0], down_sorted[0]
    if i1 != j1:
        best = r[i1] - r[j1]
    else:
        options = []
        if len(down_sorted) > 1:
            options.append(r[i1] - r[down_sorted[1]])
        if len(up_sorted) > 1:
            options.append(r[up_sorted[1]] - r[j1])
        best = max(options)
    return bool(best <= tol)


def check_first_order(
    p: SeparatorProblem,
    pt: ContinuousPoint,
    tol: float = Config.KKT_TOL,
    sides: tuple[str, ...] = ("a", "b"),
) -> bool:
    """Derivative <= tol along every feasible direction in D, for x and y."""
    w = p.weight
    for side in sides:
        z, _, g, lo, hi = _side(p, pt, side)
        if not _side_first_order(g, z, w, lo, hi, tol):
            return False
    return True


def _critical_directions(
    g: FloatArray, z: FloatArray, w: FloatArray, lo: float, hi: float, tol: float
) -> np.ndarray:
    """Rows are the members of D in the feasible cone with zero derivative."""
    n = len(z)
    btol = Config.BINARY_TOL
    can_up = z < 1.0 - btol
    can_down = z > btol
    at_lo, at_hi = _active(z, w, lo, hi)
    rows = []
    for i in range(n):
        if abs(g[i]) > tol:
            continue
        if can_up[i] and not at_hi:
            d = np.zeros(n)
            d[i] = 1.0
            rows.append(d)
        if can_down[i] and not at_lo:
            d = np.zeros(n)
            d[i] = -1.0
            rows.append(d)
    for i in np.flatnonzero(can_up):
        for j in np.flatnonzero(can_down):
            if i == j or abs(w[j] * g[i] - w[i] * g[j]) > tol:
                continue
            d = np.zeros(n)
            d[i] = w[j]
            d[j] = -w[i]
            rows.append(d)
    return np.array(rows).reshape(-1, n)


def check_local_max(
    p: SeparatorProblem,
    pt: ContinuousPoint,
    cap: int = Config.LOCAL_MAX_CAP,
    tol: float = Config.KKT_TOL,
) -> bool:
    """First- and second-order test; the Hessian has blocks 0 and -gamma H."""
    n = p.graph.n
    if n > cap:
        raise PreconditionError(f"check_local_max is limited to {cap} vertices, got {n}")
    if not check_first_order(p, pt, tol):
        return False
    w = p.weight
    z, _, g, lo, hi = _side(p, pt, "a")
    U = _critical_directions(g, z, w, lo, hi, tol)
    z, _, g, lo, hi = _side(p, pt, "b")
    V = _critical_directions(g, z, w, lo, hi, tol)
    if not len(U) or not len(V):
        return True
    HV = np.column_stack([p.graph.hmul(v) for v in V])
    for start in range(0, len(U), 512):
        cross = -p.gamma * (U[start : start + 512] @ HV)
        if cross.max() > tol:
            logger.debug("Second-order condition fails: max cross term %.3g", cross.max())
            return False
    return True


def c_perturb(
    p: SeparatorProblem,
    pt: ContinuousPoint,
    cert: KktCertificate,
    epsilon: float = Config.EPSILON,
) -> FloatArray:
    """+epsilon (z_i < 0.5) or -epsilon (z_i >= 0.5) wherever |mu_i| < 1e-5."""
    c_tilde = p.cost.copy()
    for z, mu in ((pt.x, cert.mu_a), (pt.y, cert.mu_b)):
        qualifies = np.abs(mu) < Config.MU_THRESHOLD
        c_tilde[qualifies & (z < 0.5)] += epsilon
        c_tilde[qualifies & (z >= 0.5)] -= epsilon
    return c_tilde


def alpha1(p: SeparatorProblem, pt: ContinuousPoint, side: str = "a") -> float:
    """max c_j / H_j(other) over j with z_j < 1 and H_j(other) > 0; -inf if none."""
    z, h, _, _, _ = _side(p, pt, side)
    J = (z < 1.0 - Config.BINARY_TOL) & (h > 0)
    if not J.any():
        return -np.inf
    return float(np.max(p.cost[J] / h[J]))


def alpha2(p: SeparatorProblem, pt: ContinuousPoint, side: str = "a") -> float:
    """
    Smallest gamma keeping the pair conditions of an upper-bound-active side.

    Each pair (i, j) with z_i < 1, z_j > 0 requires
    (c_i - a h_i) / w_i <= (c_j - a h_j) / w_j, a half-line in a; the
    result is the largest lower end, capped at gamma.
    """
    z, h, _, lo, hi = _side(p, pt, side)
    w = p.weight
    _, at_hi = _active(z, w, lo, hi)
    if not at_hi:
        raise PreconditionError(f"alpha2 needs the upper bound of side {side!r} active")
    btol = Config.BINARY_TOL
    up = np.flatnonzero(z < 1.0 - btol)
    down = np.flatnonzero(z > btol)
    cw = p.cost / w
    hw = h / w
    best = -np.inf
    for start in range(0, len(up), 1024):
        i = up[start : start + 1024, None]
        a = cw[i] - cw[down][None, :]
        b = hw[i] - hw[down][None, :]
        mask = (b > 0) & (i != down[None, :])
        if mask.any():
            best = max(best, float(np.max(a[mask] / b[mask])))
    return float(min(best, p.gamma))


def mca_cp(
    p: SeparatorProblem,
    pt: ContinuousPoint,
    epsilon: float = Config.EPSILON,
) -> ContinuousPoint:
    """Mountain climbing with cost perturbations until no strict improvement."""
    pt = mca(p, pt)
    for round_no in range(Config.MAX_PERTURB_ROUNDS):
        cert = kkt_multipliers(p, pt)
        c_tilde = c_perturb(p, pt, cert, epsilon)
        if np.array_equal(c_tilde, p.cost):
            logger.debug("No zero multipliers, nothing to perturb")
            break
        perturbed = mca(replace(p, cost=c_tilde), pt)
        candidate = mca(p, perturbed)
        if candidate.f > pt.f + Config.STRICT_IMPROVEMENT:
            logger.debug("c-perturbation round %d: f %.12g -> %.12g", round_no, pt.f, candidate.f)
            pt = candidate
        else:
            break
    return pt


def gamma_threshold(p: SeparatorProblem, pt: ContinuousPoint) -> float:
    """alpha_1 of the side(s) whose weight sum is strictly inside its bounds."""
    w = p.weight
    best = -np.inf
    for side, z in (("a", pt.x), ("b", pt.y)):
        at_lo, at_hi = _active(z, w, *p.bounds(side))
        if not at_lo and not at_hi:
            best = max(best, alpha1(p, pt, side))
    return min(best, p.gamma)


def mca_gr(
    p: SeparatorProblem,
    pt: ContinuousPoint,
    epsilon: float = Config.EPSILON,
    on_decrement: Optional[Callable[[int, float], None]] = None,
) -> ContinuousPoint:
    """
    mca_cp plus gamma refinement: gamma is lowered from alpha_1 to 0 in
    uniform decrements; an improvement restarts the schedule.
    """
    pt = mca_cp(p, pt, epsilon)
    alpha = gamma_threshold(p, pt)
    if not alpha > 0:
        return pt

    steps = Config.GAMMA_DECREMENTS
    k = 0
    restarts = 0
    while k < steps:
        k += 1
        gamma_tilde = alpha * (steps - k) / steps
        if on_decrement is not None:
            on_decrement(k, gamma_tilde)
        relaxed = mca_cp(replace(p, gamma=gamma_tilde), pt, epsilon)
        candidate = mca_cp(p, relaxed, epsilon)
        if candidate.f > pt.f + Config.STRICT_IMPROVEMENT:
            logger.debug(
                "gamma-refinement at %.6g: f %.12g -> %.12g", gamma_tilde, pt.f, candidate.f
            )
            pt = candidate
            alpha = gamma_threshold(p, pt)
            k = 0
            restarts += 1
            if not alpha > 0 or restarts >= Config.MAX_GAMMA_RESTARTS:
                break
    return pt
