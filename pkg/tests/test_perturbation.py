from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import path_graph, random_graph
from errors import PreconditionError
from models import SeparatorProblem, WeightedGraph
from perturbation import (
    alpha1,
    alpha2,
    c_perturb,
    check_first_order,
    check_local_max,
    kkt_multipliers,
    mca_cp,
    mca_gr,
)
from qp_engine import (
    binarize,
    evaluate,
    extract_partition,
    is_feasible,
    knapsack_lp,
    make_separator,
    push_fractional,
    rescore,
    round_mostly_binary,
)

EPS = 1e-6


def problem(g, la, ua, lb, ub, gamma=1.0, cost=None) -> SeparatorProblem:
    return SeparatorProblem(
        graph=g,
        la=la,
        ua=ua,
        lb=lb,
        ub=ub,
        gamma=gamma,
        cost=g.vertex_cost if cost is None else np.asarray(cost, dtype=float),
    )


def point(p, x, y):
    return evaluate(p, np.asarray(x, dtype=float), np.asarray(y, dtype=float))


@pytest.fixture
def p4_stationary():
    """x = e1, y = (0, 0, 1, 1) on the path 1-2-3-4."""
    p = problem(path_graph(4), 1, 2, 1, 2)
    return p, point(p, [1, 0, 0, 0], [0, 0, 1, 1])


class TestKktMultipliers:
    def test_stationary_point(self, p4_stationary):
        p, pt = p4_stationary
        cert = kkt_multipliers(p, pt)
        assert cert.lambda_a == 0.0
        assert_array_equal(cert.mu_a, [-1, 0, 1, 1])
        assert cert.residual == 0.0

    def test_interior_zero_gradient(self):
        g = WeightedGraph.from_edges(3, [], [])
        p = problem(g, 0, 3, 0, 3, gamma=2.0)
        pt = point(p, [0.5, 0.5, 0.5], [0.5, 0.5, 0.5])
        cert = kkt_multipliers(p, pt)
        assert_array_equal(cert.mu_a, [0, 0, 0])
        assert_array_equal(cert.mu_b, [0, 0, 0])
        assert cert.lambda_a == 0.0 and cert.lambda_b == 0.0

    def test_violation_has_positive_residual(self, p3):
        p = problem(p3, 0, 1, 0, 1)
        pt = point(p, [0, 1, 0], [0, 0, 1])
        cert = kkt_multipliers(p, pt)
        assert cert.residual == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(200))
    def test_residual_agrees_with_first_order(self, seed):
        rng = np.random.default_rng(30_000 + seed)
        n = int(rng.integers(3, 15))
        g = random_graph(n, 0.3, seed=seed)
        w = g.vertex_weight
        y = (rng.random(n) < 0.4).astype(float)
        lo_i = int(rng.integers(0, n // 2 + 1))
        lo, hi = float(lo_i), float(rng.integers(lo_i, n + 1))
        p = problem(g, lo, hi, 0, n)
        stationary = seed % 2 == 0
        if stationary:
            x = knapsack_lp(g.vertex_cost - p.gamma * g.hmul(y), w, lo, hi)
        else:
            x = (rng.random(n) < 0.5).astype(float)
            if not lo <= x.sum() <= hi:
                return
        pt = point(p, x, y)
        cert = kkt_multipliers(p, pt)
        first_order_x = check_first_order(p, pt, sides=("a",))
        residual_a = np.max(np.where(x <= 0, np.maximum(0, -cert.mu_a),
                                     np.where(x >= 1, np.maximum(0, cert.mu_a), np.abs(cert.mu_a))))
        assert first_order_x == (residual_a <= 1e-8)
        if stationary:
            assert first_order_x


class TestFirstOrder:
    def test_stationary(self, p4_stationary):
        assert check_first_order(*p4_stationary)

    def test_not_stationary(self, p3):
        p = problem(p3, 0, 1, 0, 1)
        assert not check_first_order(p, point(p, [0, 1, 0], [0, 0, 1]))

    def test_zero_gradient_no_active_bound(self):
        g = WeightedGraph.from_edges(3, [], [])
        p = problem(g, 0, 3, 0, 3, gamma=2.0)
        assert check_first_order(p, point(p, [0.5] * 3, [0.5] * 3))


class TestLocalMax:
    def test_global_optimum(self, p3):
        p = problem(p3, 1, 1, 1, 1)
        assert check_local_max(p, point(p, [1, 0, 0], [0, 0, 1]))

    def test_saddle_on_cycle(self, cycle4):
        p = problem(cycle4, 1, 1, 1, 1)
        pt = point(p, [0.5, 0, 0.5, 0], [0.5, 0, 0.5, 0])
        assert check_first_order(p, pt)
        assert not check_local_max(p, pt)

    def test_size_cap(self):
        g = path_graph(65)
        p = problem(g, 1, 30, 1, 30)
        with pytest.raises(PreconditionError, match="limited to 64"):
            check_local_max(p, point(p, np.zeros(65), np.zeros(65)))


class TestCPerturb:
    def test_a_side(self, p4_stationary):
        p, pt = p4_stationary
        cert = replace(kkt_multipliers(p, pt), mu_b=np.ones(4))
        assert_allclose(c_perturb(p, pt, cert, EPS), [1, 1 + EPS, 1, 1], rtol=0, atol=1e-15)

    def test_both_sides_summed(self, p4_stationary):
        p, pt = p4_stationary
        c_tilde = c_perturb(p, pt, kkt_multipliers(p, pt), EPS)
        assert_allclose(c_tilde, [1 + EPS, 1 + 2 * EPS, 1, 1], rtol=0, atol=1e-15)

    def test_no_qualifying_index(self, p4_stationary):
        p, pt = p4_stationary
        cert = replace(kkt_multipliers(p, pt), mu_a=np.ones(4), mu_b=np.ones(4))
        assert_array_equal(c_perturb(p, pt, cert, EPS), p.cost)

    @pytest.mark.parametrize("seed", range(200))
    def test_escape_direction(self, seed):
        rng = np.random.default_rng(40_000 + seed)
        n = int(rng.integers(6, 16))
        g = random_graph(n, 0.25, seed=seed)
        w = rng.integers(1, 6, n).astype(float)
        g = WeightedGraph(g.adjacency, g.vertex_cost, w)
        y = (rng.random(n) < 0.3).astype(float)
        h = g.hmul(y)

        # ratio 2 above a tie group of ratio 1 above ratio -1
        perm = rng.permutation(n)
        n_high = int(rng.integers(0, n - 4))
        high = perm[:n_high]
        tie = np.sort(perm[n_high : n_high + 3])
        ratio = np.full(n, -1.0)
        ratio[high] = 2.0
        ratio[tie] = 1.0
        cost = h + ratio * w
        t0, t1 = tie[0], tie[1]
        hi = float(w[high].sum() + w[t0] + 0.3 * w[t1])
        p = problem(g, 0.0, hi, 0.0, float(n), cost=cost)

        x = knapsack_lp(cost - h, w, 0.0, hi)
        assert x[t0] == 1.0 and x[t1] == pytest.approx(0.3)
        pt = point(p, x, y)
        assert check_first_order(p, pt, sides=("a",))

        cert = replace(kkt_multipliers(p, pt), mu_b=np.ones(n))
        c_tilde = c_perturb(p, pt, cert, EPS)
        g_tilde = c_tilde - p.gamma * pt.hy
        slope = w[t0] * g_tilde[t1] - w[t1] * g_tilde[t0]
        assert slope == pytest.approx(EPS * (w[t0] + w[t1]), abs=1e-12)

        perturbed = replace(p, cost=c_tilde)
        assert not check_first_order(perturbed, rescore(perturbed, pt), sides=("a",))


class TestAlpha:
    def test_alpha1_path(self):
        p = problem(path_graph(4), 0, 2, 0, 2)
        assert alpha1(p, point(p, [1, 0, 0, 0], [0, 0, 1, 1])) == 1.0

    def test_alpha1_empty(self, p3):
        p = problem(p3, 0, 2, 0, 2)
        assert alpha1(p, point(p, [1, 0, 0], [0, 0, 0])) == -np.inf

    @pytest.mark.parametrize("seed", range(100))
    def test_alpha1_threshold_bracketing(self, seed):
        rng = np.random.default_rng(50_000 + seed)
        n = int(rng.integers(5, 30))
        g = random_graph(n, float(rng.uniform(0.05, 0.3)), seed=seed)
        cost = rng.uniform(1.0, 3.0, n)
        y = (rng.random(n) < 0.2).astype(float)
        h = g.hmul(y)
        gamma = 3.0 * float(cost.max())
        x = knapsack_lp(cost - gamma * h, g.vertex_weight, 0.0, float(n))
        if not 0 < x.sum() < n or not np.any((x < 1) & (h > 0)):
            return
        p = problem(g, 0.0, float(n), 0.0, float(n), gamma=gamma, cost=cost)
        pt = point(p, x, y)
        assert check_first_order(p, pt, sides=("a",))

        a1 = alpha1(p, pt)
        assert 0 < a1 < gamma
        above = replace(p, gamma=a1 + 1e-6)
        below = replace(p, gamma=a1 - 1e-6)
        assert check_first_order(above, rescore(above, pt), sides=("a",))
        assert not check_first_order(below, rescore(below, pt), sides=("a",))

    def test_alpha2_equal_costs(self):
        g = WeightedGraph.from_edges(3, [], [])
        p = problem(g, 0, 1, 0, 3, gamma=2.0)
        assert alpha2(p, point(p, [1, 0, 0], [0, 0.5, 1])) == 0.0

    def _pairs_hold(self, p, pt, alpha):
        w = p.weight
        r = (p.cost - alpha * pt.hy) / w
        up = np.flatnonzero(pt.x < 1)
        down = np.flatnonzero(pt.x > 0)
        return all(r[i] <= r[j] + 1e-12 for i in up for j in down if i != j)

    def test_alpha2_matches_bisection(self):
        g = WeightedGraph.from_edges(3, [], [], vertex_cost=[1, 2, 4])
        p = problem(g, 0, 1, 0, 3, gamma=5.0)
        pt = point(p, [1, 0, 0], [0, 0.5, 1])
        a2 = alpha2(p, pt)
        assert a2 == pytest.approx(3.0)

        lo, hi = 0.0, p.gamma
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self._pairs_hold(p, pt, mid):
                hi = mid
            else:
                lo = mid
        assert a2 == pytest.approx(hi, abs=1e-9)

    def test_alpha2_negative_threshold(self):
        g = WeightedGraph.from_edges(3, [], [], vertex_cost=[2, 1, 1])
        p = problem(g, 0, 1, 0, 3, gamma=2.0)
        pt = point(p, [1, 0, 0], [0, 0.5, 1])
        assert alpha2(p, pt) == pytest.approx(-1.0)
        above = replace(p, gamma=-0.5)
        below = replace(p, gamma=-1.5)
        assert check_first_order(above, rescore(above, pt), sides=("a",))
        assert not check_first_order(below, rescore(below, pt), sides=("a",))

    def test_alpha2_no_pair_is_unbounded(self):
        g = WeightedGraph.from_edges(2, [], [])
        p = problem(g, 0, 2, 0, 2)
        assert alpha2(p, point(p, [1, 1], [0, 0])) == -np.inf

    def test_alpha2_needs_active_upper_bound(self, p4_stationary):
        p, pt = p4_stationary
        with pytest.raises(PreconditionError, match="upper bound"):
            alpha2(p, pt)


class TestOuterLoops:
    def test_mca_cp_fixed_point(self, p3):
        p = problem(p3, 1, 1, 1, 1)
        start = point(p, [1, 0, 0], [0, 0, 1])
        out = mca_cp(p, start)
        assert out.f == start.f
        assert out.penalty == 0.0

    def test_mca_cp_from_p4_point(self, p4_stationary):
        p, pt = p4_stationary
        out = mca_cp(p, pt)
        assert out.f >= 3.0
        assert is_feasible(p, out)

    def test_mca_gr_schedule_without_improvement(self):
        p = problem(path_graph(4), 0, 2, 0, 2)
        start = point(p, [1, 0, 0, 0], [0, 0, 1, 1])
        calls: list[tuple[int, float]] = []
        out = mca_gr(p, start, on_decrement=lambda k, g: calls.append((k, g)))
        assert [k for k, _ in calls] == list(range(1, 11))
        assert_allclose([g for _, g in calls], np.linspace(0.9, 0.0, 10), atol=1e-12)
        assert out.f == 3.0

    def test_mca_gr_ends_at_optimal_separator(self):
        p = problem(path_graph(4), 1, 2, 1, 2)
        out = mca_gr(p, point(p, [1, 0, 0, 0], [0, 0, 1, 1]))
        sep = make_separator(p, binarize(p, push_fractional(p, round_mostly_binary(p, out))))
        assert extract_partition(p, sep).cost_S == 1.0

    def test_mca_gr_monotone_and_resets_to_one(self):
        restarts = 0
        for seed in range(60):
            rng = np.random.default_rng(60_000 + seed)
            n = int(rng.integers(5, 20))
            g = random_graph(n, 0.3, seed=seed)
            if g.is_complete():
                continue
            u = float(max(1, int(0.6 * n)))
            p = SeparatorProblem.create(g, 1, u, 1, u)
            start = point(p, np.full(n, u / n), np.full(n, u / n))
            steps: list[int] = []
            out = mca_gr(p, start, on_decrement=lambda k, _: steps.append(k))
            assert out.f >= start.f
            assert is_feasible(p, out)
            pairs = list(zip(steps, steps[1:]))
            assert all(b == a + 1 or b == 1 for a, b in pairs), f"seed {seed}: {steps}"
            restarts += sum(1 for _, b in pairs if b == 1)
        assert restarts >= 1
