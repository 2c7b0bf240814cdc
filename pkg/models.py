# models.py

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
import numpy.typing as npt
from scipy import sparse

from config import Config
from errors import GraphFormatError, InfeasibleProblemError

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Simple undirected graph with vertex costs/weights and edge weights.

    The adjacency is a symmetric CSR matrix holding edge weights; the
    0/1 pattern of it is the matrix A used by H = A + I.
    """

    adjacency: sparse.csr_array
    vertex_cost: FloatArray
    vertex_weight: FloatArray

    def __post_init__(self) -> None:
        adj = self.adjacency
        n = adj.shape[0]
        if adj.shape != (n, n):
            raise GraphFormatError(f"adjacency must be square, got {adj.shape}")
        if self.vertex_cost.shape != (n,) or self.vertex_weight.shape != (n,):
            raise GraphFormatError("vertex cost/weight length does not match n")
        if np.any(self.vertex_weight <= 0):
            bad = int(np.flatnonzero(self.vertex_weight <= 0)[0])
            raise GraphFormatError(f"vertex {bad + 1} has non-positive weight")
        if adj.nnz:
            if np.any(adj.data <= 0):
                raise GraphFormatError("edge weights must be positive")
            if np.any(adj.diagonal() != 0):
                raise GraphFormatError("self-loops are not allowed")
            asym = abs(adj - adj.T)
            if asym.nnz and asym.max() > 0:
                raise GraphFormatError("adjacency is not symmetric")

    @classmethod
    def from_edges(
        cls,
        n: int,
        rows,
        cols,
        weights=None,
        vertex_cost=None,
        vertex_weight=None,
    ) -> "WeightedGraph":
        """Build a graph from 0-based undirected edges, each listed once."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if weights is None:
            weights = np.ones(len(rows), dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if np.any(rows == cols):
            raise GraphFormatError("self-loops are not allowed")
        if len(rows):
            lo = np.minimum(rows, cols)
            hi = np.maximum(rows, cols)
            keys = lo * n + hi
            if len(np.unique(keys)) != len(keys):
                raise GraphFormatError("duplicate edge")
        adjacency = sparse.coo_array(
            (
                np.concatenate([weights, weights]),
                (np.concatenate([rows, cols]), np.concatenate([cols, rows])),
            ),
            shape=(n, n),
        ).tocsr()
        adjacency.sort_indices()
        return cls(
            adjacency=adjacency,
            vertex_cost=_unit_or(vertex_cost, n),
            vertex_weight=_unit_or(vertex_weight, n),
        )

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    @cached_property
    def pattern(self) -> sparse.csr_array:
        pat = self.adjacency.copy()
        pat.data = np.ones_like(pat.data)
        return pat

    @property
    def total_weight(self) -> float:
        return float(self.vertex_weight.sum())

    @property
    def total_cost(self) -> float:
        return float(self.vertex_cost.sum())

    @property
    def total_edge_weight(self) -> float:
        return float(self.adjacency.data.sum()) / 2.0

    def neighbors(self, i: int) -> IntArray:
        adj = self.adjacency
        return adj.indices[adj.indptr[i] : adj.indptr[i + 1]]

    def hmul(self, v: FloatArray) -> FloatArray:
        """H @ v with H = A + I on the 0/1 adjacency pattern."""
        return self.pattern @ v + v

    def is_complete(self) -> bool:
        return self.m == self.n * (self.n - 1) // 2


def _unit_or(values, n: int) -> FloatArray:
    if values is None:
        return np.ones(n, dtype=np.float64)
    return np.asarray(values, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Matching:
    """Map from fine vertices to coarse vertices (1 or 2 preimages each)."""

    fine_to_coarse: IntArray
    n_coarse: int
    contracted_weight: float = 0.0

    @property
    def n_fine(self) -> int:
        return len(self.fine_to_coarse)

    @property
    def groups(self) -> list[tuple[int, ...]]:
        """Fine preimages of each coarse vertex, in coarse order."""
        members: list[list[int]] = [[] for _ in range(self.n_coarse)]
        for fine, coarse in enumerate(self.fine_to_coarse.tolist()):
            members[coarse].append(fine)
        return [tuple(m) for m in members]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [g for g in self.groups if len(g) == 2]  # type: ignore[misc]


@dataclass(frozen=True, eq=False)
class Hierarchy:
    levels: list[WeightedGraph]
    matchings: list[Matching]

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def coarsest(self) -> WeightedGraph:
        return self.levels[-1]


@dataclass(frozen=True, eq=False)
class SeparatorProblem:
    """Instance of the bilinear program max c'(x+y) - gamma x'Hy over P_a x P_b."""

    graph: WeightedGraph
    la: float
    ua: float
    lb: float
    ub: float
    gamma: float
    cost: FloatArray
    eta: float = Config.ETA
    improve_tol: float = Config.IMPROVE_TOL

    @classmethod
    def create(
        cls,
        graph: WeightedGraph,
        la: float,
        ua: float,
        lb: float,
        ub: float,
        gamma: Optional[float] = None,
        eta: float = Config.ETA,
        improve_tol: float = Config.IMPROVE_TOL,
    ) -> "SeparatorProblem":
        if gamma is None:
            gamma = float(graph.vertex_cost.max()) if graph.n else 1.0
        problem = cls(
            graph=graph,
            la=float(la),
            ua=float(ua),
            lb=float(lb),
            ub=float(ub),
            gamma=float(gamma),
            cost=graph.vertex_cost,
            eta=eta,
            improve_tol=improve_tol,
        )
        problem.validate()
        return problem

    def validate(self) -> None:
        total = self.graph.total_weight
        tol = Config.FEAS_TOL
        for name, lo, hi in (("a", self.la, self.ua), ("b", self.lb, self.ub)):
            if lo < 0 or lo > hi + tol:
                raise InfeasibleProblemError(
                    f"shore {name}: need 0 <= l <= u, got l={lo}, u={hi}"
                )
            if lo > total + tol:
                raise InfeasibleProblemError(
                    f"shore {name}: lower bound {lo} exceeds total weight {total}"
                )
        if self.ua + self.ub < self.la + self.lb - tol:
            raise InfeasibleProblemError("ua + ub < la + lb")
        if self.la + self.lb > total + tol:
            raise InfeasibleProblemError(
                f"la + lb = {self.la + self.lb} exceeds total weight {total}"
            )
        if self.la > 0 and self.lb > 0 and self.graph.is_complete():
            raise InfeasibleProblemError(
                "complete graph has no separator with nonempty shores"
            )

    @property
    def weight(self) -> FloatArray:
        return self.graph.vertex_weight

    def bounds(self, side: str) -> tuple[float, float]:
        if side == "a":
            return self.la, self.ua
        if side == "b":
            return self.lb, self.ub
        raise ValueError(f"unknown side {side!r}")

    def tolerance(self, f: float) -> float:
        return self.improve_tol * (1.0 + abs(f))


@dataclass(eq=False)
class ContinuousPoint:
    """(x, y) with cached H products and the objective under some problem."""

    x: FloatArray
    y: FloatArray
    hx: FloatArray
    hy: FloatArray
    f: float

    @property
    def penalty(self) -> float:
        return float(self.x @ self.hy)

    def copy(self) -> "ContinuousPoint":
        return ContinuousPoint(
            self.x.copy(), self.y.copy(), self.hx.copy(), self.hy.copy(), self.f
        )


@dataclass(frozen=True, eq=False)
class Partition:
    """Discrete answer: labels 0 = A, 1 = B, 2 = S."""

    LABEL_A = 0
    LABEL_B = 1
    LABEL_S = 2

    labels: npt.NDArray[np.int8]
    cost_S: float
    weight_A: float
    weight_B: float
    feasible: bool

    @property
    def A(self) -> IntArray:
        return np.flatnonzero(self.labels == self.LABEL_A)

    @property
    def B(self) -> IntArray:
        return np.flatnonzero(self.labels == self.LABEL_B)

    @property
    def S(self) -> IntArray:
        return np.flatnonzero(self.labels == self.LABEL_S)

    def format_summary(self) -> list[str]:
        return [
            f"cost_S={self.cost_S:g}",
            f"|A|={len(self.A)} weight_A={self.weight_A:g}",
            f"|B|={len(self.B)} weight_B={self.weight_B:g}",
            f"|S|={len(self.S)}",
            f"feasible={self.feasible}",
        ]


@dataclass(frozen=True)
class KktCertificate:
    mu_a: FloatArray
    mu_b: FloatArray
    lambda_a: float
    lambda_b: float
    residual: float


FmRefiner = Callable[[SeparatorProblem, ContinuousPoint], ContinuousPoint]


@dataclass
class SolveOptions:
    balance: float = Config.DEFAULT_BALANCE
    rule: str = "heavy_edge"
    seed: int = 0
    gamma: Optional[float] = None
    epsilon: float = Config.EPSILON
    eta: float = Config.ETA
    la: float = Config.DEFAULT_LOWER_BOUND
    lb: float = Config.DEFAULT_LOWER_BOUND
    refine_stride: Optional[float] = None
    fm_first: bool = False
    fm_refiner: Optional[FmRefiner] = None


@dataclass
class LevelStats:
    level: int
    n: int
    m: int
    f_start: float
    f_refined: float
    cost_initial: float
    cost_final: float
    total_cost: float
    refined: bool
    refine_ms: float

    @property
    def improvement(self) -> float:
        """100 (C(S_initial) - C(S_final)) / C(V)."""
        if self.total_cost == 0:
            return 0.0
        return 100.0 * (self.cost_initial - self.cost_final) / self.total_cost


@dataclass
class RunStats:
    levels: list[LevelStats] = field(default_factory=list)
    coarsen_ms: float = 0.0
    solve_ms: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def total_ms(self) -> float:
        return self.coarsen_ms + self.solve_ms


@dataclass
class TrialResult:
    graph: str
    seed: Union[int, str]  # "avg" / "min" / "max" on summary rows
    rule: str
    n: int
    m: int
    cost_S: float
    weight_A: float
    weight_B: float
    levels: float
    time_ms: float
    feasible: bool

    def as_row(self) -> list[object]:
        return [
            self.graph,
            self.seed,
            self.rule,
            self.n,
            self.m,
            self.cost_S,
            self.weight_A,
            self.weight_B,
            self.levels,
            f"{self.time_ms:.3f}",
            int(self.feasible),
        ]
