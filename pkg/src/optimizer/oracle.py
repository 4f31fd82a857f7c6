"""
穷举求解（小规模算例的独立对照）

按情景树节点枚举分配，非预期性由构造保证。每个节点的候选为
所有满足 Σ_r x_r <= Δ_j 的非负整数向量，按字典序排列；目标相同时保留字典序最小者。

- 无公平约束时目标按子树可加，沿树递归求解，状态逐阶段向下传递
- 有公平约束时期望约束把各节点耦合在一起，对全部节点的候选做笛卡尔积，
  每个情景的仿真结果按 (情景, 路径上的分配) 缓存
"""
import itertools
import math
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from ..config import Config
from ..core.params import COMPARTMENT_INDEX, MigrationMatrix
from ..core.plan import AllocationPlan
from ..core.supply import SupplySchedule
from ..epidemics.model import DynamicsParams, step
from ..epidemics.simulator import simulate
from ..scenarios.tree import ScenarioTree, TreeNode, VhPaths
from ..utils.errors import SearchSpaceTooLargeError
from ..utils.logger import setup_logger
from .fairness import Equal, EquityK, FairnessMode, ProportionalZeta, Utilitarian
from .solvers import SolveReport, SolveStatus

logger = setup_logger(__name__)

Option = Tuple[int, ...]


def allocation_options(delta: int, n_regions: int) -> List[Option]:
    """Σ x <= delta 的全部非负整数向量，字典序"""
    return [v for v in itertools.product(range(delta + 1), repeat=n_regions) if sum(v) <= delta]


def search_space_size(tree: ScenarioTree, supply: SupplySchedule, n_regions: int,
                      pinned: Optional[Mapping[int, Sequence[int]]] = None) -> int:
    """Π_节点 C(Δ_j + |R|, |R|)，固定阶段记 1"""
    pinned = pinned or {}
    total = 1
    for j in range(tree.n_stages):
        per_node = 1 if j in pinned else math.comb(supply.deltas[j] + n_regions, n_regions)
        total *= per_node ** len(tree.blocks(j))
    return total


@dataclass
class _Context:
    params: DynamicsParams
    tree: ScenarioTree
    h: np.ndarray
    bounds: Tuple[int, ...]
    horizon: int
    migration: Optional[MigrationMatrix]
    options: List[List[Option]]
    tol: float = 1e-9


@dataclass
class _NodeResult:
    value: float
    plan: Dict[Tuple[int, ...], Option]  # 节点前缀 -> 分配
    n_optimal: int


def _advance(ctx: _Context, scenario: int, stage: int, state: np.ndarray, X: np.ndarray) -> np.ndarray:
    """把代表情景从第 stage 阶段起点推进到下一阶段起点（最后阶段推进到第 T 期）"""
    start = ctx.bounds[stage]
    end = ctx.bounds[stage + 1] if stage + 1 < len(ctx.bounds) else ctx.horizon
    for t in range(start, end):
        state = step(state, ctx.h[scenario, t - 1], X, ctx.params, ctx.migration).state
    return state


def _solve_node(ctx: _Context, node: TreeNode, state: np.ndarray, X_prev: np.ndarray) -> _NodeResult:
    best: Optional[_NodeResult] = None
    representative = node.scenarios[0]
    for option in ctx.options[node.stage]:
        X = X_prev + np.asarray(option, dtype=float)
        nxt = _advance(ctx, representative, node.stage, state, X)
        children = ctx.tree.children(node)
        if not children:
            value = node.probability * float(nxt[:, COMPARTMENT_INDEX["D"]].sum())
            sub: Dict[Tuple[int, ...], Option] = {}
            count = 1
        else:
            value, sub, count = 0.0, {}, 1
            for child in children:
                res = _solve_node(ctx, child, nxt, X)
                value += res.value
                sub.update(res.plan)
                count *= res.n_optimal
        sub[node.prefix] = option
        candidate = _NodeResult(value, sub, count)
        best = _keep_better(best, candidate, ctx.tol)
    assert best is not None
    return best


def _keep_better(best: Optional[_NodeResult], candidate: _NodeResult, tol: float) -> _NodeResult:
    if best is None:
        return candidate
    margin = tol * (1.0 + abs(best.value))
    if candidate.value < best.value - margin:
        return candidate
    if abs(candidate.value - best.value) <= margin:
        best.n_optimal += candidate.n_optimal
    return best


def _root_option_utilitarian(ctx: _Context, option: Option) -> _NodeResult:
    restricted = replace(ctx, options=[[option]] + ctx.options[1:])
    root = ctx.tree.root()
    X0 = ctx.params.initial_ventilators
    return _solve_node(restricted, root, ctx.params.initial_state.copy(), X0)


def _plan_from_nodes(tree: ScenarioTree, node_plan: Mapping[Tuple[int, ...], Option],
                     stages: Sequence[int], region_ids: Sequence[str]) -> AllocationPlan:
    x = np.zeros((tree.n_scenarios, tree.n_stages, len(region_ids)), dtype=np.int64)
    for w in range(tree.n_scenarios):
        for j in range(tree.n_stages):
            prefix = tuple(int(b) for b in tree.branches[w, :j])
            x[w, j] = node_plan[prefix]
    return AllocationPlan(x, tuple(stages), tuple(region_ids))


class _FairnessEvaluator:
    """带缓存的单情景仿真与公平约束检查"""

    def __init__(self, ctx: _Context, fairness: FairnessMode, supply: SupplySchedule,
                 stages: Sequence[int], region_ids: Sequence[str]) -> None:
        self.ctx = ctx
        self.fairness = fairness
        self.supply = supply
        self.stages = tuple(stages)
        self.region_ids = tuple(region_ids)
        self.prob = ctx.tree.probabilities
        self.share = ctx.params.population / ctx.params.population.sum()
        self.cache: Dict[Tuple[int, Tuple[Option, ...]], Tuple[float, np.ndarray]] = {}

    def scenario(self, w: int, path: Tuple[Option, ...]) -> Tuple[float, np.ndarray]:
        key = (w, path)
        if key not in self.cache:
            plan = AllocationPlan(np.asarray(path, dtype=np.int64)[None], self.stages, self.region_ids)
            traj = simulate(self.ctx.h[w:w + 1], plan, self.ctx.params, self.ctx.migration, self.ctx.horizon)
            self.cache[key] = (float(traj.deaths_final()[0]), traj.compartment("H_c")[0])
        return self.cache[key]

    def allocation_feasible(self, x: np.ndarray) -> bool:
        expected = np.einsum("w,wjr->jr", self.prob, x.astype(float))
        deltas = np.asarray(self.supply.deltas, dtype=float)
        if isinstance(self.fairness, ProportionalZeta):
            need = self.share[None, :] * self.fairness.zeta * deltas[:, None]
        elif isinstance(self.fairness, Equal):
            need = (np.asarray(self.supply.deltas) // len(self.region_ids))[:, None].astype(float)
        else:
            return True
        return bool(np.all(expected >= need - 1e-9))

    def evaluate(self, x: np.ndarray) -> Optional[float]:
        """可行时返回期望死亡数，否则返回 None"""
        if not self.allocation_feasible(x):
            return None
        deaths = 0.0
        occupancy = np.zeros_like(self.share)
        start = None
        if isinstance(self.fairness, EquityK):
            start = self.fairness.active_from_t_prime - 1
        for w in range(x.shape[0]):
            d, h_c = self.scenario(w, tuple(tuple(int(v) for v in row) for row in x[w]))
            deaths += self.prob[w] * d
            if start is not None and start < self.ctx.horizon:
                occupancy += self.prob[w] * h_c[start:].sum(axis=0)
        if start is not None and start < self.ctx.horizon:
            total = occupancy.sum()
            k = self.fairness.k
            scale = 1e-9 * (1.0 + total)
            if np.any(occupancy - (self.share + k) * total > scale):
                return None
            if np.any(occupancy - (self.share - k) * total < -scale):
                return None
        return deaths


def _enumerate_fair(evaluator: _FairnessEvaluator, nodes: List[TreeNode],
                    node_options: List[List[Option]]) -> Tuple[Optional[float], Optional[np.ndarray], int]:
    tree = evaluator.ctx.tree
    n_r = len(evaluator.region_ids)
    best_value: Optional[float] = None
    best_x: Optional[np.ndarray] = None
    count = 0
    for combo in itertools.product(*node_options):
        x = np.zeros((tree.n_scenarios, tree.n_stages, n_r), dtype=np.int64)
        for node, option in zip(nodes, combo):
            x[list(node.scenarios), node.stage, :] = option
        value = evaluator.evaluate(x)
        if value is None:
            continue
        if best_value is None or value < best_value - 1e-9 * (1.0 + abs(best_value)):
            best_value, best_x, count = value, x, 1
        elif abs(value - best_value) <= 1e-9 * (1.0 + abs(best_value)):
            count += 1
    return best_value, best_x, count


def _root_option_fair(ctx: _Context, fairness: FairnessMode, supply: SupplySchedule, stages: Sequence[int],
                      region_ids: Sequence[str], nodes: List[TreeNode], node_options: List[List[Option]]):
    evaluator = _FairnessEvaluator(ctx, fairness, supply, stages, region_ids)
    return _enumerate_fair(evaluator, nodes, node_options)


def brute_force_solve(
    params: DynamicsParams,
    tree: ScenarioTree,
    vh: VhPaths,
    supply: SupplySchedule,
    fairness: FairnessMode = Utilitarian(),
    migration: Optional[MigrationMatrix] = None,
    horizon: Optional[int] = None,
    pinned: Optional[Mapping[int, Sequence[int]]] = None,
    limit: int = Config.BRUTE_FORCE_LIMIT,
    n_jobs: int = 1,
) -> SolveReport:
    """
    穷举求最优分配

    Args:
        params: 动力学参数
        tree: 情景树
        vh: VH 路径
        supply: 每阶段供给
        fairness: 公平性模式
        migration: 迁移矩阵
        horizon: 期数，缺省取 VH 路径长度
        pinned: 阶段下标 -> 固定分配
        limit: 枚举空间上限
        n_jobs: 按根节点候选并行的进程数

    Returns:
        SolveReport: 最优目标、分配方案与最优方案个数

    Raises:
        SearchSpaceTooLargeError: 枚举空间超过 limit
    """
    started = time.perf_counter()
    horizon = int(horizon or vh.h.shape[1])
    n_r = params.n_regions
    pinned = dict(pinned or {})
    estimate = search_space_size(tree, supply, n_r, pinned)
    if estimate > limit:
        raise SearchSpaceTooLargeError(estimate, limit)

    options = [
        [tuple(int(v) for v in pinned[j])] if j in pinned else allocation_options(supply.deltas[j], n_r)
        for j in range(tree.n_stages)
    ]
    ctx = _Context(params, tree, vh.h, tuple(supply.stages), horizon, migration, options)
    logger.info(f"穷举求解: 约 {estimate} 个方案, 公平性模式 {fairness.label()}")

    if isinstance(fairness, Utilitarian):
        results = Parallel(n_jobs=n_jobs)(
            delayed(_root_option_utilitarian)(ctx, option) for option in options[0]
        )
        best: Optional[_NodeResult] = None
        for res in results:
            best = _keep_better(best, res, ctx.tol)
        assert best is not None
        plan = _plan_from_nodes(tree, best.plan, supply.stages, params.region_ids)
        objective, n_optimal = best.value, best.n_optimal
    else:
        nodes = [node for j in range(tree.n_stages) for node in tree.nodes(j)]
        rest = [options[node.stage] for node in nodes[1:]]
        results = Parallel(n_jobs=n_jobs)(
            delayed(_root_option_fair)(ctx, fairness, supply, supply.stages, params.region_ids,
                                       nodes, [[option]] + rest)
            for option in options[0]
        )
        objective, best_x, n_optimal = None, None, 0
        for value, x, count in results:
            if value is None:
                continue
            if objective is None or value < objective - 1e-9 * (1.0 + abs(objective)):
                objective, best_x, n_optimal = value, x, count
            elif abs(value - objective) <= 1e-9 * (1.0 + abs(objective)):
                n_optimal += count
        if objective is None:
            logger.warning("穷举求解: 没有满足公平约束的方案")
            return SolveReport(SolveStatus.INFEASIBLE, wall_time=time.perf_counter() - started,
                               solver="brute-force", message="no feasible allocation")
        plan = AllocationPlan(best_x, tuple(supply.stages), tuple(params.region_ids))

    wall = time.perf_counter() - started
    logger.info(f"穷举求解完成: 目标 {objective:.6f}, 最优方案 {n_optimal} 个, 用时 {wall:.2f}s")
    return SolveReport(
        SolveStatus.OPTIMAL, objective, plan=plan, wall_time=wall, gap=0.0,
        solver="brute-force", n_optimal=n_optimal, extras={"search_space": estimate},
    )
