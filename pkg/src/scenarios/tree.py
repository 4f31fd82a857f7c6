"""
情景树
负责：
- 用三点离散分布 {μ-σ, μ, μ+σ} 近似每个阶段的 VH 变化率
- 按分支下标字典序枚举情景，计算路径概率
- 给出每个阶段的不可区分情景分块（用于非预期性约束）
- 生成每个情景、每期、每个区域的 VH 路径

同一情景内各区域使用相同的分支下标（区域冲击完全相关）。
"""
import itertools
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import Config
from ..utils.errors import ShapeError, ValidationError
from ..utils.logger import setup_logger
from .process import VhProcess

logger = setup_logger(__name__)

# 分支下标 0/1/2 对应 μ-σ / μ / μ+σ
BRANCH_OFFSETS: Tuple[int, int, int] = (-1, 0, 1)
BASELINE_BRANCH = 1


@dataclass(frozen=True)
class TreeNode:
    """树节点：阶段、分支前缀、覆盖的情景与无条件概率"""

    stage: int  # 从 0 开始
    prefix: Tuple[int, ...]
    scenarios: Tuple[int, ...]
    probability: float


@dataclass(frozen=True)
class ScenarioTree:
    """
    分阶段情景树

    Attributes:
        branches: (情景数, 阶段数-1) 的分支下标，第 s 列是进入第 s+2 个阶段时的分支
        probabilities: 每个情景的路径概率
        deltas: (情景数, 阶段数, 区域数) 的变化率实现值，第 0 阶段为 0
    """

    n_stages: int
    region_ids: Tuple[str, ...]
    branch_probabilities: Tuple[float, float, float]
    branches: np.ndarray
    probabilities: np.ndarray
    deltas: np.ndarray

    @property
    def n_scenarios(self) -> int:
        return int(self.probabilities.shape[0])

    def blocks(self, stage: int) -> List[Tuple[int, ...]]:
        """
        第 stage 个阶段（从 0 开始）的不可区分分块：分支前缀长度为 stage 的情景归为一块

        Returns:
            List[Tuple[int, ...]]: 每块内按情景下标升序
        """
        groups: Dict[Tuple[int, ...], List[int]] = {}
        for w in range(self.n_scenarios):
            groups.setdefault(tuple(int(b) for b in self.branches[w, :stage]), []).append(w)
        return [tuple(groups[key]) for key in sorted(groups)]

    def blocks_per_stage(self) -> List[List[Tuple[int, ...]]]:
        return [self.blocks(s) for s in range(self.n_stages)]

    def nodes(self, stage: int) -> List[TreeNode]:
        """第 stage 个阶段的全部节点，按前缀字典序"""
        out = []
        for block in self.blocks(stage):
            prefix = tuple(int(b) for b in self.branches[block[0], :stage])
            out.append(TreeNode(stage, prefix, block, float(self.probabilities[list(block)].sum())))
        return out

    def children(self, node: TreeNode) -> List[TreeNode]:
        if node.stage + 1 >= self.n_stages:
            return []
        return [
            child for child in self.nodes(node.stage + 1)
            if child.prefix[:node.stage] == node.prefix
        ]

    def root(self) -> TreeNode:
        return self.nodes(0)[0]

    def nac_count(self) -> int:
        """每个区域的非预期性等式数量：各阶段每块 |块|-1 条"""
        return sum(len(b) - 1 for s in range(self.n_stages) for b in self.blocks(s))

    def to_frame(self) -> pd.DataFrame:
        """
        导出为 (scenario_id, stage, branch, region, delta, p_omega)

        branch 为 -1/0/+1，第 1 阶段为根节点，branch 与 delta 均为 0。
        """
        rows = []
        for w in range(self.n_scenarios):
            for s in range(self.n_stages):
                branch = 0 if s == 0 else BRANCH_OFFSETS[int(self.branches[w, s - 1])]
                for k, rid in enumerate(self.region_ids):
                    rows.append({
                        "scenario_id": w + 1,
                        "stage": s + 1,
                        "branch": branch,
                        "region": rid,
                        "delta": float(self.deltas[w, s, k]),
                        "p_omega": float(self.probabilities[w]),
                    })
        return pd.DataFrame(rows, columns=["scenario_id", "stage", "branch", "region", "delta", "p_omega"])


def _check_branch_probabilities(probs: Sequence[float]) -> Tuple[float, float, float]:
    probs = tuple(float(p) for p in probs)
    if len(probs) != 3 or any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > Config.PROBABILITY_TOL:
        raise ValidationError("branch_probabilities", "必须是三个和为 1 的非负数", probs)
    return probs  # type: ignore[return-value]


def build_tree(
    process: VhProcess,
    stages: int,
    branch_probabilities: Sequence[float] = Config.BRANCH_PROBABILITIES,
) -> ScenarioTree:
    """
    构造三叉情景树

    Args:
        process: 分阶段变化率分布（至少 stages 个阶段）
        stages: 决策阶段数
        branch_probabilities: 三个分支的概率

    Returns:
        ScenarioTree: 共 3^(stages-1) 个情景
    """
    if stages < 1:
        raise ValidationError("stages", "必须 >= 1", stages)
    if process.n_stages < stages:
        raise ShapeError(f"VH 过程只有 {process.n_stages} 个阶段，少于 {stages}")
    probs = _check_branch_probabilities(branch_probabilities)

    if stages > 1:
        branches = np.array(list(itertools.product(range(3), repeat=stages - 1)), dtype=int)
    else:
        branches = np.zeros((1, 0), dtype=int)
    prob_table = np.asarray(probs)
    probabilities = np.prod(prob_table[branches], axis=1) if stages > 1 else np.ones(1)

    offsets = np.asarray(BRANCH_OFFSETS, dtype=float)
    n_regions = len(process.region_ids)
    deltas = np.zeros((branches.shape[0], stages, n_regions))
    for s in range(1, stages):
        deltas[:, s, :] = process.mu[s][None, :] + offsets[branches[:, s - 1]][:, None] * process.sigma[s][None, :]

    total = float(probabilities.sum())
    if abs(total - 1.0) > Config.PROBABILITY_TOL:
        logger.warning(f"情景概率之和偏离 1: {total!r}")
    logger.info(f"已构造情景树: {stages} 个阶段, {branches.shape[0]} 个情景")
    return ScenarioTree(
        n_stages=stages,
        region_ids=process.region_ids,
        branch_probabilities=probs,
        branches=branches,
        probabilities=probabilities,
        deltas=deltas,
    )


def expected_value_tree(process: VhProcess, stages: int) -> ScenarioTree:
    """
    期望值基准：每个阶段都取 δ = μ 的单一路径，概率为 1
    """
    if process.n_stages < stages:
        raise ShapeError(f"VH 过程只有 {process.n_stages} 个阶段，少于 {stages}")
    deltas = np.zeros((1, stages, len(process.region_ids)))
    deltas[0, 1:, :] = process.mu[1:stages]
    return ScenarioTree(
        n_stages=stages,
        region_ids=process.region_ids,
        branch_probabilities=(0.0, 1.0, 0.0),
        branches=np.full((1, stages - 1), BASELINE_BRANCH, dtype=int),
        probabilities=np.ones(1),
        deltas=deltas,
    )


@dataclass(frozen=True)
class VhPaths:
    """VH 路径 h[ω, t, r]（t 从 0 开始对应第 1 期）及截断统计"""

    h: np.ndarray
    raw: np.ndarray
    clamp_counts: np.ndarray  # (情景数, 区域数)，出现过截断的路径记 1

    @property
    def total_clamped(self) -> int:
        return int(self.clamp_counts.sum())

    def to_frame(self, region_ids: Sequence[str]) -> pd.DataFrame:
        n_w, n_t, n_r = self.h.shape
        w, t, r = np.meshgrid(np.arange(n_w), np.arange(n_t), np.arange(n_r), indexing="ij")
        return pd.DataFrame({
            "scenario": w.ravel() + 1,
            "period": t.ravel() + 1,
            "region": np.asarray(list(region_ids), dtype=object)[r.ravel()],
            "h": self.h.ravel(),
        })


def realize_vh_paths(
    tree: ScenarioTree,
    h0: Sequence[float],
    horizon_T: int,
    stage_boundaries: Sequence[int],
) -> VhPaths:
    """
    生成每个情景的 VH 路径

    阶段内 h 保持不变；进入新阶段时乘以 (1+δ)。递推使用未截断值，
    输出截断到 [0, 1] 并统计截断的 (情景, 区域) 路径数。

    Args:
        tree: 情景树
        h0: 各区域初始 VH
        horizon_T: 期数
        stage_boundaries: 决策阶段起始期

    Returns:
        VhPaths: 形状 (情景数, horizon_T, 区域数)

    Raises:
        ShapeError: 阶段数或区域数不一致
        ValidationError: h0 越界，或阶段起点没有覆盖全部期间
    """
    h0 = np.asarray(h0, dtype=float)
    bounds = [int(j) for j in stage_boundaries]
    if len(bounds) != tree.n_stages:
        raise ShapeError(f"阶段起点数 {len(bounds)} 与情景树阶段数 {tree.n_stages} 不一致")
    if bounds[0] != 1 or any(b <= a for a, b in zip(bounds, bounds[1:])) or bounds[-1] > horizon_T:
        raise ValidationError("stage_boundaries", f"必须从第 1 期开始、严格递增且不超过 {horizon_T}",
                              tuple(bounds))
    if h0.shape != (len(tree.region_ids),):
        raise ShapeError(f"h0 长度 {h0.shape} 与区域数 {len(tree.region_ids)} 不一致")
    if np.any(h0 < 0) or np.any(h0 > 1):
        raise ValidationError("h0", "必须在 [0, 1] 内", tuple(h0))

    stage_level = h0[None, None, :] * np.cumprod(1.0 + tree.deltas, axis=1)  # (Ω, S, R)
    ends = bounds[1:] + [horizon_T + 1]
    raw = np.empty((tree.n_scenarios, horizon_T, len(h0)))
    for s, (start, end) in enumerate(zip(bounds, ends)):
        raw[:, start - 1:end - 1, :] = stage_level[:, s, None, :]

    clamped = np.clip(raw, 0.0, 1.0)
    clamp_counts = np.any(clamped != raw, axis=1).astype(int)
    if clamp_counts.any():
        logger.warning(f"VH 路径截断到 [0, 1]: {int(clamp_counts.sum())} 条 (情景, 区域) 路径")
    return VhPaths(h=clamped, raw=raw, clamp_counts=clamp_counts)
