"""
呼吸机分配方案
x[ω, j, r] 为情景 ω 在第 j 个决策阶段分配给区域 r 的新增呼吸机数量。
"""
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.errors import PlanInfeasibleError, ShapeError, ValidationError
from .supply import SupplySchedule


@dataclass(frozen=True)
class AllocationPlan:
    """整数分配方案，形状 (情景数, 阶段数, 区域数)"""

    x: np.ndarray
    stages: Tuple[int, ...]
    region_ids: Tuple[str, ...]

    def __post_init__(self) -> None:
        x = np.asarray(self.x)
        if x.ndim != 3:
            raise ShapeError(f"分配方案必须是三维数组，当前维度 {x.ndim}")
        if x.shape[1:] != (len(self.stages), len(self.region_ids)):
            raise ShapeError(
                f"分配方案形状 {x.shape} 与阶段数 {len(self.stages)}、区域数 {len(self.region_ids)} 不符"
            )
        if x.size and np.any(np.abs(x - np.round(x)) > 1e-6):
            raise ValidationError("plan.x", "分配必须为整数")
        if np.any(x < 0):
            raise ValidationError("plan.x", "分配必须 >= 0")
        x = np.round(x).astype(np.int64)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "stages", tuple(int(s) for s in self.stages))
        object.__setattr__(self, "region_ids", tuple(str(r) for r in self.region_ids))

    @property
    def n_scenarios(self) -> int:
        return int(self.x.shape[0])

    @classmethod
    def zeros(
        cls, n_scenarios: int, stages: Sequence[int], region_ids: Sequence[str]
    ) -> "AllocationPlan":
        return cls(np.zeros((n_scenarios, len(stages), len(region_ids)), dtype=np.int64),
                   tuple(stages), tuple(region_ids))

    @classmethod
    def broadcast(
        cls,
        stage_allocations: Iterable[Sequence[int]],
        n_scenarios: int,
        stages: Sequence[int],
        region_ids: Sequence[str],
    ) -> "AllocationPlan":
        """所有情景使用同一组阶段分配（天然满足非预期性）"""
        per_stage = np.asarray(list(stage_allocations), dtype=np.int64)
        x = np.broadcast_to(per_stage, (n_scenarios,) + per_stage.shape).copy()
        return cls(x, tuple(stages), tuple(region_ids))

    def check_supply(self, supply: SupplySchedule) -> None:
        """
        检查每个情景每个阶段的分配总量不超过 Δ_j

        Raises:
            PlanInfeasibleError: 存在超额分配
        """
        if tuple(supply.stages) != self.stages:
            raise ShapeError(f"供给阶段 {supply.stages} 与方案阶段 {self.stages} 不一致")
        totals = self.x.sum(axis=2)
        deltas = np.asarray(supply.deltas)
        over = np.argwhere(totals > deltas[None, :])
        if over.size:
            w, j = over[0]
            raise PlanInfeasibleError(
                f"情景 {w + 1} 阶段 {self.stages[j]} 分配 {totals[w, j]} 超过 Δ={deltas[j]}"
                f"（共 {len(over)} 处超额）"
            )

    def nac_spread(self, blocks_per_stage: Sequence[Sequence[Sequence[int]]]) -> int:
        """
        各不可区分块内分配的最大极差（满足非预期性时为 0）

        Args:
            blocks_per_stage: 每个阶段的情景分块（情景下标从 0 开始）
        """
        spread = 0
        for j, blocks in enumerate(blocks_per_stage):
            for block in blocks:
                values = self.x[list(block), j, :]
                spread = max(spread, int((values.max(axis=0) - values.min(axis=0)).max()))
        return spread

    def pinned(self, stage_indices: Iterable[int]) -> Mapping[int, np.ndarray]:
        """取出若干阶段的分配（要求这些阶段在各情景一致）"""
        out = {}
        for j in stage_indices:
            first = self.x[0, j, :]
            if np.any(self.x[:, j, :] != first):
                raise ValidationError(f"plan.stage[{self.stages[j]}]", "各情景分配不一致，无法固定")
            out[int(j)] = first.copy()
        return out

    def expected_allocation(self, probabilities: Sequence[float]) -> pd.DataFrame:
        """
        各阶段各区域的期望分配量 Σ_ω p_ω x

        Returns:
            pd.DataFrame: 列 (stage, region, expected_x)
        """
        p = np.asarray(probabilities, dtype=float)
        expected = np.einsum("w,wjr->jr", p, self.x.astype(float))
        rows = [
            {"stage": s, "region": r, "expected_x": float(expected[j, k])}
            for j, s in enumerate(self.stages)
            for k, r in enumerate(self.region_ids)
        ]
        return pd.DataFrame(rows, columns=["stage", "region", "expected_x"])

    def to_frame(self) -> pd.DataFrame:
        """导出为长表 (scenario, stage, region, x)，情景编号从 1 开始"""
        w, j, r = np.meshgrid(
            np.arange(self.n_scenarios), np.arange(len(self.stages)),
            np.arange(len(self.region_ids)), indexing="ij",
        )
        return pd.DataFrame({
            "scenario": w.ravel() + 1,
            "stage": np.asarray(self.stages)[j.ravel()],
            "region": np.asarray(self.region_ids, dtype=object)[r.ravel()],
            "x": self.x.ravel(),
        })

    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        n_scenarios: int,
        stages: Sequence[int],
        region_ids: Sequence[str],
        broadcast: Optional[bool] = None,
    ) -> "AllocationPlan":
        """
        从长表读取分配方案

        缺少 scenario 列时视为所有情景共用同一组阶段分配。

        Args:
            frame: 列 (scenario?, stage, region, x)
            n_scenarios: 情景数
            stages: 决策阶段
            region_ids: 区域编号
            broadcast: 强制按无情景列处理
        """
        missing = {"stage", "region", "x"} - set(frame.columns)
        if missing:
            raise ValidationError("plan", f"缺少列 {sorted(missing)}")
        stage_pos = {int(s): i for i, s in enumerate(stages)}
        region_pos = {str(r): i for i, r in enumerate(region_ids)}
        use_broadcast = broadcast if broadcast is not None else "scenario" not in frame.columns
        x = np.zeros((n_scenarios, len(stages), len(region_ids)), dtype=np.int64)
        for row_no, row in enumerate(frame.itertuples(index=False), start=2):
            stage, region = int(row.stage), str(row.region)
            if stage not in stage_pos:
                raise ValidationError(f"plan 行 {row_no}", f"阶段 {stage} 不是决策阶段")
            if region not in region_pos:
                raise ValidationError(f"plan 行 {row_no}", f"未知区域 {region}")
            value = float(row.x)
            if use_broadcast:
                x[:, stage_pos[stage], region_pos[region]] = round(value)
            else:
                w = int(row.scenario) - 1
                if not 0 <= w < n_scenarios:
                    raise ValidationError(f"plan 行 {row_no}", f"情景编号 {w + 1} 越界")
                x[w, stage_pos[stage], region_pos[region]] = round(value)
        return cls(x, tuple(stages), tuple(region_ids))
