"""
呼吸机供给计划

Δ_j 为第 j 个决策阶段可新分配的呼吸机数量。初始库存在第一个阶段投放，
从部署起始阶段开始每阶段增加 p 台，总量不超过上限 p̄。
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from ..utils.errors import ConfigError, ValidationError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class SupplySchedule:
    """各决策阶段的新增呼吸机数量"""

    stages: Tuple[int, ...]
    deltas: Tuple[int, ...]
    initial_stockpile_p_lower: int = 0
    per_stage_increment_p: int = 0
    cap_p_upper: Optional[int] = None
    deployment_start_stage_s: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(int(s) for s in self.stages))
        object.__setattr__(self, "deltas", tuple(int(d) for d in self.deltas))
        if len(self.stages) != len(self.deltas):
            raise ValidationError("supply.deltas", "长度必须与决策阶段数一致", len(self.deltas))

    @property
    def start_stage_ordinal(self) -> int:
        """部署起始阶段的序号（从 1 开始），用于回归设计矩阵"""
        return self.stages.index(self.deployment_start_stage_s) + 1

    def delta_at(self, stage: int) -> int:
        return self.deltas[self.stages.index(stage)]

    @classmethod
    def from_deltas(cls, stages: Sequence[int], deltas: Sequence[int]) -> "SupplySchedule":
        """
        直接给定每阶段的 Δ

        Args:
            stages: 决策阶段（期间编号）
            deltas: 每阶段新增数量

        Returns:
            SupplySchedule: 供给计划
        """
        for i, d in enumerate(deltas):
            if int(d) != d:
                raise ValidationError(f"supply.deltas[{i}]", "必须为整数", d)
            if d < 0:
                raise ValidationError(f"supply.deltas[{i}]", "必须 >= 0", d)
        return cls(
            stages=tuple(stages),
            deltas=tuple(int(d) for d in deltas),
            initial_stockpile_p_lower=int(deltas[0]) if len(deltas) else 0,
            per_stage_increment_p=0,
            cap_p_upper=max((int(d) for d in deltas), default=0),
            deployment_start_stage_s=int(stages[0]) if len(stages) else 1,
        )


def resolve_supply_schedule(
    p_lower: int,
    p: int,
    p_upper: int,
    stages: Sequence[int],
    start_stage: int,
) -> SupplySchedule:
    """
    计算每个决策阶段的 Δ_j

    起始阶段之前的阶段只有初始库存；从起始阶段开始每阶段增加 p，
    并截断在 p_upper。

    Args:
        p_lower: 初始库存 p̲
        p: 每阶段增量
        p_upper: 上限 p̄
        stages: 决策阶段（期间编号）
        start_stage: 部署起始阶段（必须是 stages 之一）

    Returns:
        SupplySchedule: 解析后的供给计划

    Raises:
        ConfigError: start_stage 不在决策阶段中
        ValidationError: 参数为负或 p_upper < p_lower
    """
    stages = tuple(int(s) for s in stages)
    if p_lower < 0:
        raise ValidationError("supply.p_lower", "必须 >= 0", p_lower)
    if p < 0:
        raise ValidationError("supply.p", "必须 >= 0", p)
    if p_upper < p_lower:
        raise ValidationError("supply.p_upper", "必须 >= p_lower", p_upper)
    if start_stage not in stages:
        raise ConfigError(f"部署起始阶段 {start_stage} 不在决策阶段 {stages} 中")

    start_index = stages.index(start_stage)
    deltas = tuple(
        int(min(p_upper, p_lower + p * max(0, i - start_index))) for i in range(len(stages))
    )
    logger.debug(f"供给计划: p̲={p_lower}, p={p}, p̄={p_upper}, s={start_stage} -> Δ={deltas}")
    return SupplySchedule(
        stages=stages,
        deltas=deltas,
        initial_stockpile_p_lower=int(p_lower),
        per_stage_increment_p=int(p),
        cap_p_upper=int(p_upper),
        deployment_start_stage_s=int(start_stage),
    )
