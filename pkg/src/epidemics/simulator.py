"""
情景级前向仿真

给定每个情景的 VH 路径和分阶段呼吸机分配，逐期调用 step 推进。
第 1 期状态即初始状态，转移发生在第 1..T-1 期；每一期（含第 T 期）都计算收治与拒收。
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.params import COMPARTMENTS, COMPARTMENT_INDEX, MigrationMatrix
from ..core.plan import AllocationPlan
from ..core.supply import SupplySchedule
from ..scenarios.tree import VhPaths
from ..utils.errors import ShapeError
from ..utils.logger import setup_logger
from .model import DynamicsParams, admissions, step

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Trajectory:
    """
    仿真轨迹

    Attributes:
        states: (情景数, T, 区域数, 10)
        A_s, A_c, K_s, K_c, X, vh: (情景数, T, 区域数)
    """

    region_ids: tuple
    states: np.ndarray
    A_s: np.ndarray
    A_c: np.ndarray
    K_s: np.ndarray
    K_c: np.ndarray
    X: np.ndarray
    vh: np.ndarray

    @property
    def n_scenarios(self) -> int:
        return int(self.states.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.states.shape[1])

    def compartment(self, name: str) -> np.ndarray:
        return self.states[..., COMPARTMENT_INDEX[name]]

    def deaths_final(self) -> np.ndarray:
        """每个情景末期各区域死亡数之和，形状 (情景数,)"""
        return self.compartment("D")[:, -1, :].sum(axis=1)

    def expected_deaths(self, probabilities: Sequence[float]) -> float:
        """期望死亡数 Σ_ω p_ω Σ_r D[ω, T, r]"""
        return float(np.dot(np.asarray(probabilities, dtype=float), self.deaths_final()))

    def regional_deaths(self, probabilities: Sequence[float]) -> pd.DataFrame:
        """各区域末期期望死亡数，列 (region, expected_deaths)"""
        per_region = np.einsum("w,wr->r", np.asarray(probabilities, dtype=float),
                               self.compartment("D")[:, -1, :])
        return pd.DataFrame({"region": list(self.region_ids), "expected_deaths": per_region})

    def to_frame(self) -> pd.DataFrame:
        """导出长表，情景与期间编号从 1 开始"""
        n_w, n_t, n_r, _ = self.states.shape
        w, t, r = np.meshgrid(np.arange(n_w), np.arange(n_t), np.arange(n_r), indexing="ij")
        frame = pd.DataFrame({
            "scenario": w.ravel() + 1,
            "period": t.ravel() + 1,
            "region": np.asarray(self.region_ids, dtype=object)[r.ravel()],
        })
        flat = self.states.reshape(-1, len(COMPARTMENTS))
        for i, name in enumerate(COMPARTMENTS):
            frame[name] = flat[:, i]
        for name in ("A_s", "A_c", "K_s", "K_c", "X"):
            frame[name] = getattr(self, name).ravel()
        return frame

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False)
        logger.info(f"轨迹已写入 {path}")


def ventilator_path(plan: AllocationPlan, initial_ventilators: np.ndarray, horizon: int) -> np.ndarray:
    """
    累计呼吸机 X[ω, t, r]

    X_0 = X0；决策期 X_t = X_{t-1} + x_t，其余期保持不变。
    """
    additions = np.zeros((plan.n_scenarios, horizon, len(plan.region_ids)))
    for j, period in enumerate(plan.stages):
        if period > horizon:
            raise ShapeError(f"决策阶段 {period} 超出规划期 {horizon}")
        additions[:, period - 1, :] = plan.x[:, j, :]
    return np.asarray(initial_ventilators, dtype=float)[None, None, :] + np.cumsum(additions, axis=1)


def simulate(
    vh: Union[VhPaths, np.ndarray],
    plan: AllocationPlan,
    params: DynamicsParams,
    migration: Optional[MigrationMatrix] = None,
    horizon: Optional[int] = None,
    supply: Optional[SupplySchedule] = None,
) -> Trajectory:
    """
    对所有情景做前向仿真

    Args:
        vh: VH 路径，(情景数, T, 区域数)
        plan: 分配方案，情景数需与 vh 一致
        params: 动力学参数
        migration: 迁移矩阵
        horizon: 期数，缺省取 vh 的长度
        supply: 给定时先检查方案不超过每阶段供给

    Returns:
        Trajectory: 仿真轨迹

    Raises:
        PlanInfeasibleError: 方案超过供给
        DynamicsViolationError: 仿真中出现负值
    """
    h = vh.h if isinstance(vh, VhPaths) else np.asarray(vh, dtype=float)
    horizon = int(horizon or h.shape[1])
    n_w = h.shape[0]
    if h.shape[1] < horizon or h.shape[2] != params.n_regions:
        raise ShapeError(f"VH 路径形状 {h.shape} 与规划期 {horizon}、区域数 {params.n_regions} 不符")
    if plan.n_scenarios != n_w:
        raise ShapeError(f"方案情景数 {plan.n_scenarios} 与 VH 情景数 {n_w} 不一致")
    if tuple(plan.region_ids) != tuple(params.region_ids):
        raise ShapeError(f"方案区域 {plan.region_ids} 与参数区域 {params.region_ids} 不一致")
    if supply is not None:
        plan.check_supply(supply)

    X = ventilator_path(plan, params.initial_ventilators, horizon)
    states = np.empty((n_w, horizon, params.n_regions, len(COMPARTMENTS)))
    flows = {name: np.empty((n_w, horizon, params.n_regions)) for name in ("A_s", "A_c", "K_s", "K_c")}
    states[:, 0] = params.initial_state[None, :, :]

    for t in range(horizon):
        if t < horizon - 1:
            result = step(states[:, t], h[:, t], X[:, t], params, migration)
            states[:, t + 1] = result.state
        else:
            result = admissions(states[:, t], X[:, t], params)
        for name in flows:
            flows[name][:, t] = getattr(result, name)

    logger.debug(f"仿真完成: {n_w} 个情景, {horizon} 期")
    return Trajectory(
        region_ids=tuple(params.region_ids),
        states=states,
        X=X,
        vh=h[:, :horizon],
        **flows,
    )
