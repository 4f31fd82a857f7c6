"""
随机解价值（VSS）

先解期望值（EV）问题得到确定性方案；对每个决策阶段 j，把 1..j-1 阶段的分配
固定为 EV 方案后重解随机规划得到 EEV_j，VSS_j = EEV_j - Z*。
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol

import pandas as pd

from ..config import Config
from ..optimizer.fairness import FairnessMode, Utilitarian
from ..optimizer.instance import Instance
from ..optimizer.solvers import SolveReport
from ..utils.errors import VentallocError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


class InstanceSolver(Protocol):
    name: str

    def solve_instance(self, instance: Instance, fairness: FairnessMode = ..., pinned=None) -> SolveReport:
        ...


@dataclass(frozen=True)
class StageFailure:
    """某个阶段的子问题没有得到解"""

    stage: int
    status: str
    message: str


@dataclass
class VssReport:
    """
    VSS 结果

    Attributes:
        z_star: 随机规划最优值
        ev_objective: EV 问题最优值
        eev: 决策期 -> EEV_j
        failures: 未得到解的子问题
        warnings: 不变量偏差说明
    """

    stages: tuple
    z_star: Optional[float] = None
    ev_objective: Optional[float] = None
    eev: Dict[int, float] = field(default_factory=dict)
    failures: List[StageFailure] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    ev_allocation: Optional[pd.DataFrame] = None

    @property
    def vss(self) -> Dict[int, float]:
        if self.z_star is None:
            return {}
        return {j: value - self.z_star for j, value in self.eev.items()}

    @property
    def complete(self) -> bool:
        return not self.failures and len(self.eev) == len(self.stages)

    def to_frame(self) -> pd.DataFrame:
        vss = self.vss
        failed = {f.stage: f for f in self.failures}
        rows = []
        for j in self.stages:
            failure = failed.get(j)
            rows.append({
                "stage": j,
                "eev": self.eev.get(j),
                "vss": vss.get(j),
                "z_star": self.z_star,
                "status": failure.status if failure else ("ok" if j in self.eev else "skipped"),
            })
        return pd.DataFrame(rows, columns=["stage", "eev", "vss", "z_star", "status"])


def check_vss_invariants(report: VssReport, tol: float = Config.FEASIBILITY_TOL) -> List[str]:
    """
    校验 VSS_1 = 0、VSS_j >= 0 与 EEV_j 单调不减

    容差按 tol * (1 + |Z*|) 缩放；偏差只记录为警告，由调用方决定是否视为失败。
    """
    if report.z_star is None:
        return []
    scale = tol * (1.0 + abs(report.z_star))
    found: List[str] = []
    vss = report.vss
    first = report.stages[0]
    if first in vss and abs(vss[first]) > scale:
        found.append(f"VSS_{first} = {vss[first]:.6g} 不为 0")
    for j, value in vss.items():
        if value < -scale:
            found.append(f"VSS_{j} = {value:.6g} 为负")
    ordered = [j for j in report.stages if j in report.eev]
    for a, b in zip(ordered, ordered[1:]):
        if report.eev[b] < report.eev[a] - scale:
            found.append(f"EEV_{b} = {report.eev[b]:.6g} 小于 EEV_{a} = {report.eev[a]:.6g}")
    return found


def _failure(stage: int, report: SolveReport) -> StageFailure:
    return StageFailure(stage, report.status.value, report.message)


def compute_vss(
    instance: Instance,
    solver: InstanceSolver,
    fairness: FairnessMode = Utilitarian(),
    tol: float = Config.FEASIBILITY_TOL,
) -> VssReport:
    """
    计算各决策阶段的 EEV_j 与 VSS_j

    Args:
        instance: 随机规划实例
        solver: 实现 solve_instance 的求解策略（MILP 或穷举）
        fairness: 公平性约束（EV 与 EEV 子问题使用同一设定）
        tol: 不变量校验容差

    Returns:
        VssReport: 子问题失败时返回部分结果，failures 中给出失败阶段
    """
    stages = tuple(instance.stage_boundaries)
    report = VssReport(stages=stages)

    try:
        stochastic = solver.solve_instance(instance, fairness)
    except VentallocError as e:
        logger.error(f"随机规划求解失败: {e}")
        report.failures.append(StageFailure(stages[0], "error", str(e)))
        return report
    if not stochastic.status.has_solution:
        report.failures.append(_failure(stages[0], stochastic))
        return report
    report.z_star = stochastic.objective
    report.eev[stages[0]] = stochastic.objective
    logger.info(f"Z* = {report.z_star:.6f}")

    ev_instance = instance.expected_value_instance()
    try:
        ev = solver.solve_instance(ev_instance, fairness)
    except VentallocError as e:
        logger.error(f"EV 问题求解失败: {e}")
        report.failures.extend(StageFailure(j, "error", str(e)) for j in stages[1:])
        return report
    if not ev.status.has_solution or ev.plan is None:
        report.failures.extend(_failure(j, ev) for j in stages[1:])
        return report
    report.ev_objective = ev.objective
    report.ev_allocation = ev.plan.to_frame()
    ev_x = ev.plan.x[0]

    for idx in range(1, len(stages)):
        j = stages[idx]
        pinned = {s: [int(v) for v in ev_x[s]] for s in range(idx)}
        try:
            sub = solver.solve_instance(instance, fairness, pinned)
        except VentallocError as e:
            logger.error(f"EEV_{j} 求解失败: {e}")
            report.failures.append(StageFailure(j, "error", str(e)))
            continue
        if not sub.status.has_solution:
            logger.warning(f"EEV_{j} 无解: {sub.status.value}")
            report.failures.append(_failure(j, sub))
            continue
        report.eev[j] = sub.objective
        logger.info(f"EEV_{j} = {sub.objective:.6f}, VSS_{j} = {sub.objective - report.z_star:.6f}")

    report.warnings = check_vss_invariants(report, tol)
    for message in report.warnings:
        logger.warning(message)
    return report
