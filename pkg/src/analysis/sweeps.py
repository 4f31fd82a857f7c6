"""
实验扫描

- 时机/库存扫描：对 (起始阶段 s, 初始库存 p_lower, 每阶段增量 p) 的网格逐格求解，
  并对期望死亡数做 OLS 回归
- 公平性扫描：Utilitarian、Equal、EquityK(k, t')、ProportionalZeta(ζ) 逐格求解，
  报告公平代价并检查排序与单调性

单格失败只记录在结果行中，扫描继续；结果按格子编号排序，与完成先后无关。
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pandas as pd
from joblib import Parallel, delayed

from ..config import Config
from ..core.supply import resolve_supply_schedule
from ..optimizer.fairness import Equal, EquityK, FairnessMode, ProportionalZeta, Utilitarian
from ..optimizer.instance import Instance
from ..utils.errors import ConfigError, ValidationError, VentallocError
from ..utils.logger import setup_logger
from .regression import OlsResult, ols_fit
from .vss import InstanceSolver

logger = setup_logger(__name__)

INFEASIBLE = math.inf


@dataclass(frozen=True)
class SweepCell:
    """一个扫描格子：坐标 + 求解设定"""

    index: int
    coords: Dict[str, Any]
    fairness: FairnessMode = Utilitarian()


@dataclass
class SweepResult:
    """扫描结果表及派生信息"""

    kind: str
    table: pd.DataFrame
    regression: Optional[OlsResult] = None
    properties: Dict[str, bool] = field(default_factory=dict)

    def long_format(self) -> pd.DataFrame:
        """绘图用长表 (cell, 坐标列..., variable, value)"""
        coord_cols = [c for c in self.table.columns if c not in _VALUE_COLUMNS]
        value_cols = [c for c in _VALUE_COLUMNS if c in self.table.columns]
        return self.table.melt(id_vars=coord_cols, value_vars=value_cols, var_name="variable", value_name="value")


_VALUE_COLUMNS = ("objective", "wall_time", "gap", "price_of_fairness")


def _solve_cell(solver: InstanceSolver, instance: Instance, cell: SweepCell) -> Dict[str, Any]:
    row: Dict[str, Any] = {"cell": cell.index, **cell.coords, "fairness": cell.fairness.label()}
    try:
        report = solver.solve_instance(instance, cell.fairness)
    except VentallocError as e:
        logger.error(f"格子 {cell.index} 求解出错: {e}")
        row.update(status="ERROR", objective=INFEASIBLE, wall_time=0.0, gap=None, message=str(e))
        return row
    objective = report.objective if report.status.has_solution else INFEASIBLE
    row.update(status=report.status.value, objective=objective, wall_time=report.wall_time,
               gap=report.gap, message=report.message)
    logger.info(f"格子 {cell.index} {cell.coords} {cell.fairness.label()}: {report.status.value}, {objective}")
    return row


def _run_cells(
    solver: InstanceSolver, instances: Sequence[Instance], cells: Sequence[SweepCell], n_jobs: int
) -> pd.DataFrame:
    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_solve_cell)(solver, inst, cell) for inst, cell in zip(instances, cells)
    )
    return pd.DataFrame(rows).sort_values("cell").reset_index(drop=True)


def timing_cells(spec: Mapping[str, Any]) -> List[SweepCell]:
    """
    展开时机/库存网格

    Args:
        spec: {"s": [...], "p_lower": [...], "p": [...], "p_upper": int}，s 为阶段序号（从 1 开始）
    """
    try:
        s_values = [int(v) for v in spec["s"]]
        lowers = [int(v) for v in spec["p_lower"]]
        increments = [int(v) for v in spec["p"]]
    except KeyError as e:
        raise ValidationError(f"sweeps.timing.{e.args[0]}", "缺少网格")
    p_upper = int(spec.get("p_upper", 10000))
    return [
        SweepCell(i, {"s": s, "p_lower": pl, "p": p, "p_upper": p_upper})
        for i, (s, pl, p) in enumerate(itertools.product(s_values, lowers, increments))
    ]


def run_timing_sweep(
    instance: Instance,
    solver: InstanceSolver,
    spec: Mapping[str, Any],
    n_jobs: int = Config.DEFAULT_JOBS,
) -> SweepResult:
    """
    时机/库存扫描：每格替换供给计划后求解功利主义模型

    可行格子不少于 5 个且设计满秩时附带 OLS 回归。
    """
    stages = instance.stage_boundaries
    cells = []
    instances = []
    for cell in timing_cells(spec):
        s = cell.coords["s"]
        if not 1 <= s <= len(stages):
            raise ConfigError(f"起始阶段序号 {s} 超出 1..{len(stages)}")
        supply = resolve_supply_schedule(cell.coords["p_lower"], cell.coords["p"], cell.coords["p_upper"],
                                         stages, stages[s - 1])
        coords = {**cell.coords, "deltas": " ".join(str(d) for d in supply.deltas)}
        cells.append(SweepCell(cell.index, coords, cell.fairness))
        instances.append(instance.with_supply(supply))
    logger.info(f"时机扫描: {len(cells)} 个格子")
    table = _run_cells(solver, instances, cells, n_jobs)

    result = SweepResult("timing", table)
    feasible = table[table["objective"] != INFEASIBLE]
    try:
        result.regression = ols_fit(feasible[["s", "p_lower", "p"]].to_numpy(), feasible["objective"].to_numpy())
    except VentallocError as e:
        logger.warning(f"跳过回归: {e}")
    return result


def fairness_cells(spec: Mapping[str, Any], horizon: int) -> List[SweepCell]:
    """
    展开公平性网格

    Args:
        spec: {"k": [...], "zeta": [...], "t_prime": [...], "k_for_t_prime": float, "equal": bool}
        horizon: 期数，t' 网格缺省为空
    """
    modes: List[tuple] = [({"mode": "utilitarian"}, Utilitarian())]
    if spec.get("equal", True):
        modes.append(({"mode": "equal"}, Equal()))
    for k in spec.get("k", []):
        modes.append(({"mode": "equity", "k": float(k), "t_prime": 1}, EquityK(float(k))))
    t_k = spec.get("k_for_t_prime")
    for t in spec.get("t_prime", []):
        if t_k is None:
            raise ValidationError("sweeps.fairness.k_for_t_prime", "给出 t_prime 网格时必须指定 k")
        if int(t) > horizon:
            logger.warning(f"t'={t} 超过规划期 {horizon}，公平约束为空")
        modes.append(({"mode": "equity", "k": float(t_k), "t_prime": int(t)}, EquityK(float(t_k), int(t))))
    for z in spec.get("zeta", []):
        modes.append(({"mode": "proportional", "zeta": float(z)}, ProportionalZeta(float(z))))
    return [SweepCell(i, coords, mode) for i, (coords, mode) in enumerate(modes)]


def _non_increasing(values: Sequence[float], tol: float) -> bool:
    return all(b <= a + tol * (1 + abs(a)) for a, b in zip(values, values[1:]) if a != INFEASIBLE)


def fairness_properties(table: pd.DataFrame, tol: float = Config.FEASIBILITY_TOL) -> Dict[str, bool]:
    """
    公平性扫描的排序与单调性检查

    - equal >= 最小 k 的 equity >= utilitarian
    - 固定 t'=1 时目标随 k 增大不增
    - 目标随 ζ 增大不减
    - 固定 k 时目标随 t' 增大不增
    """
    props: Dict[str, bool] = {}
    util = table.loc[table["mode"] == "utilitarian", "objective"]
    base = float(util.iloc[0]) if len(util) else None
    equity = table[table["mode"] == "equity"]
    if equity.empty:
        by_k = equity
    else:
        by_k = equity[equity["t_prime"] == 1].sort_values("k")
    if base is not None and len(by_k):
        smallest = float(by_k["objective"].iloc[0])
        props["equity_ge_utilitarian"] = smallest >= base - tol * (1 + abs(base))
        equal = table.loc[table["mode"] == "equal", "objective"]
        if len(equal):
            props["equal_ge_equity"] = float(equal.iloc[0]) >= smallest - tol * (1 + abs(smallest))
    if len(by_k) > 1:
        props["non_increasing_in_k"] = _non_increasing(by_k["objective"].tolist(), tol)
    if "zeta" in table.columns:
        by_zeta = table[table["mode"] == "proportional"].sort_values("zeta")
        if len(by_zeta) > 1:
            props["non_decreasing_in_zeta"] = _non_increasing(by_zeta["objective"].tolist()[::-1], tol)
    if not equity.empty:
        delayed_rows = equity[equity["t_prime"] > 1]
        if len(delayed_rows):
            k = float(delayed_rows["k"].iloc[0])
            by_t = equity[equity["k"] == k].sort_values("t_prime")
            if len(by_t) > 1:
                props["non_increasing_in_t_prime"] = _non_increasing(by_t["objective"].tolist(), tol)
    for name, ok in props.items():
        if not ok:
            logger.warning(f"公平性扫描性质不成立: {name}")
    return props


def run_fairness_sweep(
    instance: Instance,
    solver: InstanceSolver,
    spec: Mapping[str, Any],
    n_jobs: int = Config.DEFAULT_JOBS,
) -> SweepResult:
    """公平性扫描，附带公平代价（相对功利主义最优值的增量）"""
    cells = fairness_cells(spec, instance.horizon)
    logger.info(f"公平性扫描: {len(cells)} 个格子")
    table = _run_cells(solver, [instance] * len(cells), cells, n_jobs)
    base = table.loc[table["mode"] == "utilitarian", "objective"]
    if len(base) and base.iloc[0] != INFEASIBLE:
        table["price_of_fairness"] = table["objective"] - float(base.iloc[0])
    return SweepResult("fairness", table, properties=fairness_properties(table))


def run_sweeps(
    instance: Instance,
    solver: InstanceSolver,
    spec: Mapping[str, Any],
    n_jobs: int = Config.DEFAULT_JOBS,
) -> Dict[str, SweepResult]:
    """
    按配置中的 sweeps 区块运行全部扫描

    Args:
        instance: 基准实例
        solver: 求解策略
        spec: {"timing": {...}, "fairness": {...}}，缺少的部分跳过

    Returns:
        Dict[str, SweepResult]: "timing" / "fairness" -> 结果
    """
    unknown = set(spec) - {"timing", "fairness"}
    if unknown:
        raise ValidationError(",".join(sorted(unknown)), "未知的扫描类型")
    results: Dict[str, SweepResult] = {}
    if "timing" in spec:
        results["timing"] = run_timing_sweep(instance, solver, spec["timing"], n_jobs)
    if "fairness" in spec:
        results["fairness"] = run_fairness_sweep(instance, solver, spec["fairness"], n_jobs)
    if not results:
        raise ValidationError("sweeps", "没有可运行的扫描")
    return results
