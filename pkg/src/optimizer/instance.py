"""
求解实例与求解策略

Instance 把一次实验需要的全部输入（参数、情景树、VH 路径、需求流、供给）放在一起；
MilpSolver 与 BruteForceSolver 提供相同的 solve_instance 接口，
供 VSS、扫描实验与命令行共用。
"""
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np

from ..config import Config
from ..core.loader import ModelConfig
from ..core.params import MigrationMatrix
from ..core.plan import AllocationPlan
from ..core.supply import SupplySchedule
from ..epidemics.demand import DemandStream, extract_demand_streams
from ..epidemics.model import DynamicsParams
from ..epidemics.simulator import Trajectory, simulate
from ..scenarios.process import VhProcess, fit_vh_process_from_csv
from ..scenarios.tree import ScenarioTree, VhPaths, build_tree, expected_value_tree, realize_vh_paths
from ..utils.logger import setup_logger
from .builder import build_milp, complete_solution_from_plan
from .fairness import FairnessMode, Utilitarian
from .milp import MilpModel
from .oracle import brute_force_solve
from .solvers import SolveOptions, SolveReport, SolverAdapter, make_adapter, plan_from_values, solve

logger = setup_logger(__name__)


@dataclass(frozen=True)
class Instance:
    """一个可直接求解的实例"""

    params: DynamicsParams
    process: VhProcess
    tree: ScenarioTree
    vh: VhPaths
    supply: SupplySchedule
    migration: MigrationMatrix
    demand: DemandStream
    h0: tuple
    horizon: int
    name: str = "experiment"

    @property
    def region_ids(self) -> tuple:
        return self.params.region_ids

    @property
    def stage_boundaries(self) -> tuple:
        return tuple(self.supply.stages)

    def simulate_plan(self, plan: AllocationPlan, check_supply: bool = True) -> Trajectory:
        return simulate(self.vh, plan, self.params, self.migration, self.horizon,
                        self.supply if check_supply else None)

    def zero_plan(self) -> AllocationPlan:
        return AllocationPlan.zeros(self.tree.n_scenarios, self.stage_boundaries, self.region_ids)

    def with_tree(self, tree: ScenarioTree) -> "Instance":
        """换一棵情景树（例如期望值树），重新生成 VH 路径与需求流"""
        return _assemble(self.params, self.process, tree, self.supply, self.migration, self.h0,
                         self.horizon, self.name)

    def with_supply(self, supply: SupplySchedule) -> "Instance":
        return replace(self, supply=supply)

    def expected_value_instance(self) -> "Instance":
        return self.with_tree(expected_value_tree(self.process, self.tree.n_stages))


def _assemble(
    params: DynamicsParams,
    process: VhProcess,
    tree: ScenarioTree,
    supply: SupplySchedule,
    migration: MigrationMatrix,
    h0: Sequence[float],
    horizon: int,
    name: str,
) -> Instance:
    vh = realize_vh_paths(tree, h0, horizon, supply.stages)
    zero = AllocationPlan.zeros(tree.n_scenarios, supply.stages, params.region_ids)
    baseline = simulate(vh, zero, params, migration, horizon)
    demand = extract_demand_streams(baseline, params)
    return Instance(params, process, tree, vh, supply, migration, demand, tuple(h0), horizon, name)


def vh_process_from_config(config: ModelConfig) -> VhProcess:
    """按配置取得 VH 过程：显式 mu/sigma，或从序列文件拟合"""
    settings = config.vh
    if settings.series_csv is not None:
        return fit_vh_process_from_csv(settings.series_csv, config.global_params.decision_stages_J,
                                       config.region_ids)
    return VhProcess(config.region_ids, settings.mu, settings.sigma)


def prepare_instance(
    config: ModelConfig,
    supply: Optional[SupplySchedule] = None,
    process: Optional[VhProcess] = None,
) -> Instance:
    """
    由配置生成实例

    Args:
        config: 实验配置
        supply: 替换配置中的供给计划
        process: 替换配置中的 VH 过程

    Returns:
        Instance: 含 3^(阶段数-1) 个情景的实例
    """
    g = config.global_params
    params = DynamicsParams.from_params(g, config.regions)
    process = process or vh_process_from_config(config)
    tree = build_tree(process, g.n_stages, config.vh.branch_probabilities)
    instance = _assemble(params, process, tree, supply or config.supply, config.migration,
                         config.vh.h0, g.horizon_T, config.name)
    logger.info(f"实例 {config.name}: {tree.n_scenarios} 个情景, {g.horizon_T} 期, {params.n_regions} 个区域")
    return instance


def build_instance_milp(
    instance: Instance,
    fairness: FairnessMode = Utilitarian(),
    pinned: Optional[Mapping[int, Sequence[int]]] = None,
) -> MilpModel:
    return build_milp(instance.params, instance.tree, instance.vh, instance.demand, instance.supply,
                      fairness, pinned)


class MilpSolver:
    """经由外部 MILP 求解器求解"""

    name = "milp"

    def __init__(self, adapter: Optional[SolverAdapter] = None, options: Optional[SolveOptions] = None) -> None:
        self.adapter = adapter or make_adapter()
        self.options = options or SolveOptions()

    def solve_instance(
        self,
        instance: Instance,
        fairness: FairnessMode = Utilitarian(),
        pinned: Optional[Mapping[int, Sequence[int]]] = None,
    ) -> SolveReport:
        model = build_instance_milp(instance, fairness, pinned)
        return solve(model, self.adapter, self.options, complete=_simulated_completion(instance, model))


def _simulated_completion(instance: Instance, model: MilpModel):
    """按已通过校验的整数分配重新仿真，给出报告用的完整解"""

    def complete(values: np.ndarray) -> np.ndarray:
        plan = plan_from_values(model, values)
        trajectory = instance.simulate_plan(plan, check_supply=False)
        return complete_solution_from_plan(model, plan, trajectory, instance.params)

    return complete


class BruteForceSolver:
    """穷举求解，只适用于很小的算例"""

    name = "brute-force"

    def __init__(self, limit: int = Config.BRUTE_FORCE_LIMIT, n_jobs: int = 1) -> None:
        self.limit = limit
        self.n_jobs = n_jobs

    def solve_instance(
        self,
        instance: Instance,
        fairness: FairnessMode = Utilitarian(),
        pinned: Optional[Mapping[int, Sequence[int]]] = None,
    ) -> SolveReport:
        return brute_force_solve(
            instance.params, instance.tree, instance.vh, instance.supply, fairness,
            migration=instance.migration, horizon=instance.horizon, pinned=pinned,
            limit=self.limit, n_jobs=self.n_jobs,
        )


def export_report(report: SolveReport, instance: Instance, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """
    导出求解结果

    写出 allocations.csv (scenario, stage, region, x)、expected_allocation.csv、
    regional_deaths.csv 与 report.json。

    Returns:
        Dict[str, Path]: 文件名 -> 路径
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}
    summary = report.summary()
    summary["wall_time"] = report.wall_time
    summary["n_optimal"] = report.n_optimal
    if report.plan is not None:
        report.plan.to_frame().to_csv(out / "allocations.csv", index=False)
        written["allocations.csv"] = out / "allocations.csv"
        report.plan.expected_allocation(instance.tree.probabilities).to_csv(
            out / "expected_allocation.csv", index=False)
        written["expected_allocation.csv"] = out / "expected_allocation.csv"
        trajectory = instance.simulate_plan(report.plan)
        trajectory.regional_deaths(instance.tree.probabilities).to_csv(out / "regional_deaths.csv", index=False)
        written["regional_deaths.csv"] = out / "regional_deaths.csv"
        summary["simulated_expected_deaths"] = trajectory.expected_deaths(instance.tree.probabilities)
    (out / "report.json").write_text(json.dumps(summary, indent=2, ensure_ascii=False, default=str),
                                     encoding="utf-8")
    written["report.json"] = out / "report.json"
    logger.info(f"求解结果已写入 {out}")
    return written
