"""
外部 MILP 求解器适配层
负责：
- 把模型写成 MPS，调用外部可执行文件
- 解析解文件（CBC 格式与通用 "名称 值" 格式）
- 把解映射回列顺序，并在报告最优之前逐行复核可行性
"""
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import Config
from ..core.plan import AllocationPlan
from ..utils.errors import AdapterFaultError, SolverEnvironmentError
from ..utils.logger import setup_logger
from .milp import CONTINUOUS, MilpModel
from .mps import NameMap, emit_mps

logger = setup_logger(__name__)


class SolveStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"
    NOT_SOLVED = "NOT_SOLVED"
    ERROR = "ERROR"

    @property
    def has_solution(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)


@dataclass
class SolveOptions:
    """求解参数，缺省值取自 Config"""

    time_limit: float = Config.TIME_LIMIT
    mip_gap: float = Config.MIP_GAP
    feasibility_tol: float = Config.FEASIBILITY_TOL
    workdir: Optional[Path] = None
    keep_files: bool = False


@dataclass
class SolveReport:
    """
    求解结果

    Attributes:
        status: 求解状态
        objective: 期望死亡数
        values: 按列顺序的解向量
        plan: 分配方案 x[ω, j, r]
        wall_time: 秒
        gap: 相对 gap（求解器未报告时为 None）
    """

    status: SolveStatus
    objective: Optional[float] = None
    values: Optional[np.ndarray] = None
    plan: Optional[AllocationPlan] = None
    wall_time: float = 0.0
    gap: Optional[float] = None
    mip_gap: float = Config.MIP_GAP
    time_limit: float = Config.TIME_LIMIT
    solver: str = ""
    message: str = ""
    n_optimal: Optional[int] = None
    extras: Dict[str, object] = field(default_factory=dict)

    def summary(self) -> Dict[str, object]:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "gap": self.gap,
            "mip_gap": self.mip_gap,
            "time_limit": self.time_limit,
            "solver": self.solver,
            "message": self.message,
        }


@dataclass
class RawSolution:
    status: SolveStatus
    objective: Optional[float]
    values: Dict[str, float]
    gap: Optional[float] = None
    message: str = ""


class SolverAdapter:
    """适配器基类：子类给出命令行与解文件解析"""

    name = "base"

    def __init__(self, executable: Optional[str] = None) -> None:
        self.executable = executable

    def check_available(self) -> str:
        """
        Raises:
            SolverEnvironmentError: 找不到可执行文件
        """
        exe = self.executable
        if not exe:
            raise SolverEnvironmentError("未配置 MILP 求解器，请设置 VENTALLOC_SOLVER 或使用 --solver")
        path = Path(exe)
        if not path.exists():
            found = shutil.which(exe)
            if not found:
                raise SolverEnvironmentError(f"求解器不存在: {exe}")
            return found
        return str(path)

    def command(self, exe: str, mps: Path, solution: Path, options: SolveOptions) -> List[str]:
        raise NotImplementedError

    def parse_solution(self, path: Path, names: NameMap, n_rows: int, n_cols: int) -> RawSolution:
        raise NotImplementedError


_CBC_STATUS = {
    "Optimal": SolveStatus.OPTIMAL,
    "Infeasible": SolveStatus.INFEASIBLE,
    "Integer": SolveStatus.INFEASIBLE,  # "Integer infeasible"
    "Unbounded": SolveStatus.UNBOUNDED,
    "Stopped": SolveStatus.FEASIBLE,
}


class CbcAdapter(SolverAdapter):
    """COIN-OR CBC 命令行"""

    name = "cbc"

    def command(self, exe: str, mps: Path, solution: Path, options: SolveOptions) -> List[str]:
        return [
            exe, str(mps),
            "-sec", f"{options.time_limit:g}",
            "-ratioGap", f"{options.mip_gap:g}",
            "-solve",
            "-printingOptions", "all",
            "-solution", str(solution),
        ]

    def parse_solution(self, path: Path, names: NameMap, n_rows: int, n_cols: int) -> RawSolution:
        """
        解析 CBC 解文件

        首行第一个词给出状态；其后每行为 "序号 名称 值 对偶值"，不可行项以 ** 开头。
        行数加列数等于条目数时按位置区分行与列，否则按名称匹配。
        """
        lines = path.read_text().splitlines()
        if not lines:
            return RawSolution(SolveStatus.ERROR, None, {}, message="解文件为空")
        head = lines[0].split()
        status = _CBC_STATUS.get(head[0], SolveStatus.NOT_SOLVED) if head else SolveStatus.ERROR
        objective = None
        match = re.search(r"objective value\s+(-?[0-9.eE+-]+)", lines[0])
        if match:
            objective = float(match.group(1))

        entries: List[Tuple[str, float]] = []
        for line in lines[1:]:
            tokens = line.split()
            if len(tokens) < 3:
                continue
            if tokens[0] == "**":
                tokens = tokens[1:]
            entries.append((tokens[1], float(tokens[2])))

        col_names = set(names.columns.values())
        if len(entries) == n_rows + n_cols:
            values = dict(entries[n_rows:])
        else:
            values = {name: value for name, value in entries if name in col_names}
        if status == SolveStatus.FEASIBLE and (not values or "no integer solution" in lines[0]):
            status = SolveStatus.NOT_SOLVED
        return RawSolution(status, objective, values, message=lines[0].strip())


class GenericAdapter(SolverAdapter):
    """
    通用解文件：
        status OPTIMAL
        objective 123.4
        name value
        ...

    命令模板中的 {mps}, {solution}, {time_limit}, {mip_gap} 会被替换。
    """

    name = "generic"

    def __init__(self, executable: Optional[str] = None, template: Sequence[str] = ("{mps}", "{solution}")) -> None:
        super().__init__(executable)
        self.template = tuple(template)

    def command(self, exe: str, mps: Path, solution: Path, options: SolveOptions) -> List[str]:
        fill = {"mps": str(mps), "solution": str(solution),
                "time_limit": f"{options.time_limit:g}", "mip_gap": f"{options.mip_gap:g}"}
        return [exe] + [part.format(**fill) for part in self.template]

    def parse_solution(self, path: Path, names: NameMap, n_rows: int, n_cols: int) -> RawSolution:
        return parse_generic_solution(path)


def parse_generic_solution(path: Path) -> RawSolution:
    status = SolveStatus.ERROR
    objective = None
    gap = None
    values: Dict[str, float] = {}
    for line in Path(path).read_text().splitlines():
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        key = tokens[0].lower()
        if key == "status":
            try:
                status = SolveStatus(tokens[1].upper())
            except (IndexError, ValueError):
                status = SolveStatus.ERROR
        elif key == "objective":
            objective = float(tokens[1])
        elif key == "gap":
            gap = float(tokens[1])
        elif len(tokens) >= 2:
            values[tokens[0]] = float(tokens[1])
    return RawSolution(status, objective, values, gap=gap)


def make_adapter(solver_format: Optional[str] = None, executable: Optional[str] = None) -> SolverAdapter:
    """按格式名构造适配器，可执行文件按 Config.resolve_solver_path 的顺序查找"""
    solver_format = (solver_format or Config.SOLVER_FORMAT).lower()
    exe = Config.resolve_solver_path(executable)
    if solver_format == "cbc":
        return CbcAdapter(exe)
    if solver_format == "generic":
        return GenericAdapter(exe)
    raise SolverEnvironmentError(f"未知的解文件格式: {solver_format}")


_GAP_PATTERN = re.compile(r"Gap:\s+([0-9.eE+-]+)")


def solve(
    model: MilpModel,
    adapter: SolverAdapter,
    options: Optional[SolveOptions] = None,
    complete: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SolveReport:
    """
    调用外部求解器求解

    Args:
        model: MILP 模型
        adapter: 求解器适配器
        options: 求解参数
        complete: 由取整后的解仿真补全状态列的回调，见 finalize_solution

    Returns:
        SolveReport: 有解时原始解已通过逐行校验

    Raises:
        SolverEnvironmentError: 求解器缺失或无法运行
        AdapterFaultError: 解未通过可行性校验或目标复核
    """
    options = options or SolveOptions()
    exe = adapter.check_available()
    workdir_ctx = tempfile.TemporaryDirectory(prefix="ventalloc_") if options.workdir is None else None
    workdir = Path(workdir_ctx.name) if workdir_ctx else Path(options.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    try:
        mps_path = workdir / "model.mps"
        sol_path = workdir / "model.sol"
        names = emit_mps(model, mps_path, write_names=options.keep_files)
        cmd = adapter.command(exe, mps_path, sol_path, options)
        logger.info(f"调用求解器: {' '.join(cmd)}")
        started = time.perf_counter()
        try:
            completed = subprocess.run(
                cmd, capture_output=True, text=True, timeout=options.time_limit + 60, check=False
            )
        except FileNotFoundError as e:
            raise SolverEnvironmentError(f"无法启动求解器 {exe}: {e}") from e
        except subprocess.TimeoutExpired:
            wall = time.perf_counter() - started
            logger.error(f"求解器超时 ({wall:.1f}s)")
            return SolveReport(SolveStatus.NOT_SOLVED, wall_time=wall, mip_gap=options.mip_gap,
                               time_limit=options.time_limit, solver=adapter.name, message="timeout")
        wall = time.perf_counter() - started
        logger.debug(completed.stdout[-2000:] if completed.stdout else "")

        if not sol_path.exists():
            logger.error(f"求解器未生成解文件，返回码 {completed.returncode}: {completed.stderr.strip()}")
            return SolveReport(SolveStatus.ERROR, wall_time=wall, mip_gap=options.mip_gap,
                               time_limit=options.time_limit, solver=adapter.name,
                               message=completed.stderr.strip() or f"returncode {completed.returncode}")
        raw = adapter.parse_solution(sol_path, names, model.n_rows, model.n_cols)
    finally:
        if workdir_ctx is not None:
            workdir_ctx.cleanup()

    gap = raw.gap
    if gap is None and completed.stdout:
        found = _GAP_PATTERN.findall(completed.stdout)
        gap = float(found[-1]) if found else None

    report = SolveReport(
        raw.status, raw.objective, wall_time=wall, gap=gap, mip_gap=options.mip_gap,
        time_limit=options.time_limit, solver=adapter.name, message=raw.message,
    )
    if not raw.status.has_solution:
        logger.warning(f"求解状态 {raw.status.value}: {raw.message}")
        return report

    values = np.zeros(model.n_cols)
    missing = 0
    for j, original in enumerate(model.col_names):
        short = names.columns[original]
        if short in raw.values:
            values[j] = raw.values[short]
        elif original in raw.values:
            values[j] = raw.values[original]
        else:
            missing += 1
    if missing:
        logger.debug(f"解文件缺少 {missing} 列，按 0 处理")
    return finalize_solution(model, values, report, complete, options.feasibility_tol)


def finalize_solution(
    model: MilpModel,
    values: np.ndarray,
    report: SolveReport,
    complete: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    tol: float = Config.FEASIBILITY_TOL,
) -> SolveReport:
    """
    复核并回填解

    依次进行：
    1. 整数列取整，连续列保持求解器原值；
    2. 对取整后的原始解逐行校验；
    3. 若给出 complete，由取整后的分配重新仿真补全状态列，
       并要求求解器目标与仿真目标在 1e-6·(1+|z|) 内一致。

    Args:
        model: MILP 模型
        values: 求解器返回的解向量（按列顺序）
        report: 待回填的求解报告
        complete: 由取整后的解给出仿真补全解的回调
        tol: 可行性容差

    Raises:
        AdapterFaultError: 原始解违反约束，或目标与仿真结果不一致
    """
    integral = np.array([kind != CONTINUOUS for kind in model.col_kind], dtype=bool)
    rounded = np.where(integral, np.round(values), values)
    violations = model.check_solution(rounded, tol)
    if violations:
        worst = max(violations, key=lambda v: v.excess)
        logger.error(f"解校验失败: {len(violations)} 处违背，最大 {worst.row} 超出 {worst.excess:.3g}")
        raise AdapterFaultError(
            f"求解器返回的解违反 {len(violations)} 条约束，最大违背 {worst.row} ({worst.excess:.3g})"
        )
    claimed = model.objective_value(rounded)
    if complete is not None:
        completed = complete(rounded)
        simulated = model.objective_value(completed)
        if abs(claimed - simulated) > Config.OBJECTIVE_TOL * (1.0 + abs(simulated)):
            logger.error(f"目标值不一致: 求解器 {claimed!r}, 仿真 {simulated!r}")
            raise AdapterFaultError(
                f"求解器目标 {claimed:.10g} 与按其分配仿真的目标 {simulated:.10g} 不一致"
            )
        rounded = completed
    report.values = rounded
    report.objective = model.objective_value(rounded)
    report.plan = plan_from_values(model, rounded)
    return report


def plan_from_values(model: MilpModel, values: np.ndarray) -> Optional[AllocationPlan]:
    """从解向量取出 x[ω, j, r]；模型不含 x 列时返回 None"""
    dims = model.dims
    if "stages" not in dims:
        return None
    stages = tuple(dims["stages"])
    regions = tuple(dims["region_ids"])
    n_w = int(dims["n_scenarios"])
    x = np.zeros((n_w, len(stages), len(regions)), dtype=np.int64)
    for w in range(n_w):
        for j in range(len(stages)):
            for r in range(len(regions)):
                x[w, j, r] = int(round(values[model.var_index["x", w, j, r]]))
    return AllocationPlan(x, stages, regions)
